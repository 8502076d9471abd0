"""Staged experiment pipeline: simulate -> encode -> train -> embed ->
cluster -> report (-> serve).

Every stage reads its predecessor's manifest, hashes its own inputs, and
skips work when nothing changed, so interrupted runs resume cleanly and
unchanged reruns are no-ops.  All randomness derives from the global seed,
making two runs with the same config byte-identical at the report stage.

Artifact layout under the output directory:

    config.json                resolved pipeline configuration
    matches.jsonl              one line per simulated match
    replays/<match_id>.jsonl   re-simulatable command streams
    dataset/                   sample shards + manifest (see dataset module)
    models/<scheme>.pt         checkpoints with embedded model config
    embeddings/<scheme>.npz    ids, metadata, and latent vectors
    reports/<scheme>-clusters.json   per-group k-means reports
    reports/<scheme>-reduced.npz     PCA-reduced vectors used for t-SNE
    reports/<scheme>-tsne.json       2-D coordinates per coherent group
    reports/projection-<scheme>.json points+labels+clusters for the explorer
    reports/table.txt, table.json    aggregate metric table
    manifests/<stage>.json     stage completion markers with input hashes
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import agents, cluster, codec, dataset, engine
from .agents import AgentSpec
from .autoencoder import ModelConfig, encode_frames, load_checkpoint, save_checkpoint, train
from .cluster import EmbeddingSet
from .dataset import DatasetWriter, ShardedSplit, SplitPolicy, TraceInfo
from .match import MatchRecord, run_match


class PipelineError(Exception):
    pass


@dataclass
class PipelineConfig:
    out: str
    maps: list[str] = field(default_factory=lambda: list(engine.MAP_VARIANTS))
    repeats: int = 10
    seed: int = 0
    max_ticks: int = 2000
    roster_path: str | None = None
    agents: list[str] | None = None          # roster subset by name
    schemes: list[str] = field(default_factory=lambda: ["actions"])
    split: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    cluster: dict = field(default_factory=dict)
    shard_size: int = 256
    serve_scheme: str | None = None

    def __post_init__(self):
        unknown = [m for m in self.maps if m not in engine.MAP_VARIANTS]
        if unknown:
            raise PipelineError(f"unknown map variants {unknown}")
        policy = self.split_policy()
        if self.repeats < policy.min_repeats:
            raise PipelineError(
                f"repeats={self.repeats} below split min_repeats={policy.min_repeats}")

    def split_policy(self) -> SplitPolicy:
        return SplitPolicy(**self.split)

    def roster(self) -> list[AgentSpec]:
        specs = agents.load_roster(self.roster_path)
        if self.agents is not None:
            by_name = {s.name: s for s in specs}
            missing = [n for n in self.agents if n not in by_name]
            if missing:
                raise PipelineError(f"agents not in roster: {missing}")
            specs = [by_name[n] for n in self.agents]
        if len(specs) < 2:
            raise PipelineError("need at least 2 agents")
        return specs

    def model_config(self, scheme: str) -> ModelConfig:
        params = dict(self.model.get("defaults", {}))
        params.update(self.model.get(scheme, {}))
        params.setdefault("seed", derive_int("train", self.seed, scheme))
        return ModelConfig(scheme=scheme, **params)

    def cluster_params(self) -> dict:
        params = {"ks": [10, 13, 16], "pca_dims": 64, "slots": [0],
                  "tsne_perplexity": 30.0, "tsne_iterations": 1000}
        params.update(self.cluster)
        return params

    def resolved(self) -> dict:
        data = asdict(self)
        data["roster"] = [asdict(s) for s in self.roster()]
        data["split"] = asdict(self.split_policy())
        data["cluster"] = self.cluster_params()
        return data


def load_config(path: str | Path, **overrides) -> PipelineConfig:
    data = json.loads(Path(path).read_text())
    data.update({k: v for k, v in overrides.items() if v is not None})
    config = PipelineConfig(**data)
    if config.roster_path is not None and not Path(config.roster_path).exists():
        raise PipelineError(f"roster file not found: {config.roster_path}")
    return config


def derive_int(*parts) -> int:
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2 ** 31)


def _hash_obj(obj) -> str:
    return hashlib.sha256(
        json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


class Stage:
    """Idempotence guard: run the body only when inputs changed."""

    def __init__(self, out_dir: Path, name: str, input_hash: str, log=print):
        self.path = out_dir / "manifests" / f"{name}.json"
        self.name = name
        self.input_hash = input_hash
        self.log = log or (lambda *_: None)

    def current(self) -> bool:
        if not self.path.exists():
            return False
        try:
            manifest = json.loads(self.path.read_text())
        except json.JSONDecodeError:
            return False
        if manifest.get("input_hash") != self.input_hash:
            return False
        outputs = manifest.get("outputs", [])
        return all((self.path.parent.parent / o).exists() for o in outputs)

    def done(self, outputs: list[str]) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(
            {"stage": self.name, "input_hash": self.input_hash,
             "outputs": outputs}, indent=1, sort_keys=True))

    def hash(self) -> str:
        if not self.path.exists():
            raise PipelineError(
                f"stage '{self.name}' has not run; missing manifest {self.path}")
        return json.loads(self.path.read_text())["input_hash"]


class _CrashGuard:
    """Wraps a policy; after the first exception the side plays passively,
    mirroring how crashed agents look in collected data."""

    def __init__(self, policy):
        self.policy = policy
        self.error: str | None = None

    def act(self, state, player):
        if self.error is not None:
            return set()
        try:
            return self.policy.act(state, player)
        except Exception as exc:  # deliberate: record and continue the match
            self.error = f"{type(exc).__name__}: {exc}"
            return set()


# -- stages -----------------------------------------------------------------

def cmd_simulate(config: PipelineConfig, log=print) -> Path:
    """Play every ordered match-up x map x repeat; store replays."""
    log = log or (lambda *_: None)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "replays").mkdir(exist_ok=True)
    (out / "config.json").write_text(
        json.dumps(config.resolved(), indent=1, sort_keys=True))
    roster = config.roster()
    stage = Stage(out, "simulate", _hash_obj({
        "maps": config.maps, "repeats": config.repeats, "seed": config.seed,
        "max_ticks": config.max_ticks, "roster": [asdict(s) for s in roster],
    }), log)
    matches_path = out / "matches.jsonl"
    if stage.current():
        log(f"simulate: up to date ({matches_path})")
        return matches_path

    done_ids = set()
    lines = []
    if matches_path.exists():
        for line in matches_path.read_text().splitlines():
            try:
                entry = json.loads(line)
            except json.JSONDecodeError:
                continue
            if (out / "replays" / f"{entry['match_id']}.jsonl").exists():
                done_ids.add(entry["match_id"])
                lines.append(line)

    total = 0
    with matches_path.open("w") as fh:
        for line in lines:
            fh.write(line + "\n")
        for variant in config.maps:
            for spec1 in roster:
                for spec2 in roster:
                    for repeat in range(config.repeats):
                        total += 1
                        match_id = f"{variant}-{spec1.name}-{spec2.name}-r{repeat}"
                        if match_id in done_ids:
                            continue
                        entry = _play_one(config, spec1, spec2, variant,
                                          repeat, match_id, out)
                        fh.write(json.dumps(entry, sort_keys=True) + "\n")
                        fh.flush()
    log(f"simulate: {total} matches recorded in {matches_path}")
    stage.done(["matches.jsonl"])
    return matches_path


def _play_one(config, spec1, spec2, variant, repeat, match_id, out) -> dict:
    match_seed = derive_int("match", config.seed, match_id)
    guard1 = _CrashGuard(agents.build_policy(spec1, match_seed, engine.P1))
    guard2 = _CrashGuard(agents.build_policy(spec2, match_seed, engine.P2))
    record = run_match(guard1, guard2, variant, max_ticks=config.max_ticks,
                       seed=match_seed, agent_names=(spec1.name, spec2.name))
    record.save(out / "replays" / f"{match_id}.jsonl")
    return {
        "match_id": match_id, "variant": variant, "repeat": repeat,
        "agents": [spec1.name, spec2.name], "seed": match_seed,
        "outcome": record.outcome, "ticks": record.ticks,
        "crashed": {"p1": guard1.error, "p2": guard2.error},
    }


def _load_matches(out: Path) -> list[dict]:
    path = out / "matches.jsonl"
    if not path.exists():
        raise PipelineError(f"missing {path}; run the simulate stage first")
    entries = [json.loads(l) for l in path.read_text().splitlines() if l.strip()]
    return sorted(entries, key=lambda e: e["match_id"])


def cmd_encode(config: PipelineConfig, log=print) -> Path:
    """Re-simulate replays into tensors and write the sharded dataset."""
    log = log or (lambda *_: None)
    out = Path(config.out)
    policy = config.split_policy()
    upstream = Stage(out, "simulate", "", log).hash()
    stage = Stage(out, "encode", _hash_obj({
        "upstream": upstream, "split": asdict(policy),
        "shard_size": config.shard_size}), log)
    dataset_dir = out / "dataset"
    if stage.current():
        log(f"encode: up to date ({dataset_dir})")
        return dataset_dir

    entries = _load_matches(out)
    infos = []
    for entry in entries:
        a1, a2 = entry["agents"]
        infos.append(TraceInfo(entry["match_id"], entry["variant"],
                               engine.P1, a1, a2))
        infos.append(TraceInfo(entry["match_id"], entry["variant"],
                               engine.P2, a2, a1))
    assignment = dataset.assign_splits(infos, policy)

    writer = DatasetWriter(dataset_dir, policy, config.shard_size)
    strides = {"train": policy.train_stride, "val": policy.eval_stride,
               "test": policy.eval_stride}
    for entry in entries:
        record = MatchRecord.load(out / "replays" / f"{entry['match_id']}.jsonl")
        split = assignment[entry["match_id"]]
        for trace in codec.traces_from_record(record, entry["match_id"]):
            for sample in codec.extract_subsequences(trace, policy.length,
                                                     strides[split]):
                sample.observations = sample.observations.astype(np.float32)
                sample.actions = sample.actions.astype(np.float32)
                writer.add(sample, split)
    meta = writer.finalize()
    log(f"encode: dataset written to {dataset_dir} counts={meta['counts']}")
    stage.done(["dataset/manifest.jsonl", "dataset/meta.json",
                "dataset/handcrafted.npz"])
    return dataset_dir


def cmd_train(config: PipelineConfig, scheme: str, log=print) -> Path:
    """Fit the autoencoder for one scheme and checkpoint it."""
    log = log or (lambda *_: None)
    if scheme == "handcrafted":
        raise PipelineError("the handcrafted baseline is not trained")
    out = Path(config.out)
    model_config = config.model_config(scheme)
    upstream = Stage(out, "encode", "", log).hash()
    stage = Stage(out, f"train-{scheme}", _hash_obj({
        "upstream": upstream, "model": model_config.to_dict()}), log)
    checkpoint = out / "models" / f"{scheme}.pt"
    if stage.current():
        log(f"train[{scheme}]: up to date ({checkpoint})")
        return checkpoint

    train_split = ShardedSplit(out / "dataset", "train")
    val_split = ShardedSplit(out / "dataset", "val")
    result = train(model_config, train_split, val_split,
                   log=(lambda msg: log(f"train[{scheme}] {msg}")) if log else None)
    checkpoint.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(result, checkpoint)
    (out / "models" / f"{scheme}-history.json").write_text(json.dumps({
        "history": result.history, "best_epoch": result.best_epoch,
        "best_val_loss": result.best_val_loss}, indent=1, sort_keys=True))
    log(f"train[{scheme}]: best val loss {result.best_val_loss:.4f} "
        f"at epoch {result.best_epoch}")
    stage.done([f"models/{scheme}.pt", f"models/{scheme}-history.json"])
    return checkpoint


def cmd_embed(config: PipelineConfig, scheme: str, log=print) -> Path:
    """Encode every sample into its embedding vector file."""
    log = log or (lambda *_: None)
    out = Path(config.out)
    target = out / "embeddings" / f"{scheme}.npz"
    if scheme == "handcrafted":
        upstream = Stage(out, "encode", "", log).hash()
    else:
        upstream = Stage(out, f"train-{scheme}", "", log).hash()
    stage = Stage(out, f"embed-{scheme}", _hash_obj({"upstream": upstream}), log)
    if stage.current():
        log(f"embed[{scheme}]: up to date ({target})")
        return target

    target.parent.mkdir(parents=True, exist_ok=True)
    rows_all: list[dict] = []
    vectors: list[np.ndarray] = []
    if scheme == "handcrafted":
        ids, feats = dataset.load_handcrafted(out / "dataset")
        by_id = {r["sample_id"]: r for r in dataset.iter_manifest(out / "dataset")}
        rows_all = [by_id[i] for i in ids]
        vectors = [feats]
    else:
        model = load_checkpoint(out / "models" / f"{scheme}.pt").model
        for split in dataset.SPLITS:
            reader = ShardedSplit(out / "dataset", split)
            for rows, obs, act in reader.shards():
                frames = dataset.scheme_frames(obs, act, scheme)
                vectors.append(encode_frames(model, frames,
                                             model.config.batch_size))
                rows_all.extend(rows)
    matrix = np.concatenate(vectors) if vectors else np.empty((0, 0))
    np.savez_compressed(
        target,
        ids=np.array([r["sample_id"] for r in rows_all]),
        vectors=matrix.astype(np.float32),
        label=np.array([r["label"] for r in rows_all]),
        map=np.array([r["map"] for r in rows_all]),
        side=np.array([r["side"] for r in rows_all]),
        slot=np.array([r["slot"] for r in rows_all]),
        trace_id=np.array([r["trace_id"] for r in rows_all]),
        split=np.array([r["split"] for r in rows_all]),
    )
    log(f"embed[{scheme}]: {matrix.shape[0]} vectors -> {target}")
    stage.done([f"embeddings/{scheme}.npz"])
    return target


def load_embeddings(out_dir: str | Path, scheme: str) -> EmbeddingSet:
    with np.load(Path(out_dir) / "embeddings" / f"{scheme}.npz") as data:
        meta = [
            {"sample_id": str(i), "label": str(l), "map": str(m), "side": str(s),
             "slot": int(sl), "trace_id": str(t), "split": str(sp)}
            for i, l, m, s, sl, t, sp in zip(
                data["ids"], data["label"], data["map"], data["side"],
                data["slot"], data["trace_id"], data["split"])
        ]
        return EmbeddingSet(data["vectors"].astype(np.float64), meta)


def cmd_cluster(config: PipelineConfig, scheme: str, log=print) -> Path:
    """PCA-reduce, k-means per coherent group, metrics vs agent labels."""
    log = log or (lambda *_: None)
    out = Path(config.out)
    params = config.cluster_params()
    upstream = Stage(out, f"embed-{scheme}", "", log).hash()
    stage = Stage(out, f"cluster-{scheme}", _hash_obj({
        "upstream": upstream, "params": params, "seed": config.seed}), log)
    report_path = out / "reports" / f"{scheme}-clusters.json"
    if stage.current():
        log(f"cluster[{scheme}]: up to date ({report_path})")
        return report_path

    embeddings = load_embeddings(out, scheme)
    reduced = cluster.pca_reduce(embeddings, dims=params["pca_dims"])
    result = cluster.evaluate_all(
        reduced, ks=tuple(params["ks"]),
        seed=derive_int("cluster", config.seed, scheme),
        test_map=config.split_policy().test_map,
        slots=tuple(params["slots"]))
    report_path.parent.mkdir(parents=True, exist_ok=True)
    cluster.save_result(result, report_path)
    np.savez_compressed(out / "reports" / f"{scheme}-reduced.npz",
                        ids=np.array([m["sample_id"] for m in reduced.meta]),
                        vectors=reduced.vectors.astype(np.float32))
    for warning in result.skipped:
        log(f"cluster[{scheme}]: skipped {warning}")
    log(f"cluster[{scheme}]: {len(result.reports)} group reports -> {report_path}")
    stage.done([f"reports/{scheme}-clusters.json",
                f"reports/{scheme}-reduced.npz"])
    return report_path


def cmd_report(config: PipelineConfig, log=print) -> Path:
    """Aggregate table plus t-SNE projections for the explorer."""
    log = log or (lambda *_: None)
    out = Path(config.out)
    params = config.cluster_params()
    schemes = [s for s in list(config.schemes) + ["handcrafted"]
               if (out / "reports" / f"{s}-clusters.json").exists()]
    if not schemes:
        raise PipelineError("no cluster reports found; run the cluster stage first")
    upstream = {s: Stage(out, f"cluster-{s}", "", log).hash() for s in schemes}
    stage = Stage(out, "report", _hash_obj({
        "upstream": upstream, "params": params, "seed": config.seed}), log)
    table_path = out / "reports" / "table.txt"
    if stage.current():
        log(f"report: up to date ({table_path})")
        return table_path

    results = {s: cluster.load_result(out / "reports" / f"{s}-clusters.json")
               for s in schemes}
    table_text = cluster.render_table(results)
    table_path.write_text(table_text + "\n")
    rows = []
    for scheme in schemes:
        for k, cells in sorted(results[scheme]["aggregate"].items(),
                               key=lambda kv: int(kv[0])):
            rows.append({"scheme": scheme, "k": int(k),
                         "train_maps": cells["train_maps"],
                         "test_map": cells["test_map"]})
    (out / "reports" / "table.json").write_text(
        json.dumps({"rows": rows, "test_map": config.split_policy().test_map},
                   indent=1, sort_keys=True))

    outputs = ["reports/table.txt", "reports/table.json"]
    for scheme in schemes:
        projection = _project_scheme(config, out, scheme, results[scheme], params)
        path = out / "reports" / f"projection-{scheme}.json"
        path.write_text(json.dumps(projection, indent=1, sort_keys=True))
        outputs.append(f"reports/projection-{scheme}.json")
    log(f"report: table + {len(schemes)} projections -> {out / 'reports'}")
    log("\n" + table_text)
    stage.done(outputs)
    return table_path


def _project_scheme(config, out, scheme, result, params) -> dict:
    with np.load(out / "reports" / f"{scheme}-reduced.npz") as data:
        vec_by_id = {str(i): v for i, v in zip(data["ids"], data["vectors"])}
    embeddings = load_embeddings(out, scheme)
    reduced = EmbeddingSet(
        np.stack([vec_by_id[m["sample_id"]] for m in embeddings.meta]),
        embeddings.meta)
    clusters_by_id: dict[str, dict] = {}
    for report in result["reports"]:
        for sample_id, assignment in zip(report["sample_ids"],
                                         report["assignments"]):
            clusters_by_id.setdefault(sample_id, {})[str(report["k"])] = assignment
    groups_out = {}
    skipped = []
    for key, group in cluster.coherent_groups(reduced).items():
        if key[2] not in params["slots"]:
            continue
        name = ",".join(str(p) for p in key)
        if len(group) <= 3 * params["tsne_perplexity"]:
            skipped.append({"group": name, "reason":
                            f"{len(group)} points <= 3x perplexity "
                            f"{params['tsne_perplexity']}"})
            continue
        coords = cluster.tsne_project(
            group, perplexity=params["tsne_perplexity"],
            seed=derive_int("tsne", config.seed, scheme, name),
            iterations=params["tsne_iterations"])
        points = []
        for meta, (x, y) in zip(group.meta, coords):
            points.append({
                "id": meta["sample_id"], "x": float(x), "y": float(y),
                "label": meta["label"], "map": meta["map"], "side": meta["side"],
                "slot": meta["slot"], "trace_id": meta["trace_id"],
                "clusters": clusters_by_id.get(meta["sample_id"], {}),
            })
        groups_out[name] = points
    return {"scheme": scheme, "groups": groups_out, "skipped": skipped,
            "ks": [int(k) for k in params["ks"]]}


def run_all(config: PipelineConfig, log=print) -> None:
    """Convenience driver for the full pipeline (all configured schemes)."""
    cmd_simulate(config, log)
    cmd_encode(config, log)
    for scheme in config.schemes:
        cmd_train(config, scheme, log)
        cmd_embed(config, scheme, log)
        cmd_cluster(config, scheme, log)
    cmd_embed(config, "handcrafted", log)
    cmd_cluster(config, "handcrafted", log)
    cmd_report(config, log)
