"""Dataset assembly: split policy, sample shards, and manifest.

Splits follow the standard protocol: every match-up is played on every map;
matches on the held-out test map go to the test split, and on the remaining
maps the last `val_repeats` repeats of each match-up go to validation with
the rest used for training.  Training windows overlap (stride 8) while
validation/test windows do not (stride 32), and only the training set is
flagged for mirror augmentation.

On disk a dataset is `manifest.jsonl` (one row per sample), `meta.json`
(split parameters and counts), `handcrafted.npz` (18 features per sample)
and `shards/<split>-NNN.npz` holding float16 `obs` and `act` arrays.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import codec, engine
from .codec import PlayTrace, SequenceSample

SPLITS = ("train", "val", "test")
SCHEMES = ("states", "actions", "joint")


class TraceInfo(NamedTuple):
    """Trace provenance without tensors; accepted wherever traces are split."""

    match_id: str
    map_variant: str
    pov: str
    agent_name: str
    opponent_name: str


@dataclass(frozen=True)
class SplitPolicy:
    test_map: str = "L"
    val_repeats: int = 2
    min_repeats: int = 10
    length: int = 32
    train_stride: int = 8
    eval_stride: int = 32


@dataclass
class SampleSet:
    """Samples of one split plus how they were cut and whether to augment."""

    split: str
    stride: int
    augment: bool
    samples: list[SequenceSample] = field(default_factory=list)

    def __len__(self):
        return len(self.samples)


_REPEAT_RE = re.compile(r"-r(\d+)$")


def match_repeat(match_id: str) -> int:
    m = _REPEAT_RE.search(match_id)
    if not m:
        raise ValueError(f"match id {match_id!r} lacks an -r<repeat> suffix")
    return int(m.group(1))


def _match_key(trace: PlayTrace) -> tuple[str, str, str]:
    if trace.pov == engine.P1:
        return (trace.map_variant, trace.agent_name, trace.opponent_name)
    return (trace.map_variant, trace.opponent_name, trace.agent_name)


def assign_splits(traces: list[PlayTrace], policy: SplitPolicy) -> dict[str, str]:
    """Map match_id -> split, enforcing the repeat quota per match-up."""
    matchups: dict[tuple, set[str]] = {}
    for trace in traces:
        matchups.setdefault(_match_key(trace), set()).add(trace.match_id)
    underfull = {key: len(ids) for key, ids in matchups.items()
                 if len(ids) < policy.min_repeats}
    if underfull:
        listing = ", ".join(f"{k[1]} vs {k[2]} on {k[0]} ({n} repeats)"
                            for k, n in sorted(underfull.items()))
        raise ValueError(f"match-ups below {policy.min_repeats} repeats: {listing}")
    assignment: dict[str, str] = {}
    for (variant, _, _), match_ids in matchups.items():
        ordered = sorted(match_ids, key=match_repeat)
        for rank, match_id in enumerate(ordered):
            if variant == policy.test_map:
                assignment[match_id] = "test"
            elif rank >= len(ordered) - policy.val_repeats:
                assignment[match_id] = "val"
            else:
                assignment[match_id] = "train"
    return assignment


def build_dataset(traces: list[PlayTrace],
                  policy: SplitPolicy = SplitPolicy()) -> dict[str, SampleSet]:
    """Window traces into {train, val, test} sample sets per the policy."""
    assignment = assign_splits(traces, policy)
    sets = {
        "train": SampleSet("train", policy.train_stride, augment=True),
        "val": SampleSet("val", policy.eval_stride, augment=False),
        "test": SampleSet("test", policy.eval_stride, augment=False),
    }
    for trace in traces:
        split = assignment[trace.match_id]
        target = sets[split]
        target.samples.extend(
            codec.extract_subsequences(trace, policy.length, target.stride))
    return sets


# -- persistence ----------------------------------------------------------

class DatasetWriter:
    """Streaming shard writer: add samples one at a time, then finalize.

    Keeps at most one shard per split buffered, so whole runs never need to
    hold the full dataset in memory.
    """

    def __init__(self, out_dir: str | Path, policy: SplitPolicy,
                 shard_size: int = 256):
        self.out = Path(out_dir)
        (self.out / "shards").mkdir(parents=True, exist_ok=True)
        self.policy = policy
        self.shard_size = shard_size
        self.buffers: dict[str, list[SequenceSample]] = {s: [] for s in SPLITS}
        self.rows: list[dict] = []
        self.feat_ids: list[str] = []
        self.feats: list[np.ndarray] = []
        self.counters: dict[str, int] = {s: 0 for s in SPLITS}

    def add(self, sample: SequenceSample, split: str) -> None:
        self.buffers[split].append(sample)
        if len(self.buffers[split]) >= self.shard_size:
            self._flush(split)

    def _flush(self, split: str) -> None:
        chunk = self.buffers[split]
        if not chunk:
            return
        shard_name = f"{split}-{self.counters[split]:04d}.npz"
        self.counters[split] += 1
        obs = np.stack([s.observations for s in chunk]).astype(np.float16)
        act = np.stack([s.actions for s in chunk]).astype(np.float16)
        np.savez_compressed(self.out / "shards" / shard_name, obs=obs, act=act)
        for i, sample in enumerate(chunk):
            self.rows.append({
                "sample_id": sample.sample_id, "trace_id": sample.trace_id,
                "split": split, "label": sample.label, "map": sample.map_variant,
                "side": sample.side, "slot": sample.slot, "offset": sample.offset,
                "shard": shard_name, "row": i,
            })
            self.feat_ids.append(sample.sample_id)
            self.feats.append(codec.handcrafted_features(sample))
        self.buffers[split] = []

    def finalize(self) -> dict:
        for split in SPLITS:
            self._flush(split)
        (self.out / "manifest.jsonl").write_text(
            "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.rows))
        features = (np.stack(self.feats) if self.feats
                    else np.empty((0, codec.N_HANDCRAFTED)))
        np.savez_compressed(self.out / "handcrafted.npz",
                            ids=np.array(self.feat_ids), features=features)
        counts = {s: sum(1 for r in self.rows if r["split"] == s) for s in SPLITS}
        meta = {"policy": asdict(self.policy), "counts": counts,
                "augment": {"train": True, "val": False, "test": False},
                "obs_channels": codec.OBS_CHANNELS,
                "act_channels": codec.ACT_CHANNELS,
                "resource_scale": codec.RESOURCE_SCALE,
                "max_attack_range": engine.load_stats().max_attack_range}
        (self.out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
        return meta


def write_dataset(sets: dict[str, SampleSet], out_dir: str | Path,
                  policy: SplitPolicy, shard_size: int = 256) -> dict:
    """Persist in-memory sample sets as a sharded dataset."""
    writer = DatasetWriter(out_dir, policy, shard_size)
    for split in SPLITS:
        if split in sets:
            for sample in sets[split].samples:
                writer.add(sample, split)
    return writer.finalize()


def iter_manifest(out_dir: str | Path):
    path = Path(out_dir) / "manifest.jsonl"
    for line in path.read_text().splitlines():
        if line.strip():
            yield json.loads(line)


def scheme_frames(obs: np.ndarray, act: np.ndarray, scheme: str) -> np.ndarray:
    """Channel stack for one scheme: states, actions, or both concatenated."""
    if scheme == "states":
        return obs
    if scheme == "actions":
        return act
    if scheme == "joint":
        return np.concatenate([obs, act], axis=-1)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def scheme_channels(scheme: str) -> int:
    return {"states": codec.OBS_CHANNELS, "actions": codec.ACT_CHANNELS,
            "joint": codec.OBS_CHANNELS + codec.ACT_CHANNELS}[scheme]


class ShardedSplit:
    """Shard-by-shard reader for one split of a persisted dataset."""

    def __init__(self, out_dir: str | Path, split: str):
        self.out_dir = Path(out_dir)
        self.split = split
        self.rows = [r for r in iter_manifest(out_dir) if r["split"] == split]
        self.by_shard: dict[str, list[dict]] = {}
        for row in self.rows:
            self.by_shard.setdefault(row["shard"], []).append(row)

    def __len__(self):
        return len(self.rows)

    def shards(self, order: list[str] | None = None):
        """Yield (rows, obs, act) per shard; arrays are float32."""
        names = order if order is not None else sorted(self.by_shard)
        for name in names:
            with np.load(self.out_dir / "shards" / name) as data:
                obs = data["obs"].astype(np.float32)
                act = data["act"].astype(np.float32)
            rows = sorted(self.by_shard[name], key=lambda r: r["row"])
            yield rows, obs, act

    def load_all(self) -> tuple[list[dict], np.ndarray, np.ndarray]:
        """Materialize the whole split (use only for small splits)."""
        all_rows, all_obs, all_act = [], [], []
        for rows, obs, act in self.shards():
            all_rows.extend(rows)
            all_obs.append(obs[[r["row"] for r in rows]])
            all_act.append(act[[r["row"] for r in rows]])
        if not all_rows:
            return [], np.empty((0,)), np.empty((0,))
        return all_rows, np.concatenate(all_obs), np.concatenate(all_act)


def load_handcrafted(out_dir: str | Path) -> tuple[list[str], np.ndarray]:
    data = np.load(Path(out_dir) / "handcrafted.npz")
    return [str(i) for i in data["ids"]], data["features"]
