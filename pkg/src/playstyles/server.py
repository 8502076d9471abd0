"""HTTP API for the embedding explorer.

Read-only endpoints over a finished pipeline's artifact directory:

    GET /api/schemes                         available schemes + groups
    GET /api/projection?group=A,p1,0&k=13    t-SNE points with labels/clusters
    GET /api/trace/{trace_id}/replay         full per-tick replay frames
    GET /api/metrics?scheme=actions          aggregate metric table rows

Replays are reconstructed on demand from stored command streams; the engine
is deterministic so nothing heavier than the replay file is persisted.  The
compiled explorer UI (if present) is served at /.
"""
from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles

from . import engine
from .match import MatchRecord


class ArtifactStore:
    """Lazy, cached reads of a pipeline output directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        if not self.root.exists():
            raise FileNotFoundError(f"artifact directory {self.root} not found")
        self._projections: dict[str, dict] = {}

    def schemes(self) -> list[str]:
        return sorted(p.name[len("projection-"):-len(".json")]
                      for p in (self.root / "reports").glob("projection-*.json"))

    def projection(self, scheme: str) -> dict:
        if scheme not in self._projections:
            path = self.root / "reports" / f"projection-{scheme}.json"
            if not path.exists():
                raise KeyError(scheme)
            self._projections[scheme] = json.loads(path.read_text())
        return self._projections[scheme]

    def table(self) -> dict:
        path = self.root / "reports" / "table.json"
        if not path.exists():
            raise FileNotFoundError(path)
        return json.loads(path.read_text())

    def replay_record(self, match_id: str) -> MatchRecord:
        path = self.root / "replays" / f"{match_id}.jsonl"
        if not path.exists():
            raise KeyError(match_id)
        return MatchRecord.load(path)


def replay_frames(record: MatchRecord) -> list[dict]:
    """One frame per simulated tick: the post-tick state plus the commands
    issued during that tick.  The last frame is the terminal position."""
    state = engine.generate_map(record.variant, max_ticks=record.max_ticks)
    frames = []
    while engine.outcome(state) == "ongoing":
        p1_cmds, p2_cmds = record.commands.get(state.tick, ([], []))
        engine.advance(state, p1_cmds, p2_cmds)
        frames.append({
            "tick": state.tick,
            "units": [state.units[uid].to_dict() for uid in sorted(state.units)],
            "commands": {"p1": [c.to_dict() for c in p1_cmds],
                         "p2": [c.to_dict() for c in p2_cmds]},
        })
    return frames


def create_app(artifacts: str | Path, ui_dir: str | Path | None = None) -> FastAPI:
    store = ArtifactStore(artifacts)
    app = FastAPI(title="playstyles explorer", version="0.1.0")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["GET"],
                       allow_headers=["*"])

    @app.get("/api/schemes")
    def schemes():
        out = {}
        for scheme in store.schemes():
            projection = store.projection(scheme)
            out[scheme] = {"groups": sorted(projection["groups"]),
                           "ks": projection["ks"]}
        return out

    @app.get("/api/projection")
    def projection(group: str = Query(..., description="map,side,slot"),
                   k: int = Query(...),
                   scheme: str | None = None):
        available = store.schemes()
        if not available:
            raise HTTPException(409, "no projections found; run the report stage")
        scheme = scheme or ("actions" if "actions" in available else available[0])
        try:
            data = store.projection(scheme)
        except KeyError:
            raise HTTPException(400, f"unknown scheme {scheme!r}; "
                                     f"available: {available}")
        groups = data["groups"]
        if group not in groups:
            raise HTTPException(
                404, f"unknown group {group!r}; available: {sorted(groups)}")
        if k not in data["ks"]:
            raise HTTPException(
                400, f"k={k} not clustered; available ks: {data['ks']}")
        points = [
            {**point, "cluster": point["clusters"].get(str(k))}
            for point in groups[group]
        ]
        return {"scheme": scheme, "group": group, "k": k, "points": points}

    @app.get("/api/trace/{trace_id}/replay")
    def replay(trace_id: str):
        if not (trace_id.endswith("-p1") or trace_id.endswith("-p2")):
            raise HTTPException(404, f"unknown trace {trace_id!r} "
                                     f"(expected <match_id>-p1 or -p2)")
        match_id, pov = trace_id[:-3], trace_id[-2:]
        try:
            record = store.replay_record(match_id)
        except KeyError:
            raise HTTPException(404, f"no replay for trace {trace_id!r}")
        frames = replay_frames(record)
        return {
            "trace_id": trace_id, "match_id": match_id, "pov": pov,
            "variant": record.variant, "agents": list(record.agents),
            "outcome": record.outcome, "ticks": record.ticks,
            "width": 12, "height": 12, "frames": frames,
        }

    @app.get("/api/metrics")
    def metrics(scheme: str):
        try:
            table = store.table()
        except FileNotFoundError:
            raise HTTPException(409, "no reports yet: run cmd_cluster first")
        rows = [r for r in table["rows"] if r["scheme"] == scheme]
        if not rows:
            known = sorted({r["scheme"] for r in table["rows"]})
            raise HTTPException(400, f"unknown scheme {scheme!r}; "
                                     f"available: {known}")
        return {"scheme": scheme, "test_map": table["test_map"], "rows": rows}

    ui = Path(ui_dir) if ui_dir else Path(artifacts) / "ui"
    if not ui.exists():
        bundled = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
        ui = bundled
    if ui.exists():
        app.mount("/", StaticFiles(directory=ui, html=True), name="ui")
    return app
