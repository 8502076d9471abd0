"""Match execution and replay files.

A replay is a line-delimited JSON record of everything needed to re-simulate
a match bit-for-bit: a header (map variant, seed, agent names, tick cap),
one line per tick that had commands, and an end line with the outcome.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

from . import engine
from .engine import GameState, UnitCommand


@dataclass
class MatchRecord:
    """A finished (or re-loadable) match: enough to replay it exactly."""

    variant: str
    seed: int
    agents: tuple[str, str]
    max_ticks: int
    stats_version: int
    outcome: str = "ongoing"
    ticks: int = 0
    # tick -> (p1 commands, p2 commands); only ticks with at least one command
    commands: dict[int, tuple[list[UnitCommand], list[UnitCommand]]] = field(default_factory=dict)

    def save(self, path: str | Path) -> None:
        lines = [json.dumps({
            "type": "header", "variant": self.variant, "seed": self.seed,
            "agents": list(self.agents), "max_ticks": self.max_ticks,
            "stats_version": self.stats_version,
        }, sort_keys=True)]
        for tick in sorted(self.commands):
            p1, p2 = self.commands[tick]
            lines.append(json.dumps({
                "type": "tick", "t": tick,
                "p1": [c.to_dict() for c in p1],
                "p2": [c.to_dict() for c in p2],
            }, sort_keys=True))
        lines.append(json.dumps({"type": "end", "outcome": self.outcome,
                                 "ticks": self.ticks}, sort_keys=True))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "MatchRecord":
        record = None
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            if obj["type"] == "header":
                record = cls(obj["variant"], obj["seed"], tuple(obj["agents"]),
                             obj["max_ticks"], obj["stats_version"])
            elif obj["type"] == "tick":
                record.commands[obj["t"]] = (
                    [UnitCommand.from_dict(c) for c in obj["p1"]],
                    [UnitCommand.from_dict(c) for c in obj["p2"]],
                )
            elif obj["type"] == "end":
                record.outcome = obj["outcome"]
                record.ticks = obj["ticks"]
        if record is None:
            raise ValueError(f"no replay header in {path}")
        return record


def run_match(policy1, policy2, variant: str, max_ticks: int = 2000,
              seed: int = 0, agent_names: tuple[str, str] = ("p1", "p2"),
              on_tick: Callable[[GameState, list, list], None] | None = None) -> MatchRecord:
    """Play two policies against each other until the game resolves.

    Policies are called only on ticks where they have at least one idle
    unit.  `on_tick` (if given) sees the pre-step state plus both command
    lists for every tick that had any command.
    """
    state = engine.generate_map(variant, max_ticks=max_ticks)
    record = MatchRecord(variant, seed, agent_names, max_ticks,
                         state.stats.version)
    while engine.outcome(state) == "ongoing":
        cmds = {}
        for player, policy in ((engine.P1, policy1), (engine.P2, policy2)):
            if any(u.busy is None for u in state.player_units(player)):
                cmds[player] = sorted(policy.act(state, player),
                                      key=lambda c: c.unit_id)
            else:
                cmds[player] = []
        p1_cmds, p2_cmds = cmds[engine.P1], cmds[engine.P2]
        if p1_cmds or p2_cmds:
            record.commands[state.tick] = (p1_cmds, p2_cmds)
            if on_tick is not None:
                on_tick(state, p1_cmds, p2_cmds)
        engine.advance(state, p1_cmds, p2_cmds)
    record.outcome = engine.outcome(state)
    record.ticks = state.tick
    return record


def resimulate(record: MatchRecord) -> Iterator[tuple[GameState, list, list]]:
    """Yield (pre-step state, p1 commands, p2 commands) for every tick.

    The final yielded state is terminal with empty command lists, so
    consumers see the end position too.
    """
    state = engine.generate_map(record.variant, max_ticks=record.max_ticks)
    while engine.outcome(state) == "ongoing":
        p1_cmds, p2_cmds = record.commands.get(state.tick, ([], []))
        yield state, p1_cmds, p2_cmds
        engine.advance(state, p1_cmds, p2_cmds)
    yield state, [], []


def final_state(record: MatchRecord) -> GameState:
    """Re-simulate to the terminal state."""
    state = None
    for state, _, _ in resimulate(record):
        pass
    return state
