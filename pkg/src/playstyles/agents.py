"""Scripted and sampling-based game-playing policies.

The default roster pairs the classic baseline behaviours (passive, random,
biased random, worker rush, light rush, naive Monte Carlo sampling) with
parameterized variants (heavy/ranged rush, greedy economy, defensive turtle)
so labelled traces come from ten distinct styles.
"""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from importlib import resources as importlib_resources
from pathlib import Path

from . import engine
from .engine import DIRECTIONS, DIR_DELTA, GameState, Unit, UnitCommand


@dataclass(frozen=True)
class AgentSpec:
    """A named, seeded policy configuration (the clustering ground truth)."""

    name: str
    policy: str
    params: dict = field(default_factory=dict, hash=False)
    seed: int = 0


def _derive_seed(agent_seed: int, match_seed: int, player: str) -> int:
    digest = hashlib.sha256(f"{agent_seed}:{match_seed}:{player}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def build_policy(spec: AgentSpec, match_seed: int = 0, player: str = engine.P1):
    """Instantiate the policy behind a spec with a per-match derived seed."""
    cls = POLICIES.get(spec.policy)
    if cls is None:
        raise ValueError(f"unknown policy {spec.policy!r}; known: {sorted(POLICIES)}")
    return cls(params=spec.params,
               rng=random.Random(_derive_seed(spec.seed, match_seed, player)))


def make_roster(config) -> list[AgentSpec]:
    """Turn a roster config (list of agent dicts) into AgentSpecs."""
    entries = config["agents"] if isinstance(config, dict) else config
    if len(entries) < 2:
        raise ValueError("roster needs at least 2 agents")
    specs = []
    names = set()
    for entry in entries:
        spec = AgentSpec(entry["name"], entry["policy"],
                         dict(entry.get("params", {})), int(entry.get("seed", 0)))
        if spec.name in names:
            raise ValueError(f"duplicate agent name {spec.name!r}")
        names.add(spec.name)
        if spec.policy not in POLICIES:
            raise ValueError(f"unknown policy {spec.policy!r} for agent {spec.name!r}")
        specs.append(spec)
    return specs


def load_roster(path: str | Path | None = None) -> list[AgentSpec]:
    """Roster from a JSON file; the packaged default has 10 agents."""
    if path is None:
        text = importlib_resources.files("playstyles.data").joinpath("roster.json").read_text()
    else:
        text = Path(path).read_text()
    return make_roster(json.loads(text))


# -- shared behaviour helpers --------------------------------------------

def _idle_units(state: GameState, player: str) -> list[Unit]:
    return sorted((u for u in state.player_units(player) if u.busy is None),
                  key=lambda u: u.id)


def _enemies(state: GameState, player: str) -> list[Unit]:
    return [u for u in state.units.values()
            if u.owner is not None and u.owner != player]


def _nearest(units, x: int, y: int) -> Unit | None:
    return min(units, key=lambda u: (abs(u.x - x) + abs(u.y - y), u.id), default=None)


def _free_dir(state: GameState, unit: Unit, direction: str) -> bool:
    dx, dy = DIR_DELTA[direction]
    tx, ty = unit.x + dx, unit.y + dy
    return state.in_bounds(tx, ty) and state.unit_at(tx, ty) is None


def _move_toward(state: GameState, unit: Unit, tx: int, ty: int) -> UnitCommand | None:
    """Greedy step toward (tx, ty); sidesteps on the other axis when blocked."""
    dx, dy = tx - unit.x, ty - unit.y
    prefs = []
    if dx:
        prefs.append(("E" if dx > 0 else "W", abs(dx)))
    if dy:
        prefs.append(("S" if dy > 0 else "N", abs(dy)))
    prefs.sort(key=lambda p: -p[1])
    for d, _ in prefs:
        if _free_dir(state, unit, d):
            return UnitCommand(unit.id, "move", direction=d)
    tried = {d for d, _ in prefs}
    side = [d for d in DIRECTIONS if d not in tried]
    if unit.id % 2:
        side.reverse()
    for d in side:
        if _free_dir(state, unit, d):
            return UnitCommand(unit.id, "move", direction=d)
    return None


def _attack_in_range(state: GameState, unit: Unit) -> UnitCommand | None:
    best = None
    for dx, dy in state.stats.attack_offsets(unit.kind):
        target = state.unit_at(unit.x + dx, unit.y + dy)
        if target is not None and target.owner not in (None, unit.owner):
            key = (dx * dx + dy * dy, target.id)
            if best is None or key < best[0]:
                best = (key, UnitCommand(unit.id, "attack", attack_offset=(dx, dy)))
    return best[1] if best else None


def _fight(state: GameState, unit: Unit, player: str) -> UnitCommand | None:
    cmd = _attack_in_range(state, unit)
    if cmd is not None:
        return cmd
    target = _nearest(_enemies(state, player), unit.x, unit.y)
    if target is None:
        return None
    return _move_toward(state, unit, target.x, target.y)


def _adjacent_dir(unit: Unit, target: Unit) -> str | None:
    for d, (dx, dy) in DIR_DELTA.items():
        if (unit.x + dx, unit.y + dy) == (target.x, target.y):
            return d
    return None


def _harvest_cycle(state: GameState, unit: Unit, player: str) -> UnitCommand | None:
    if unit.carried > 0:
        base = _nearest([u for u in state.player_units(player) if u.kind == "base"],
                        unit.x, unit.y)
        if base is None:
            return None
        d = _adjacent_dir(unit, base)
        if d is not None:
            return UnitCommand(unit.id, "return", direction=d)
        return _move_toward(state, unit, base.x, base.y)
    mines = [u for u in state.units.values() if u.kind == "resource" and u.resources > 0]
    mine = _nearest(mines, unit.x, unit.y)
    if mine is None:
        return None
    d = _adjacent_dir(unit, mine)
    if d is not None:
        return UnitCommand(unit.id, "harvest", direction=d)
    return _move_toward(state, unit, mine.x, mine.y)


def _spawn(state: GameState, producer: Unit, kind: str,
           toward: tuple[int, int] | None) -> UnitCommand | None:
    """Produce `kind` into a free adjacent cell, preferring cells near `toward`."""
    dirs = [d for d in DIRECTIONS if _free_dir(state, producer, d)]
    if not dirs:
        return None
    if toward is not None:
        tx, ty = toward

        def dist(d):
            dx, dy = DIR_DELTA[d]
            return abs(producer.x + dx - tx) + abs(producer.y + dy - ty)

        dirs.sort(key=lambda d: (dist(d), DIRECTIONS.index(d)))
    return UnitCommand(producer.id, "produce", direction=dirs[0], produce_kind=kind)


def _enemy_anchor(state: GameState, player: str) -> tuple[int, int] | None:
    foes = _enemies(state, player)
    bases = [u for u in foes if u.kind == "base"]
    anchor = bases[0] if bases else (foes[0] if foes else None)
    return (anchor.x, anchor.y) if anchor else None


def sample_commands(state: GameState, player: str, rng: random.Random,
                    weights: dict[str, float] | None = None) -> set[UnitCommand]:
    """One random command per idle unit, respecting the joint resource budget.

    Produce options whose cost exceeds what is left after earlier sampled
    produces are dropped, so the joint set always assigns cleanly.
    """
    budget = state.resources[player]
    out: set[UnitCommand] = set()
    for unit in _idle_units(state, player):
        options = [c for c in engine.unit_legal_commands(state, player, unit)
                   if c.action != "produce"
                   or state.stats.cost(c.produce_kind) <= budget]
        if not options:
            continue
        if weights is None:
            cmd = rng.choice(sorted(options, key=_cmd_key))
        else:
            ordered = sorted(options, key=_cmd_key)
            cmd = rng.choices(ordered, [weights.get(c.action, 1.0) for c in ordered])[0]
        if cmd.action == "produce":
            budget -= state.stats.cost(cmd.produce_kind)
        if cmd.action != "noop":
            out.add(cmd)
    return out


def _cmd_key(c: UnitCommand):
    return (c.unit_id, c.action, c.direction or "", c.produce_kind or "",
            c.attack_offset or (0, 0))


# -- policies -------------------------------------------------------------

class Policy:
    """Base: stateless between calls except the seeded RNG."""

    defaults: dict = {}

    def __init__(self, params: dict | None = None, rng: random.Random | None = None):
        self.params = {**self.defaults, **(params or {})}
        self.rng = rng if rng is not None else random.Random(0)

    def act(self, state: GameState, player: str) -> set[UnitCommand]:
        raise NotImplementedError


class PassiveAI(Policy):
    """Never issues a command."""

    def act(self, state, player):
        return set()


class RandomAI(Policy):
    """Uniform choice among each idle unit's legal commands."""

    def act(self, state, player):
        return sample_commands(state, player, self.rng)


class RandomBiasedAI(Policy):
    """Random with action-type weights favouring attack/harvest/return."""

    defaults = {"weights": {"attack": 5, "harvest": 5, "return": 5,
                            "move": 1, "produce": 1, "noop": 1}}

    def act(self, state, player):
        return sample_commands(state, player, self.rng, weights=self.params["weights"])


class WorkerRush(Policy):
    """Mass workers; one harvests, the rest swarm the nearest enemy."""

    def act(self, state, player):
        cmds: set[UnitCommand] = set()
        budget = state.resources[player]
        anchor = _enemy_anchor(state, player)
        workers = sorted((u for u in state.player_units(player) if u.kind == "worker"),
                         key=lambda u: u.id)
        harvester_id = workers[0].id if workers else None
        for unit in _idle_units(state, player):
            cmd = None
            if unit.kind == "base" and budget >= state.stats.cost("worker"):
                cmd = _spawn(state, unit, "worker", anchor)
                if cmd is not None:
                    budget -= state.stats.cost("worker")
            elif unit.kind == "worker":
                if unit.id == harvester_id:
                    cmd = _harvest_cycle(state, unit, player) or _fight(state, unit, player)
                else:
                    cmd = _fight(state, unit, player)
            if cmd is not None:
                cmds.add(cmd)
        return cmds


class UnitRush(Policy):
    """Build one barracks, stream out one military kind, attack with it.

    `military` selects the produced kind, so the same behaviour gives the
    light/heavy/ranged rush variants.
    """

    defaults = {"military": "light", "max_workers": 2}

    def act(self, state, player):
        cmds: set[UnitCommand] = set()
        stats = state.stats
        budget = state.resources[player]
        military = self.params["military"]
        anchor = _enemy_anchor(state, player)
        workers = sorted((u for u in state.player_units(player) if u.kind == "worker"),
                         key=lambda u: u.id)
        harvester_id = workers[0].id if workers else None
        has_barracks = any(u.kind == "barracks" for u in state.player_units(player))
        building = has_barracks or any(
            u.busy is not None and u.busy.action == "produce"
            and u.busy.produce_kind == "barracks"
            for u in state.player_units(player))
        for unit in _idle_units(state, player):
            cmd = None
            if unit.kind == "base":
                reserve = 0 if building else stats.cost("barracks")
                if (len(workers) < self.params["max_workers"]
                        and budget >= stats.cost("worker") + reserve):
                    cmd = _spawn(state, unit, "worker", anchor)
                    if cmd is not None:
                        budget -= stats.cost("worker")
            elif unit.kind == "barracks":
                if budget >= stats.cost(military):
                    cmd = _spawn(state, unit, military, anchor)
                    if cmd is not None:
                        budget -= stats.cost(military)
            elif unit.kind == "worker":
                if unit.id == harvester_id:
                    cmd = _harvest_cycle(state, unit, player)
                elif not building and budget >= stats.cost("barracks"):
                    cmd = _spawn(state, unit, "barracks", None)
                    if cmd is not None:
                        budget -= stats.cost("barracks")
                        building = True
                else:
                    cmd = _fight(state, unit, player)
            else:
                cmd = _fight(state, unit, player)
            if cmd is not None:
                cmds.add(cmd)
        return cmds


class EconGreedy(Policy):
    """All-in economy: several harvesting workers, no military, no attacks
    beyond opportunistic swings at adjacent enemies."""

    defaults = {"target_workers": 4}

    def act(self, state, player):
        cmds: set[UnitCommand] = set()
        budget = state.resources[player]
        n_workers = sum(1 for u in state.player_units(player) if u.kind == "worker")
        for unit in _idle_units(state, player):
            cmd = None
            if unit.kind == "base":
                if n_workers < self.params["target_workers"] and budget >= state.stats.cost("worker"):
                    mines = [u for u in state.units.values()
                             if u.kind == "resource" and u.resources > 0]
                    mine = _nearest(mines, unit.x, unit.y)
                    cmd = _spawn(state, unit, "worker",
                                 (mine.x, mine.y) if mine else None)
                    if cmd is not None:
                        budget -= state.stats.cost("worker")
                        n_workers += 1
            elif unit.kind == "worker":
                cmd = _attack_in_range(state, unit) or _harvest_cycle(state, unit, player)
            if cmd is not None:
                cmds.add(cmd)
        return cmds


class DefensiveTurtle(Policy):
    """Harvest, keep a small garrison, and only engage intruders near home."""

    defaults = {"military": "heavy", "guards": 2, "alert_radius": 5, "max_workers": 2}

    def act(self, state, player):
        cmds: set[UnitCommand] = set()
        stats = state.stats
        budget = state.resources[player]
        base = next((u for u in state.player_units(player) if u.kind == "base"), None)
        military = self.params["military"]
        workers = sorted((u for u in state.player_units(player) if u.kind == "worker"),
                         key=lambda u: u.id)
        harvester_id = workers[0].id if workers else None
        guards = sum(1 for u in state.player_units(player) if u.kind == military)
        has_barracks = any(u.kind == "barracks" for u in state.player_units(player))
        building = has_barracks or any(
            u.busy is not None and u.busy.action == "produce"
            and u.busy.produce_kind == "barracks"
            for u in state.player_units(player))
        for unit in _idle_units(state, player):
            cmd = None
            if unit.kind == "base":
                reserve = 0 if building else stats.cost("barracks")
                if (len(workers) < self.params["max_workers"]
                        and budget >= stats.cost("worker") + reserve):
                    cmd = _spawn(state, unit, "worker", None)
                    if cmd is not None:
                        budget -= stats.cost("worker")
            elif unit.kind == "barracks":
                if guards < self.params["guards"] and budget >= stats.cost(military):
                    cmd = _spawn(state, unit, military, None)
                    if cmd is not None:
                        budget -= stats.cost(military)
                        guards += 1
            elif unit.kind == "worker":
                if unit.id != harvester_id and not building and budget >= stats.cost("barracks"):
                    cmd = _spawn(state, unit, "barracks", None)
                    if cmd is not None:
                        budget -= stats.cost("barracks")
                        building = True
                else:
                    cmd = _harvest_cycle(state, unit, player)
            else:
                cmd = _attack_in_range(state, unit)
                if cmd is None and base is not None:
                    intruders = [e for e in _enemies(state, player)
                                 if abs(e.x - base.x) + abs(e.y - base.y)
                                 <= self.params["alert_radius"]]
                    target = _nearest(intruders, unit.x, unit.y)
                    if target is not None:
                        cmd = _move_toward(state, unit, target.x, target.y)
            if cmd is not None:
                cmds.add(cmd)
        return cmds


def _material(state: GameState, player: str) -> float:
    total = float(state.resources[player])
    for u in state.player_units(player):
        total += state.stats.cost(u.kind) + u.carried
    return total


class NaiveMCTS(Policy):
    """Budgeted naive sampling: per-unit epsilon-greedy arms scored by
    random playouts with a depth cap."""

    defaults = {"playouts": 100, "depth": 100, "epsilon": 0.25}

    def act(self, state, player):
        units = _idle_units(state, player)
        if not units:
            return set()
        candidates = {
            u.id: sorted(engine.unit_legal_commands(state, player, u), key=_cmd_key)
            for u in units
        }
        if all(len(opts) <= 1 for opts in candidates.values()):
            return set()
        counts = {uid: [0] * len(opts) for uid, opts in candidates.items()}
        totals = {uid: [0.0] * len(opts) for uid, opts in candidates.items()}
        for _ in range(self.params["playouts"]):
            choice = self._pick(state, player, candidates, counts, totals,
                                self.params["epsilon"])
            value = self._playout(state, player,
                                  {candidates[uid][i] for uid, i in choice.items()})
            for uid, i in choice.items():
                counts[uid][i] += 1
                totals[uid][i] += value
        best = self._pick(state, player, candidates, counts, totals, 0.0)
        return {candidates[uid][i] for uid, i in best.items()
                if candidates[uid][i].action != "noop"}

    def _pick(self, state, player, candidates, counts, totals,
              epsilon: float) -> dict[int, int]:
        budget = state.resources[player]
        choice: dict[int, int] = {}
        for uid in sorted(candidates):
            opts = candidates[uid]
            affordable = [i for i, c in enumerate(opts)
                          if c.action != "produce"
                          or state.stats.cost(c.produce_kind) <= budget]
            tried = [i for i in affordable if counts[uid][i] > 0]
            if not tried or self.rng.random() < epsilon:
                i = self.rng.choice(affordable)
            else:
                i = max(tried, key=lambda j: (totals[uid][j] / counts[uid][j], -j))
            if opts[i].action == "produce":
                budget -= state.stats.cost(opts[i].produce_kind)
            choice[uid] = i
        return choice

    def _playout(self, root: GameState, player: str,
                 my_cmds: set[UnitCommand]) -> float:
        sim = root.clone()
        opp = engine.P2 if player == engine.P1 else engine.P1
        for t in range(self.params["depth"] + 1):
            mine = my_cmds if t == 0 else sample_commands(sim, player, self.rng)
            theirs = sample_commands(sim, opp, self.rng)
            if player == engine.P1:
                engine.advance(sim, mine, theirs)
            else:
                engine.advance(sim, theirs, mine)
            result = engine.outcome(sim)
            if result != "ongoing":
                if result == "draw":
                    return 0.0
                won = (result == "p1_wins") == (player == engine.P1)
                return 1000.0 if won else -1000.0
        return _material(sim, player) - _material(sim, opp)


class CrashAfter(Policy):
    """Fault-injection policy: plays randomly, then raises. Used to exercise
    the pipeline's crashed-agent handling."""

    defaults = {"calls": 3}

    def __init__(self, params=None, rng=None):
        super().__init__(params, rng)
        self.calls = 0

    def act(self, state, player):
        self.calls += 1
        if self.calls > self.params["calls"]:
            raise RuntimeError("injected agent crash")
        return sample_commands(state, player, self.rng)


POLICIES = {
    "passive": PassiveAI,
    "random": RandomAI,
    "random_biased": RandomBiasedAI,
    "worker_rush": WorkerRush,
    "unit_rush": UnitRush,
    "econ_greedy": EconGreedy,
    "turtle": DefensiveTurtle,
    "naive_mcts": NaiveMCTS,
    "crash_after": CrashAfter,
}
