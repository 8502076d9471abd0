"""Deterministic desk-scale grid RTS engine.

Rules follow the common lightweight-RTS conventions: durative unit actions
(move/harvest/return/produce/attack) that take effect when their duration
elapses, a shared stockpile per player, and buildings that produce units into
adjacent cells.  Unit statistics live in ``data/unit_stats.json`` so the whole
balance table is versioned in one place.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources as importlib_resources
from typing import Iterator, Optional

P1 = "p1"
P2 = "p2"
PLAYERS = (P1, P2)

KINDS = ("resource", "base", "barracks", "worker", "light", "heavy", "ranged")
ACTIONS = ("noop", "move", "harvest", "return", "produce", "attack")
DIRECTIONS = ("N", "E", "S", "W")
DIR_DELTA = {"N": (0, -1), "E": (1, 0), "S": (0, 1), "W": (-1, 0)}

MAP_VARIANTS = tuple("ABCDEFGHIJKL")


class EngineError(Exception):
    """Raised when a command submitted to `step` is not executable."""


def _load_packaged(name: str) -> dict:
    text = importlib_resources.files("playstyles.data").joinpath(name).read_text()
    return json.loads(text)


class UnitStats:
    """Per-kind balance table (hp, costs, damage, durations)."""

    def __init__(self, config: dict):
        self.version = config["version"]
        self.kinds = config["kinds"]
        self.max_attack_range = max(
            (k.get("attack_range", 0) for k in self.kinds.values()), default=0
        )
        self._offsets = {}

    def hp(self, kind: str) -> int:
        return self.kinds[kind]["hp"]

    def cost(self, kind: str) -> int:
        return self.kinds[kind]["cost"]

    def damage(self, kind: str) -> int:
        return self.kinds[kind].get("damage", 0)

    def attack_range(self, kind: str) -> int:
        return self.kinds[kind].get("attack_range", 0)

    def duration(self, kind: str, action: str, produce_kind: str | None = None) -> int:
        if action == "produce":
            return self.kinds[produce_kind]["produce_time"]
        key = {"move": "move_time", "harvest": "harvest_time",
               "return": "return_time", "attack": "attack_time"}[action]
        return self.kinds[kind][key]

    def produces(self, kind: str) -> tuple[str, ...]:
        return tuple(self.kinds[kind].get("produces", ()))

    def can_move(self, kind: str) -> bool:
        return "move_time" in self.kinds[kind]

    def attack_offsets(self, kind: str) -> tuple[tuple[int, int], ...]:
        """All (dx, dy) within the kind's attack range (Euclidean, like MicroRTS)."""
        rng = self.attack_range(kind)
        if rng not in self._offsets:
            self._offsets[rng] = tuple(
                (dx, dy)
                for dx in range(-rng, rng + 1)
                for dy in range(-rng, rng + 1)
                if (dx, dy) != (0, 0) and dx * dx + dy * dy <= rng * rng
            )
        return self._offsets[rng]


_DEFAULT_STATS: UnitStats | None = None


def load_stats() -> UnitStats:
    """The packaged default stats table (shared instance)."""
    global _DEFAULT_STATS
    if _DEFAULT_STATS is None:
        _DEFAULT_STATS = UnitStats(_load_packaged("unit_stats.json"))
    return _DEFAULT_STATS


@dataclass(frozen=True)
class UnitCommand:
    """One order for one unit this tick."""

    unit_id: int
    action: str
    direction: Optional[str] = None
    produce_kind: Optional[str] = None
    attack_offset: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ValueError(f"unknown action {self.action!r}")
        needs_dir = self.action in ("move", "harvest", "return", "produce")
        if needs_dir != (self.direction is not None):
            raise ValueError(f"{self.action} direction mismatch")
        if (self.action == "produce") != (self.produce_kind is not None):
            raise ValueError(f"{self.action} produce_kind mismatch")
        if (self.action == "attack") != (self.attack_offset is not None):
            raise ValueError(f"{self.action} attack_offset mismatch")
        if self.direction is not None and self.direction not in DIRECTIONS:
            raise ValueError(f"unknown direction {self.direction!r}")

    def to_dict(self) -> dict:
        d = {"u": self.unit_id, "a": self.action}
        if self.direction is not None:
            d["d"] = self.direction
        if self.produce_kind is not None:
            d["k"] = self.produce_kind
        if self.attack_offset is not None:
            d["dx"], d["dy"] = self.attack_offset
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "UnitCommand":
        offset = (d["dx"], d["dy"]) if "dx" in d else None
        return cls(d["u"], d["a"], d.get("d"), d.get("k"), offset)


@dataclass(slots=True)
class Busy:
    """An in-progress durative action."""

    action: str
    remaining: int
    direction: Optional[str] = None
    produce_kind: Optional[str] = None
    attack_offset: Optional[tuple[int, int]] = None


@dataclass(slots=True)
class Unit:
    id: int
    owner: Optional[str]  # None for resource mines
    kind: str
    x: int
    y: int
    hp: int
    carried: int = 0          # resources carried (workers only)
    resources: int = 0        # remaining quantity (mines only)
    busy: Optional[Busy] = None

    def clone(self) -> "Unit":
        busy = None
        if self.busy is not None:
            b = self.busy
            busy = Busy(b.action, b.remaining, b.direction, b.produce_kind, b.attack_offset)
        return Unit(self.id, self.owner, self.kind, self.x, self.y, self.hp,
                    self.carried, self.resources, busy)

    def to_dict(self) -> dict:
        d = {"id": self.id, "owner": self.owner, "kind": self.kind,
             "x": self.x, "y": self.y, "hp": self.hp,
             "carried": self.carried, "resources": self.resources}
        if self.busy is not None:
            b = self.busy
            d["busy"] = {"action": b.action, "remaining": b.remaining,
                         "direction": b.direction, "produce_kind": b.produce_kind,
                         "attack_offset": list(b.attack_offset) if b.attack_offset else None}
        return d


class GameState:
    """Full simulator state: grid occupancy, units, stockpiles, tick."""

    def __init__(self, width: int, height: int, stats: UnitStats,
                 max_ticks: int = 2000):
        self.width = width
        self.height = height
        self.stats = stats
        self.max_ticks = max_ticks
        self.tick = 0
        self.units: dict[int, Unit] = {}
        self.resources = {P1: 0, P2: 0}
        self.next_unit_id = 0
        self._occupied: dict[tuple[int, int], int] = {}

    # -- construction / bookkeeping -------------------------------------

    def add_unit(self, owner: Optional[str], kind: str, x: int, y: int,
                 hp: int | None = None, resources: int = 0) -> Unit:
        if not self.in_bounds(x, y):
            raise EngineError(f"unit at ({x},{y}) out of bounds")
        if (x, y) in self._occupied:
            raise EngineError(f"cell ({x},{y}) already occupied")
        unit = Unit(self.next_unit_id, owner, kind, x, y,
                    hp if hp is not None else self.stats.hp(kind),
                    resources=resources)
        self.next_unit_id += 1
        self.units[unit.id] = unit
        self._occupied[(x, y)] = unit.id
        return unit

    def clone(self) -> "GameState":
        other = GameState.__new__(GameState)
        other.width = self.width
        other.height = self.height
        other.stats = self.stats
        other.max_ticks = self.max_ticks
        other.tick = self.tick
        other.units = {uid: u.clone() for uid, u in self.units.items()}
        other.resources = dict(self.resources)
        other.next_unit_id = self.next_unit_id
        other._occupied = dict(self._occupied)
        return other

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def unit_at(self, x: int, y: int) -> Optional[Unit]:
        uid = self._occupied.get((x, y))
        return self.units[uid] if uid is not None else None

    def player_units(self, player: str) -> Iterator[Unit]:
        return (u for u in self.units.values() if u.owner == player)

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "width": self.width,
            "height": self.height,
            "max_ticks": self.max_ticks,
            "resources": dict(self.resources),
            "next_unit_id": self.next_unit_id,
            "units": [self.units[uid].to_dict() for uid in sorted(self.units)],
        }

    def serialize(self) -> str:
        """Canonical JSON form, stable across runs (determinism checks)."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def render(self) -> str:
        """ASCII snapshot for debugging and demos."""
        glyphs = {"resource": "$", "base": "B", "barracks": "X", "worker": "w",
                  "light": "l", "heavy": "h", "ranged": "r"}
        grid = [["." for _ in range(self.width)] for _ in range(self.height)]
        for u in self.units.values():
            g = glyphs[u.kind]
            if u.owner == P2:
                g = g.upper() if u.kind not in ("base", "barracks") else g + "'"
            grid[u.y][u.x] = g[0]
        rows = ["".join(row) for row in grid]
        rows.append(f"t={self.tick} res={self.resources[P1]}/{self.resources[P2]}")
        return "\n".join(rows)


# -- map generation ------------------------------------------------------

_MAPS_CONFIG: dict | None = None


def _maps_config() -> dict:
    global _MAPS_CONFIG
    if _MAPS_CONFIG is None:
        _MAPS_CONFIG = _load_packaged("maps.json")
    return _MAPS_CONFIG


def generate_map(variant: str, max_ticks: int = 2000,
                 stats: UnitStats | None = None) -> GameState:
    """Build the starting state for one map variant (A-L).

    Each player starts with one base, one worker, and two nearby mines;
    variants differ only in placement.  Player 2's layout is player 1's
    rotated 180 degrees, so starts are symmetric.
    """
    cfg = _maps_config()
    if variant not in cfg["variants"]:
        raise ValueError(
            f"unknown map variant {variant!r}; expected one of {sorted(cfg['variants'])}"
        )
    layout = cfg["variants"][variant]
    stats = stats or load_stats()
    state = GameState(cfg["width"], cfg["height"], stats, max_ticks=max_ticks)
    state.resources = {P1: cfg["start_stockpile"], P2: cfg["start_stockpile"]}

    def mirrored(x, y):
        return cfg["width"] - 1 - x, cfg["height"] - 1 - y

    for mx, my in layout["mines"]:
        state.add_unit(None, "resource", mx, my, resources=cfg["mine_resources"])
    state.add_unit(P1, "base", *layout["base"])
    state.add_unit(P1, "worker", *layout["worker"])
    for mx, my in layout["mines"]:
        state.add_unit(None, "resource", *mirrored(mx, my), resources=cfg["mine_resources"])
    state.add_unit(P2, "base", *mirrored(*layout["base"]))
    state.add_unit(P2, "worker", *mirrored(*layout["worker"]))
    return state


# -- legality ------------------------------------------------------------

def command_error(state: GameState, player: str, cmd: UnitCommand) -> Optional[str]:
    """Why `cmd` is not executable for `player` right now, or None if it is.

    This is the single legality predicate: `legal_commands` filters with it
    and `step` rejects on it, so everything legal steps cleanly.
    """
    unit = state.units.get(cmd.unit_id)
    if unit is None:
        return "no such unit"
    if unit.owner != player:
        return f"unit belongs to {unit.owner}"
    if unit.busy is not None:
        return "unit is busy"
    if cmd.action == "noop":
        return None
    stats = state.stats
    if cmd.action == "move":
        if not stats.can_move(unit.kind):
            return f"{unit.kind} cannot move"
        dx, dy = DIR_DELTA[cmd.direction]
        tx, ty = unit.x + dx, unit.y + dy
        if not state.in_bounds(tx, ty):
            return "move target out of bounds"
        if state.unit_at(tx, ty) is not None:
            return "move target occupied"
        return None
    if cmd.action == "harvest":
        if unit.kind != "worker":
            return "only workers harvest"
        if unit.carried > 0:
            return "already carrying"
        dx, dy = DIR_DELTA[cmd.direction]
        target = state.unit_at(unit.x + dx, unit.y + dy)
        if target is None or target.kind != "resource" or target.resources <= 0:
            return "no mine in that direction"
        return None
    if cmd.action == "return":
        if unit.kind != "worker":
            return "only workers return"
        if unit.carried <= 0:
            return "nothing carried"
        dx, dy = DIR_DELTA[cmd.direction]
        target = state.unit_at(unit.x + dx, unit.y + dy)
        if target is None or target.kind != "base" or target.owner != player:
            return "no own base in that direction"
        return None
    if cmd.action == "produce":
        if cmd.produce_kind not in stats.produces(unit.kind):
            return f"{unit.kind} cannot produce {cmd.produce_kind}"
        if state.resources[player] < stats.cost(cmd.produce_kind):
            return "insufficient resources"
        dx, dy = DIR_DELTA[cmd.direction]
        tx, ty = unit.x + dx, unit.y + dy
        if not state.in_bounds(tx, ty):
            return "produce target out of bounds"
        if state.unit_at(tx, ty) is not None:
            return "produce target occupied"
        return None
    if cmd.action == "attack":
        rng = stats.attack_range(unit.kind)
        if rng == 0:
            return f"{unit.kind} cannot attack"
        dx, dy = cmd.attack_offset
        if dx * dx + dy * dy > rng * rng:
            return "target out of range"
        target = state.unit_at(unit.x + dx, unit.y + dy)
        if target is None or target.owner not in PLAYERS or target.owner == player:
            return "no enemy at target"
        return None
    return f"unknown action {cmd.action}"


def unit_legal_commands(state: GameState, player: str, unit: Unit) -> set[UnitCommand]:
    """Executable commands for one unit this tick (empty if busy)."""
    stats = state.stats
    out: set[UnitCommand] = set()
    if unit.owner != player or unit.busy is not None:
        return out
    out.add(UnitCommand(unit.id, "noop"))
    if stats.can_move(unit.kind):
        for d, (dx, dy) in DIR_DELTA.items():
            tx, ty = unit.x + dx, unit.y + dy
            if state.in_bounds(tx, ty) and state.unit_at(tx, ty) is None:
                out.add(UnitCommand(unit.id, "move", direction=d))
    if unit.kind == "worker":
        for d, (dx, dy) in DIR_DELTA.items():
            target = state.unit_at(unit.x + dx, unit.y + dy)
            if target is None:
                continue
            if unit.carried == 0 and target.kind == "resource" and target.resources > 0:
                out.add(UnitCommand(unit.id, "harvest", direction=d))
            if unit.carried > 0 and target.kind == "base" and target.owner == player:
                out.add(UnitCommand(unit.id, "return", direction=d))
    for kind in stats.produces(unit.kind):
        if state.resources[player] < stats.cost(kind):
            continue
        for d, (dx, dy) in DIR_DELTA.items():
            tx, ty = unit.x + dx, unit.y + dy
            if state.in_bounds(tx, ty) and state.unit_at(tx, ty) is None:
                out.add(UnitCommand(unit.id, "produce", direction=d, produce_kind=kind))
    if stats.attack_range(unit.kind) > 0:
        for dx, dy in stats.attack_offsets(unit.kind):
            target = state.unit_at(unit.x + dx, unit.y + dy)
            if target is not None and target.owner in PLAYERS and target.owner != player:
                out.add(UnitCommand(unit.id, "attack", attack_offset=(dx, dy)))
    return out


def legal_commands(state: GameState, player: str) -> set[UnitCommand]:
    """All commands executable this tick; idle units always admit noop."""
    out: set[UnitCommand] = set()
    for unit in state.player_units(player):
        out |= unit_legal_commands(state, player, unit)
    return out


# -- stepping ------------------------------------------------------------

def advance(state: GameState, cmds_p1, cmds_p2) -> None:
    """In-place single-tick update (the fast path behind `step`)."""
    _assign(state, P1, cmds_p1)
    _assign(state, P2, cmds_p2)
    _resolve_tick(state)


def step(state: GameState, cmds_p1, cmds_p2) -> GameState:
    """Apply one tick of commands, returning the successor state.

    Commands begin durative execution; effects land when the duration
    elapses.  Same-cell completion conflicts go to the lowest unit id.
    """
    nxt = state.clone()
    advance(nxt, cmds_p1, cmds_p2)
    return nxt


def _assign(state: GameState, player: str, cmds) -> None:
    # Canonical ascending-unit-id order: validation sees earlier produce
    # deductions, so the result is independent of the caller's set ordering.
    seen: set[int] = set()
    for cmd in sorted(cmds, key=lambda c: c.unit_id):
        reason = command_error(state, player, cmd)
        if reason is not None:
            raise EngineError(f"unit {cmd.unit_id}: {reason}")
        if cmd.unit_id in seen:
            raise EngineError(f"unit {cmd.unit_id}: multiple commands")
        seen.add(cmd.unit_id)
        if cmd.action == "noop":
            continue
        unit = state.units[cmd.unit_id]
        duration = state.stats.duration(unit.kind, cmd.action, cmd.produce_kind)
        if cmd.action == "produce":
            state.resources[player] -= state.stats.cost(cmd.produce_kind)
        unit.busy = Busy(cmd.action, duration, cmd.direction,
                         cmd.produce_kind, cmd.attack_offset)


def _resolve_tick(state: GameState) -> None:
    completed: list[Unit] = []
    for uid in sorted(state.units):
        unit = state.units[uid]
        if unit.busy is None:
            continue
        unit.busy.remaining -= 1
        if unit.busy.remaining <= 0:
            completed.append(unit)
    for unit in completed:
        busy = unit.busy
        unit.busy = None
        if unit.hp <= 0:  # killed earlier this tick; completion fizzles
            continue
        _apply_effect(state, unit, busy)
    dead = [u for u in state.units.values()
            if u.hp <= 0 or (u.kind == "resource" and u.resources <= 0)]
    for u in dead:
        del state.units[u.id]
        if state._occupied.get((u.x, u.y)) == u.id:
            del state._occupied[(u.x, u.y)]
    state.tick += 1


def _apply_effect(state: GameState, unit: Unit, busy: Busy) -> None:
    stats = state.stats
    if busy.action == "move":
        dx, dy = DIR_DELTA[busy.direction]
        tx, ty = unit.x + dx, unit.y + dy
        if state.in_bounds(tx, ty) and state.unit_at(tx, ty) is None:
            del state._occupied[(unit.x, unit.y)]
            unit.x, unit.y = tx, ty
            state._occupied[(tx, ty)] = unit.id
    elif busy.action == "harvest":
        dx, dy = DIR_DELTA[busy.direction]
        target = state.unit_at(unit.x + dx, unit.y + dy)
        if target is not None and target.kind == "resource" and target.resources > 0:
            target.resources -= 1
            unit.carried = 1
    elif busy.action == "return":
        dx, dy = DIR_DELTA[busy.direction]
        target = state.unit_at(unit.x + dx, unit.y + dy)
        if target is not None and target.kind == "base" and target.owner == unit.owner:
            state.resources[unit.owner] += unit.carried
            unit.carried = 0
    elif busy.action == "produce":
        dx, dy = DIR_DELTA[busy.direction]
        tx, ty = unit.x + dx, unit.y + dy
        if state.in_bounds(tx, ty) and state.unit_at(tx, ty) is None:
            state.add_unit(unit.owner, busy.produce_kind, tx, ty)
        # else: spawn cell was taken mid-production; the cost is forfeit so
        # stockpile+carried+mines stays non-increasing outside harvesting
    elif busy.action == "attack":
        dx, dy = busy.attack_offset
        target = state.unit_at(unit.x + dx, unit.y + dy)
        if target is not None:
            target.hp -= stats.damage(unit.kind)


def outcome(state: GameState) -> str:
    """'ongoing', 'p1_wins', 'p2_wins', or 'draw'."""
    p1_alive = any(True for _ in state.player_units(P1))
    p2_alive = any(True for _ in state.player_units(P2))
    if not p1_alive and not p2_alive:
        return "draw"
    if not p1_alive:
        return "p2_wins"
    if not p2_alive:
        return "p1_wins"
    if state.tick >= state.max_ticks:
        return "draw"
    return "ongoing"
