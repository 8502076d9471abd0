"""Low-level tensor representation of play traces.

Each grid cell is described by feature channels: numeric hit points and
resource quantities plus one-hot groups for the categorical variables.  The
action encoding unifies the per-action direction parameters into a single
direction group and represents relative attack position as two numeric
channels so distances survive the encoding.  Numeric channels are scaled to
[0, 1].

Observation channels (19): hp, resources, owner(3), kind(8), current action(6)
Action channels (19): action type(6), direction(4), produce kind(7), attack dx, dy
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import engine
from .engine import ACTIONS, DIRECTIONS, KINDS, GameState, UnitCommand
from .match import MatchRecord, run_match

OBS_CHANNELS = 19
ACT_CHANNELS = 19

# observation layout
OBS_HP = 0
OBS_RESOURCES = 1
OBS_OWNER = 2          # none, self, enemy
OBS_KIND = 5           # none + the 7 unit kinds
OBS_ACTION = 13        # current in-progress action type

# action layout
ACT_TYPE = 0           # noop, move, harvest, return, produce, attack
ACT_DIRECTION = 6      # N, E, S, W (unified across actions)
ACT_PRODUCE = 10       # one slot per unit kind
ACT_ATTACK_DX = 17
ACT_ATTACK_DY = 18

RESOURCE_SCALE = 20    # stockpile/mine quantities mapped to [0,1] by this cap

_ACTION_INDEX = {a: i for i, a in enumerate(ACTIONS)}
_DIR_INDEX = {d: i for i, d in enumerate(DIRECTIONS)}
_KIND_INDEX = {k: i for i, k in enumerate(KINDS)}


def _max_range(stats) -> int:
    return stats.max_attack_range


def scale_offset(value: int, max_range: int) -> float:
    """Affine map of a relative offset from [-max_range, max_range] to [0, 1]."""
    return (value + max_range) / (2 * max_range)


def unscale_offset(value: float, max_range: int) -> float:
    return value * 2 * max_range - max_range


def encode_observation(state: GameState, pov: str,
                       resource_scale: int = RESOURCE_SCALE) -> np.ndarray:
    """(h, w, 19) float tensor of the state from one player's point of view."""
    obs = np.zeros((state.height, state.width, OBS_CHANNELS))
    obs[:, :, OBS_OWNER] = 1.0       # owner: none
    obs[:, :, OBS_KIND] = 1.0        # kind: none
    obs[:, :, OBS_ACTION] = 1.0      # action: noop
    stats = state.stats
    for unit in state.units.values():
        if not state.in_bounds(unit.x, unit.y):
            raise ValueError(f"unit {unit.id} at ({unit.x},{unit.y}) out of bounds")
        cell = obs[unit.y, unit.x]
        cell[OBS_HP] = unit.hp / stats.hp(unit.kind)
        quantity = unit.resources if unit.kind == "resource" else unit.carried
        cell[OBS_RESOURCES] = min(quantity / resource_scale, 1.0)
        cell[OBS_OWNER:OBS_OWNER + 3] = 0.0
        if unit.owner is None:
            cell[OBS_OWNER] = 1.0
        elif unit.owner == pov:
            cell[OBS_OWNER + 1] = 1.0
        else:
            cell[OBS_OWNER + 2] = 1.0
        cell[OBS_KIND:OBS_KIND + 8] = 0.0
        cell[OBS_KIND + 1 + _KIND_INDEX[unit.kind]] = 1.0
        cell[OBS_ACTION:OBS_ACTION + 6] = 0.0
        action = unit.busy.action if unit.busy is not None else "noop"
        cell[OBS_ACTION + _ACTION_INDEX[action]] = 1.0
    return obs


def encode_actions(cmds, state: GameState, pov: str) -> np.ndarray:
    """(h, w, 19) float tensor of one tick of the pov player's commands.

    Cells without a commanded unit read as noop; commanded cells carry the
    scaled zero offset in the attack channels unless the command is an
    actual attack.
    """
    act = np.zeros((state.height, state.width, ACT_CHANNELS))
    act[:, :, ACT_TYPE] = 1.0        # noop everywhere by default
    max_range = _max_range(state.stats)
    zero = scale_offset(0, max_range)
    for cmd in cmds:
        unit = state.units.get(cmd.unit_id)
        if unit is None:
            raise ValueError(f"command for unknown unit {cmd.unit_id}")
        if unit.owner != pov:
            raise ValueError(f"command for unit {cmd.unit_id} of {unit.owner}, pov {pov}")
        if cmd.action == "noop":
            continue
        cell = act[unit.y, unit.x]
        cell[ACT_TYPE] = 0.0
        cell[ACT_TYPE + _ACTION_INDEX[cmd.action]] = 1.0
        if cmd.direction is not None:
            cell[ACT_DIRECTION + _DIR_INDEX[cmd.direction]] = 1.0
        if cmd.produce_kind is not None:
            cell[ACT_PRODUCE + _KIND_INDEX[cmd.produce_kind]] = 1.0
        if cmd.action == "attack":
            dx, dy = cmd.attack_offset
            cell[ACT_ATTACK_DX] = scale_offset(dx, max_range)
            cell[ACT_ATTACK_DY] = scale_offset(dy, max_range)
        else:
            cell[ACT_ATTACK_DX] = zero
            cell[ACT_ATTACK_DY] = zero
    return act


@dataclass
class PlayTrace:
    """One player's POV of one match, sampled at that player's action ticks."""

    match_id: str
    map_variant: str
    pov: str
    agent_name: str
    opponent_name: str
    ticks: list[int] = field(default_factory=list)
    observations: list[np.ndarray] = field(default_factory=list)
    actions: list[np.ndarray] = field(default_factory=list)

    def __len__(self):
        return len(self.ticks)


@dataclass
class SequenceSample:
    """A fixed-length window of consecutive trace frames."""

    trace_id: str
    slot: int
    offset: int
    label: str
    side: str
    map_variant: str
    observations: np.ndarray  # (length, h, w, OBS_CHANNELS)
    actions: np.ndarray       # (length, h, w, ACT_CHANNELS)

    @property
    def sample_id(self) -> str:
        return f"{self.trace_id}-s{self.slot}"

    def __len__(self):
        return self.observations.shape[0]


def trace_id(match_id: str, pov: str) -> str:
    return f"{match_id}-{pov}"


def traces_from_record(record: MatchRecord, match_id: str) -> tuple[PlayTrace, PlayTrace]:
    """Re-simulate a replay and extract both POV traces."""
    from .match import resimulate

    traces = {
        pov: PlayTrace(match_id, record.variant, pov,
                       record.agents[i], record.agents[1 - i])
        for i, pov in enumerate(engine.PLAYERS)
    }
    for state, p1_cmds, p2_cmds in resimulate(record):
        for pov, cmds in ((engine.P1, p1_cmds), (engine.P2, p2_cmds)):
            real = [c for c in cmds if c.action != "noop"]
            if not real:
                continue
            trace = traces[pov]
            trace.ticks.append(state.tick)
            trace.observations.append(encode_observation(state, pov))
            trace.actions.append(encode_actions(real, state, pov))
    return traces[engine.P1], traces[engine.P2]


def record_match(spec1, spec2, variant: str, seed: int,
                 max_ticks: int = 2000, match_id: str | None = None
                 ) -> tuple[PlayTrace, PlayTrace, MatchRecord]:
    """Play one match and return both POV traces plus the raw replay."""
    from .agents import build_policy

    p1 = build_policy(spec1, seed, engine.P1)
    p2 = build_policy(spec2, seed, engine.P2)
    record = run_match(p1, p2, variant, max_ticks=max_ticks, seed=seed,
                       agent_names=(spec1.name, spec2.name))
    if match_id is None:
        match_id = f"{variant}-{spec1.name}-{spec2.name}-r{seed}"
    t1, t2 = traces_from_record(record, match_id)
    return t1, t2, record


def extract_subsequences(trace: PlayTrace, length: int = 32,
                         stride: int = 8) -> list[SequenceSample]:
    """Full-length windows at offsets 0, stride, 2*stride, ...

    A trace shorter than `length` yields nothing; trailing partial windows
    are dropped.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    samples = []
    n = len(trace)
    tid = trace_id(trace.match_id, trace.pov)
    slot = 0
    for offset in range(0, n - length + 1, stride):
        samples.append(SequenceSample(
            trace_id=tid, slot=slot, offset=offset,
            label=trace.agent_name, side=trace.pov, map_variant=trace.map_variant,
            observations=np.stack(trace.observations[offset:offset + length]),
            actions=np.stack(trace.actions[offset:offset + length]),
        ))
        slot += 1
    return samples


def mirror_observation(obs: np.ndarray, flip_h: bool, flip_v: bool) -> np.ndarray:
    """Spatial flip of observation frames (any leading axes)."""
    out = obs
    if flip_v:
        out = out[..., ::-1, :, :]
    if flip_h:
        out = out[..., :, ::-1, :]
    return np.ascontiguousarray(out)


def mirror_actions(act: np.ndarray, flip_h: bool, flip_v: bool,
                   max_range: int | None = None) -> np.ndarray:
    """Flip action frames: remap directions and reflect attack offsets.

    Only cells with a non-noop action type carry offset defaults, so the
    about-0.5 reflection is applied there and noop cells stay all-zero.
    """
    if max_range is None:
        max_range = engine.load_stats().max_attack_range
    if not flip_h and not flip_v:
        return act.copy()
    out = act
    if flip_v:
        out = out[..., ::-1, :, :]
    if flip_h:
        out = out[..., :, ::-1, :]
    out = np.ascontiguousarray(out)
    swaps = []
    if flip_v:
        swaps.append(("N", "S", ACT_ATTACK_DY))
    if flip_h:
        swaps.append(("E", "W", ACT_ATTACK_DX))
    commanded = out[..., ACT_TYPE] != 1.0
    for d1, d2, offset_channel in swaps:
        i, j = ACT_DIRECTION + _DIR_INDEX[d1], ACT_DIRECTION + _DIR_INDEX[d2]
        out[..., [i, j]] = out[..., [j, i]]
        out[..., offset_channel] = np.where(
            commanded, 1.0 - out[..., offset_channel], out[..., offset_channel])
    return out


def augment_mirror(sample: SequenceSample, flip_h: bool, flip_v: bool) -> SequenceSample:
    """Mirrored copy of a sample; applying the same flags twice is identity."""
    if not flip_h and not flip_v:
        return replace(sample,
                       observations=sample.observations.copy(),
                       actions=sample.actions.copy())
    return replace(
        sample,
        observations=mirror_observation(sample.observations, flip_h, flip_v),
        actions=mirror_actions(sample.actions, flip_h, flip_v),
    )


N_HANDCRAFTED = 18
_NONNULL_ACTIONS = ACTIONS[1:]  # move, harvest, return, produce, attack


def handcrafted_features(sample, max_range: int | None = None) -> np.ndarray:
    """18 aggregate action measures for one sample (or raw action frames).

    Frequencies of each non-null class within its categorical group (action
    type, direction, produce kind) over all frames and cells, plus the sums
    of the relative attack offsets in raw cell units.
    """
    if max_range is None:
        max_range = engine.load_stats().max_attack_range
    act = np.asarray(sample.actions if isinstance(sample, SequenceSample) else sample)
    cells = act.reshape(-1, ACT_CHANNELS)

    def group_freq(start, count, skip_first):
        onehots = cells[:, start:start + count]
        counts = onehots.sum(axis=0)
        if skip_first:
            counts = counts[1:]
        total = counts.sum()
        return counts / total if total > 0 else np.zeros_like(counts)

    action_freq = group_freq(ACT_TYPE, 6, skip_first=True)
    direction_freq = group_freq(ACT_DIRECTION, 4, skip_first=False)
    produce_freq = group_freq(ACT_PRODUCE, 7, skip_first=False)

    attacking = cells[:, ACT_TYPE + _ACTION_INDEX["attack"]] == 1.0
    sum_dx = unscale_offset(cells[attacking, ACT_ATTACK_DX], max_range).sum()
    sum_dy = unscale_offset(cells[attacking, ACT_ATTACK_DY], max_range).sum()

    out = np.concatenate([action_freq, direction_freq, produce_freq,
                          [sum_dx, sum_dy]])
    assert out.shape == (N_HANDCRAFTED,)
    return out
