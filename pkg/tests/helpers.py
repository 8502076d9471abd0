"""Shared test utilities: live game states and samples from seeded play."""
import random

import numpy as np

from playstyles import agents, engine
from playstyles.codec import (
    PlayTrace,
    SequenceSample,
    encode_actions,
    encode_observation,
    extract_subsequences,
)
from playstyles.engine import GameState, generate_map


def random_state(seed: int, ticks: int = 40, variant: str = "A") -> GameState:
    """A reachable mid-game state driven by seeded random play."""
    rng = random.Random(seed)
    state = generate_map(variant)
    for _ in range(ticks):
        if engine.outcome(state) != "ongoing":
            break
        engine.advance(state,
                       agents.sample_commands(state, engine.P1, rng),
                       agents.sample_commands(state, engine.P2, rng))
    return state


def sample_from_state(seed: int, n_frames: int = 32) -> SequenceSample:
    """A sample whose frames come from live random play (varied content)."""
    rng = random.Random(seed)
    variant = "ABCL"[seed % 4]
    state = generate_map(variant)
    trace = PlayTrace(f"m-{seed}-r0", variant, engine.P1, "x", "y")
    frames = 0
    while frames < n_frames:
        if engine.outcome(state) != "ongoing":
            state = generate_map(variant)
        p1 = agents.sample_commands(state, engine.P1, rng)
        p2 = agents.sample_commands(state, engine.P2, rng)
        real = [c for c in p1 if c.action != "noop"]
        if real:
            trace.ticks.append(frames)
            trace.observations.append(encode_observation(state, engine.P1))
            trace.actions.append(encode_actions(real, state, engine.P1))
            frames += 1
        engine.advance(state, p1, p2)
    return extract_subsequences(trace, n_frames, stride=n_frames)[0]


def sample_batch(n: int, seed0: int = 0, n_frames: int = 32) -> list[SequenceSample]:
    return [sample_from_state(seed0 + i, n_frames) for i in range(n)]
