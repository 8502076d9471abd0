"""
Tensor representation of traces
===============================

How a match turns into (h, w, c) grids: observation channels, action
channels with a unified direction group, mirroring, and the 18 handcrafted
baseline features.
"""
import numpy as np

from playstyles import agents, codec, engine
from playstyles.codec import (
    ACT_DIRECTION,
    ACT_TYPE,
    OBS_HP,
    OBS_KIND,
    augment_mirror,
    encode_actions,
    encode_observation,
    extract_subsequences,
    handcrafted_features,
    record_match,
)

state = engine.generate_map("A")
obs = encode_observation(state, "p1")
print(f"observation tensor {obs.shape}: hp+resources numeric, owner/kind/"
      f"current-action one-hot")
print("hp plane (scaled by per-kind max):")
print(np.array2string(obs[:4, :4, OBS_HP], precision=2))
print("kind planes sum to one everywhere:",
      bool((obs[:, :, OBS_KIND:OBS_KIND + 8].sum(-1) == 1).all()))

# A move command writes its action type, the unified direction slot, and
# neutral (0.5, 0.5) attack-offset channels at the unit's cell.
worker = next(u for u in state.player_units("p1") if u.kind == "worker")
act = encode_actions({engine.UnitCommand(worker.id, "move", direction="E")},
                     state, "p1")
cell = act[worker.y, worker.x]
print(f"\naction tensor {act.shape}; commanded cell:",
      "type one-hot", cell[ACT_TYPE:ACT_TYPE + 6].astype(int).tolist(),
      "direction N/E/S/W", cell[ACT_DIRECTION:ACT_DIRECTION + 4].astype(int).tolist(),
      "attack dx,dy", cell[17:].tolist())

# Mirroring flips the grid, swaps direction slots, and reflects offsets.
flipped = codec.mirror_actions(act, flip_h=True, flip_v=False)
moved = flipped[worker.y, 11 - worker.x]
print("after horizontal mirror the move reads W:",
      moved[ACT_DIRECTION:ACT_DIRECTION + 4].astype(int).tolist())

# Record a real match and window it into training samples.
roster = {s.name: s for s in agents.load_roster()}
trace, _, record = record_match(roster["LightRush"], roster["RandomAI"],
                                "A", seed=5)
print(f"\nLightRush POV: {len(trace)} action frames over {record.ticks} ticks")
train_windows = extract_subsequences(trace, length=32, stride=8)
eval_windows = extract_subsequences(trace, length=32, stride=32)
print(f"stride 8 -> {len(train_windows)} overlapping windows, "
      f"stride 32 -> {len(eval_windows)} disjoint windows")

sample = train_windows[0]
feats = handcrafted_features(sample)
print("\n18 handcrafted features of the starting subsequence:")
print("  action-type freqs  ", np.round(feats[0:5], 3).tolist())
print("  direction freqs    ", np.round(feats[5:9], 3).tolist())
print("  produce-kind freqs ", np.round(feats[9:16], 3).tolist())
print("  attack dx/dy sums  ", np.round(feats[16:], 3).tolist())

mirrored = augment_mirror(sample, flip_h=True, flip_v=True)
back = augment_mirror(mirrored, flip_h=True, flip_v=True)
print("mirror is an exact involution:",
      bool(np.array_equal(back.actions, sample.actions)))
