"""
Sequence autoencoder
====================

Overfit a small CNN-BiLSTM autoencoder on a handful of action sequences and
watch it reproduce them. The same model class scales to the full experiment
(latent 1024 = 512 per LSTM direction).
"""
import numpy as np
import torch

from playstyles import agents, codec, engine
from playstyles.autoencoder import (
    ModelConfig,
    categorical_accuracy,
    encode_frames,
    train,
)
from playstyles.codec import extract_subsequences, record_match
from playstyles.dataset import SampleSet

# Collect a few real traces.
roster = {s.name: s for s in agents.load_roster()}
samples = []
for seed in range(6):
    for a, b in (("WorkerRush", "RandomAI"), ("LightRush", "RandomAI")):
        trace, _, _ = record_match(roster[a], roster[b], "A", seed=seed,
                                   max_ticks=800)
        samples += extract_subsequences(trace, length=32, stride=32)
samples = samples[:16]
print(f"{len(samples)} sequences of 32 frames each")

config = ModelConfig(scheme="actions", latent=64, conv_widths=(8, 16),
                     lr=2e-3, batch_size=8, epochs=50, patience=50, seed=0)
print(f"frame encoder -> {config.frame_dim}-d, latent {config.latent} "
      f"({config.hidden} per LSTM direction)")

sset = SampleSet("train", stride=32, augment=False, samples=samples)
result = train(config, sset, sset,
               log=lambda m: print("  " + m) if "epoch" in m and
               int(m.split()[1].rstrip(":")) % 10 == 0 else None)

first, last = result.history[0]["train_loss"], result.history[-1]["train_loss"]
print(f"loss {first:.1f} -> {last:.1f} ({1 - last / first:.0%} reduction)")

x = torch.from_numpy(np.stack([s.actions for s in samples]).astype(np.float32))
with torch.no_grad():
    recon = result.model(x)
print(f"categorical argmax accuracy: {categorical_accuracy(recon, x, 'actions'):.1%}")

z = encode_frames(result.model, x.numpy())
print(f"latents: {z.shape}, all finite: {bool(np.isfinite(z).all())}")
print("same input twice encodes identically:",
      bool(np.array_equal(z, encode_frames(result.model, x.numpy()))))
