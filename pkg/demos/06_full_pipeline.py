"""
Full pipeline, miniature scale
==============================

simulate -> encode -> train -> embed -> cluster -> report on a 2-agent,
2-map configuration. Takes well under a minute; artifacts land in
./runs/mini and can be served with:

    playstyles serve --artifacts runs/mini
"""
from pathlib import Path

from playstyles.pipeline import PipelineConfig, run_all

config = PipelineConfig(
    out="runs/mini",
    maps=["A", "L"],          # train/val on A, held-out test on L
    repeats=10,               # paper split needs >= 10 repeats per match-up
    max_ticks=400,
    seed=11,
    agents=["WorkerRush", "RandomAI"],
    schemes=["actions"],
    model={"defaults": {"latent": 32, "conv_widths": [4, 8], "epochs": 2,
                        "patience": 3, "batch_size": 32, "lr": 1e-3}},
    cluster={"ks": [2], "pca_dims": 16, "slots": [0],
             "tsne_perplexity": 5.0, "tsne_iterations": 300},
)

run_all(config)

print("\nartifacts:")
for path in sorted(Path(config.out).rglob("*")):
    if path.is_file():
        print(f"  {path}")
print("\nnext: playstyles serve --artifacts", config.out)
