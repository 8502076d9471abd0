"""Play-style discovery for a desk-scale grid RTS.

Submodules
----------
engine       deterministic game rules, maps, stepping
agents       scripted/sampling policies and the labelled roster
match        match execution and replay files
codec        observation/action tensors, subsequences, mirroring, features
dataset      split policy and on-disk sample shards
autoencoder  CNN-BiLSTM sequence autoencoder (state/action/joint schemes)
cluster      PCA, k-means, clustering metrics, t-SNE projection
pipeline     staged experiment orchestration (also via the CLI)
server       HTTP API for the embedding explorer
"""

__version__ = "0.1.0"
