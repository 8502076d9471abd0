"""
Clustering and its metrics
==========================

PCA reduction, k-means within coherent groups, the four label-recovery
metrics, and a t-SNE projection -- on synthetic blobs where the right
answers are obvious.
"""
import numpy as np

from playstyles.cluster import (
    EmbeddingSet,
    clustering_metrics,
    coherent_groups,
    evaluate_all,
    kmeans,
    pca_reduce,
    render_table,
    tsne_project,
)

rng = np.random.default_rng(0)

# Three latent "styles" per map, embedded in 128 dimensions.
def make_rows(variant, n_per_style=40):
    vectors, meta = [], []
    for s, center in enumerate((0.0, 40.0, 80.0)):
        block = rng.normal(loc=center, scale=1.0, size=(n_per_style, 128))
        vectors.append(block)
        meta += [{"sample_id": f"{variant}-{s}-{i}", "label": f"style{s}",
                  "map": variant, "side": "p1", "slot": 0,
                  "trace_id": f"{variant}-{s}-{i}", "split":
                  "train" if variant == "A" else "test"}
                 for i in range(n_per_style)]
    return np.concatenate(vectors), meta

va, ma = make_rows("A")
vl, ml = make_rows("L")
embeddings = EmbeddingSet(np.concatenate([va, vl]), ma + ml)

# 128-D -> 64-D, components fit on the training split only.
reduced = pca_reduce(embeddings, dims=64)
print("reduced:", reduced.vectors.shape)

# Coherent groups: one clustering problem per (map, side, slot).
groups = coherent_groups(reduced)
print("groups:", sorted(groups))

# k-means recovers the styles exactly; metrics confirm it.
group = groups[("A", "p1", 0)]
result = kmeans(group.vectors, k=3, seed=0)
m = clustering_metrics(group.labels(), result.assignments)
print(f"k=3 on (A,p1,0): completeness {m.completeness:.3f} "
      f"homogeneity {m.homogeneity:.3f} ARI {m.ari:.3f} AMI {m.ami:.3f}")

# Forcing k=4 splits one style: homogeneity stays 1, completeness drops.
m4 = clustering_metrics(group.labels(),
                        kmeans(group.vectors, k=4, seed=0).assignments)
print(f"k=4 on (A,p1,0): completeness {m4.completeness:.3f} "
      f"homogeneity {m4.homogeneity:.3f} ARI {m4.ari:.3f} AMI {m4.ami:.3f}")

# The full evaluation sweep renders a metrics table per k.
sweep = evaluate_all(reduced, ks=(3, 4), seed=0, test_map="L")
print()
print(render_table({"actions": sweep}))

# And a deterministic 2-D view for the explorer.
coords = tsne_project(group, perplexity=12, seed=0, iterations=500)
spans = coords.max(axis=0) - coords.min(axis=0)
print(f"t-SNE coords {coords.shape}, span x {spans[0]:.1f} y {spans[1]:.1f}")
