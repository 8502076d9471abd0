"""Embedding-space analysis: PCA, k-means, clustering metrics, t-SNE.

Metrics are computed from the label/cluster contingency table with natural
logarithms; AMI uses the expected-mutual-information adjustment with
arithmetic-mean normalization.  PCA is fit on training-split rows only and
applied everywhere.  Groups cluster separately per (map, side, slot) so
every clustering is coherent in space and time.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_KS = (10, 13, 16)
SCHEME_LETTER = {"states": "S", "joint": "J", "actions": "A", "handcrafted": "H"}


@dataclass
class EmbeddingSet:
    """N embedding rows plus aligned per-row metadata."""

    vectors: np.ndarray
    meta: list[dict]

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise ValueError("vectors must be 2-D")
        if len(self.meta) != self.vectors.shape[0]:
            raise ValueError("metadata length must match row count")
        if not np.isfinite(self.vectors).all():
            raise ValueError("embedding vectors contain non-finite entries")

    def __len__(self):
        return self.vectors.shape[0]

    def subset(self, indices) -> "EmbeddingSet":
        idx = np.asarray(indices)
        return EmbeddingSet(self.vectors[idx], [self.meta[i] for i in idx])

    def labels(self) -> list[str]:
        return [m["label"] for m in self.meta]


# -- PCA --------------------------------------------------------------------

@dataclass
class PCAProjection:
    mean: np.ndarray
    components: np.ndarray  # (dims, D), orthonormal rows

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X) - self.mean) @ self.components.T


def pca_fit(X: np.ndarray, dims: int = 64) -> PCAProjection:
    """Top principal components of X (SVD on the centered matrix)."""
    X = np.asarray(X, dtype=np.float64)
    mean = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    rank = int((s > s[0] * 1e-12).sum()) if s.size else 0
    if rank < dims:
        warnings.warn(f"requested {dims} components but rank is {rank}; "
                      f"keeping {rank}")
        dims = rank
    return PCAProjection(mean, vt[:dims])


def pca_reduce(embeddings: EmbeddingSet, dims: int = 64,
               fit_mask=None) -> EmbeddingSet:
    """Project onto the top `dims` components fit on the training rows.

    Inputs already at or below `dims` dimensions pass through unchanged
    (the handcrafted 18-feature baseline is clustered directly).
    """
    if embeddings.vectors.shape[1] <= dims:
        return embeddings
    if fit_mask is None:
        splits = [m.get("split") for m in embeddings.meta]
        if any(s == "train" for s in splits):
            fit_mask = np.array([s == "train" for s in splits])
        else:
            fit_mask = np.ones(len(embeddings), dtype=bool)
    fit_rows = embeddings.vectors[np.asarray(fit_mask)]
    if fit_rows.shape[0] <= dims:
        warnings.warn(f"only {fit_rows.shape[0]} fit rows for {dims} components")
    projection = pca_fit(fit_rows, dims)
    return EmbeddingSet(projection.apply(embeddings.vectors), embeddings.meta)


# -- k-means ------------------------------------------------------------------

@dataclass
class KMeansResult:
    assignments: np.ndarray
    centers: np.ndarray
    inertia: float
    inertia_history: list[float] = field(default_factory=list)


def _kmeanspp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total > 0:
            probs = d2 / total
            centers[i] = X[rng.choice(n, p=probs)]
        else:
            centers[i] = X[rng.integers(n)]
        d2 = np.minimum(d2, ((X - centers[i]) ** 2).sum(axis=1))
    return centers


def kmeans(X: np.ndarray, k: int, seed: int = 0, restarts: int = 10,
           max_iter: int = 300, tol: float = 1e-4) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding; best of `restarts` kept."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < k:
        raise ValueError(f"cannot form {k} clusters from {n} points")
    rng = np.random.default_rng(seed)
    best: KMeansResult | None = None
    for _ in range(restarts):
        centers = _kmeanspp_init(X, k, rng)
        history = []
        assignments = np.zeros(n, dtype=int)
        prev_inertia = math.inf
        for _ in range(max_iter):
            d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            assignments = d2.argmin(axis=1)
            for empty in np.setdiff1d(np.arange(k), assignments):
                worst = int(np.argmax(d2[np.arange(n), assignments]))
                assignments[worst] = empty
                d2[worst, :] = 0  # keep it from being stolen again
            inertia = float(((X - centers[assignments]) ** 2).sum())
            history.append(inertia)
            for j in range(k):
                members = X[assignments == j]
                if len(members):
                    centers[j] = members.mean(axis=0)
            if prev_inertia - inertia <= tol:
                break
            prev_inertia = inertia
        inertia = float(((X - centers[assignments]) ** 2).sum())
        history.append(inertia)
        if best is None or inertia < best.inertia:
            best = KMeansResult(assignments.copy(), centers.copy(), inertia, history)
    return best


# -- clustering metrics -------------------------------------------------------

@dataclass(frozen=True)
class MetricBundle:
    completeness: float
    homogeneity: float
    ari: float
    ami: float

    def to_dict(self) -> dict:
        return {"completeness": self.completeness, "homogeneity": self.homogeneity,
                "ari": self.ari, "ami": self.ami}


def _contingency(labels, assignments) -> np.ndarray:
    _, li = np.unique(labels, return_inverse=True)
    _, ci = np.unique(assignments, return_inverse=True)
    table = np.zeros((li.max() + 1, ci.max() + 1), dtype=np.int64)
    np.add.at(table, (li, ci), 1)
    return table


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def _mutual_info(table: np.ndarray) -> float:
    n = table.sum()
    nz = table > 0
    joint = table[nz] / n
    outer = np.outer(table.sum(1), table.sum(0))[nz] / (n * n)
    return float((joint * np.log(joint / outer)).sum())


def expected_mutual_info(table: np.ndarray) -> float:
    """E[MI] under the permutation model (hypergeometric marginals)."""
    from scipy.special import gammaln

    a = table.sum(axis=1)
    b = table.sum(axis=0)
    n = int(table.sum())
    emi = 0.0
    for ai in a:
        for bj in b:
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            for nij in range(lo, hi + 1):
                term = (nij / n) * math.log(n * nij / (ai * bj))
                logp = (gammaln(ai + 1) + gammaln(bj + 1)
                        + gammaln(n - ai + 1) + gammaln(n - bj + 1)
                        - gammaln(n + 1) - gammaln(nij + 1)
                        - gammaln(ai - nij + 1) - gammaln(bj - nij + 1)
                        - gammaln(n - ai - bj + nij + 1))
                emi += term * math.exp(logp)
    return emi


def clustering_metrics(labels, assignments) -> MetricBundle:
    """Completeness, homogeneity, ARI, and AMI of a labelling vs a clustering.

    A single distinct label matched with a single cluster scores 1.0 on all
    four metrics by convention.
    """
    labels = list(labels)
    assignments = list(assignments)
    if len(labels) != len(assignments):
        raise ValueError("labels and assignments must have equal length")
    if len(labels) < 2:
        raise ValueError("need at least 2 points")
    table = _contingency(labels, assignments)
    a = table.sum(axis=1)
    b = table.sum(axis=0)
    n = table.sum()
    h_c, h_k = _entropy(a), _entropy(b)
    mi = _mutual_info(table)

    homogeneity = 1.0 if h_c == 0 else mi / h_c
    completeness = 1.0 if h_k == 0 else mi / h_k

    # ARI from pair counts derived off the contingency table
    sum_comb = sum(math.comb(int(v), 2) for v in table.ravel())
    comb_a = sum(math.comb(int(x), 2) for x in a)
    comb_b = sum(math.comb(int(x), 2) for x in b)
    total = math.comb(int(n), 2)
    expected = comb_a * comb_b / total
    max_index = (comb_a + comb_b) / 2
    ari = 1.0 if max_index == expected else (sum_comb - expected) / (max_index - expected)

    if len(a) == len(b) == 1:
        ami = 1.0
    else:
        emi = expected_mutual_info(table)
        normalizer = 0.5 * (h_c + h_k)
        denominator = normalizer - emi
        eps = np.finfo(np.float64).eps
        denominator = min(denominator, -eps) if denominator < 0 else max(denominator, eps)
        ami = (mi - emi) / denominator

    return MetricBundle(float(completeness), float(homogeneity),
                        float(ari), float(ami))


# -- coherent groups and evaluation -------------------------------------------

def group_key(meta: dict) -> tuple:
    return (meta["map"], meta["side"], meta["slot"])


def coherent_groups(embeddings: EmbeddingSet) -> dict[tuple, EmbeddingSet]:
    """Partition rows by (map, side, slot); never cluster across groups."""
    buckets: dict[tuple, list[int]] = {}
    for i, meta in enumerate(embeddings.meta):
        buckets.setdefault(group_key(meta), []).append(i)
    return {key: embeddings.subset(idx) for key, idx in sorted(buckets.items())}


@dataclass
class ClusterReport:
    group: tuple
    k: int
    assignments: list[int]
    sample_ids: list[str]
    metrics: MetricBundle
    label_histograms: dict[int, dict[str, int]]

    def to_dict(self) -> dict:
        return {"group": list(self.group), "k": self.k,
                "assignments": self.assignments, "sample_ids": self.sample_ids,
                "metrics": self.metrics.to_dict(),
                "label_histograms": {str(c): h for c, h in
                                     sorted(self.label_histograms.items())}}


@dataclass
class EvaluationResult:
    reports: list[ClusterReport]
    skipped: list[dict]
    aggregate: dict  # k -> {"train_maps": {...} | None, "test_map": {...} | None}
    test_map: str

    def to_dict(self) -> dict:
        return {"reports": [r.to_dict() for r in self.reports],
                "skipped": self.skipped,
                "aggregate": {str(k): v for k, v in sorted(self.aggregate.items())},
                "test_map": self.test_map}


def evaluate_all(embeddings: EmbeddingSet, ks=DEFAULT_KS, seed: int = 0,
                 test_map: str = "L", slots=(0,)) -> EvaluationResult:
    """Cluster every coherent group at every k and aggregate the metrics.

    Aggregates average over all groups on the training maps and separately
    over groups on the held-out map.  Groups smaller than k are skipped with
    a warning entry.
    """
    groups = {key: g for key, g in coherent_groups(embeddings).items()
              if slots is None or key[2] in slots}
    if not groups:
        raise ValueError("no coherent groups to evaluate")
    reports: list[ClusterReport] = []
    skipped: list[dict] = []
    for key, group in groups.items():
        labels = group.labels()
        for k in ks:
            if len(group) < k:
                skipped.append({"group": list(key), "k": k,
                                "reason": f"group has {len(group)} < k points"})
                continue
            result = kmeans(group.vectors, k, seed=seed)
            bundle = clustering_metrics(labels, result.assignments)
            histograms: dict[int, dict[str, int]] = {}
            for label, cluster in zip(labels, result.assignments):
                hist = histograms.setdefault(int(cluster), {})
                hist[label] = hist.get(label, 0) + 1
            reports.append(ClusterReport(
                key, k, [int(c) for c in result.assignments],
                [m["sample_id"] for m in group.meta], bundle, histograms))
    aggregate: dict[int, dict] = {}
    for k in ks:
        train_rows = [r.metrics for r in reports
                      if r.k == k and r.group[0] != test_map]
        test_rows = [r.metrics for r in reports
                     if r.k == k and r.group[0] == test_map]
        aggregate[k] = {
            "train_maps": _mean_metrics(train_rows),
            "test_map": _mean_metrics(test_rows),
        }
    return EvaluationResult(reports, skipped, aggregate, test_map)


def _mean_metrics(bundles: list[MetricBundle]) -> dict | None:
    if not bundles:
        return None
    return {name: float(np.mean([getattr(b, name) for b in bundles]))
            for name in ("completeness", "homogeneity", "ari", "ami")}


# -- t-SNE ---------------------------------------------------------------------

def tsne_project(embeddings: EmbeddingSet, perplexity: float = 30.0,
                 seed: int = 0, iterations: int = 1000) -> np.ndarray:
    """2-D t-SNE coordinates of the rows (deterministic per seed)."""
    n = len(embeddings)
    if n <= 3 * perplexity:
        raise ValueError(
            f"need more than {3 * perplexity:.0f} points for perplexity "
            f"{perplexity}, got {n}")
    from sklearn.manifold import TSNE

    tsne = TSNE(n_components=2, perplexity=perplexity, random_state=seed,
                max_iter=iterations, init="pca")
    return tsne.fit_transform(embeddings.vectors)


# -- report rendering ------------------------------------------------------------

def render_table(aggregates: dict) -> str:
    """Text table of metrics: one row per (scheme, k), columns per metric
    split into training-maps average and the held-out map.

    Accepts EvaluationResult objects or their JSON (to_dict) form.
    """
    def normalize(result):
        if isinstance(result, EvaluationResult):
            return {int(k): v for k, v in result.aggregate.items()}, result.test_map
        return ({int(k): v for k, v in result["aggregate"].items()},
                result.get("test_map", "L"))

    metrics = ("completeness", "homogeneity", "ari", "ami")
    titles = {"completeness": "Completeness", "homogeneity": "Homogeneity",
              "ari": "ARI", "ami": "AMI"}
    header1 = "E  k    " + "".join(f"{titles[m]:>24}" for m in metrics)
    test_map = normalize(next(iter(aggregates.values())))[1] if aggregates else "L"
    header2 = "        " + "".join(f"{'A-K':>12}{test_map:>12}" for _ in metrics)
    lines = [header1, header2, "-" * len(header2)]
    order = [s for s in ("states", "joint", "actions", "handcrafted")
             if s in aggregates]
    order += [s for s in aggregates if s not in order]
    for scheme in order:
        aggregate, _ = normalize(aggregates[scheme])
        letter = SCHEME_LETTER.get(scheme, scheme[0].upper())
        for k in sorted(aggregate):
            row = f"{letter:<2} {k:<4} "
            for metric in metrics:
                for part in ("train_maps", "test_map"):
                    cell = aggregate[k][part]
                    row += f"{cell[metric]:>12.3f}" if cell else f"{'-':>12}"
            lines.append(row)
        lines.append("-" * len(header2))
    return "\n".join(lines)


def save_result(result: EvaluationResult, path: str | Path) -> None:
    Path(path).write_text(json.dumps(result.to_dict(), sort_keys=True, indent=1))


def load_result(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())
