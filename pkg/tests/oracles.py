"""Brute-force clustering-metric oracle, coded independently of the library.

Homogeneity/completeness go through explicit conditional entropies over the
raw point lists, ARI through literal enumeration of all point pairs, and the
expected mutual information through exact hypergeometric probabilities built
from integer binomials.  Nothing here touches playstyles.cluster.
"""
import math
from collections import Counter
from fractions import Fraction


def entropy_of(seq) -> float:
    n = len(seq)
    return -sum((c / n) * math.log(c / n) for c in Counter(seq).values())


def conditional_entropy(target, given) -> float:
    """H(target | given) by direct weighting of per-group entropies."""
    n = len(target)
    groups = {}
    for t, g in zip(target, given):
        groups.setdefault(g, []).append(t)
    return sum((len(members) / n) * entropy_of(members)
               for members in groups.values())


def oracle_homogeneity(labels, clusters) -> float:
    h_c = entropy_of(labels)
    if h_c == 0:
        return 1.0
    return 1.0 - conditional_entropy(labels, clusters) / h_c


def oracle_completeness(labels, clusters) -> float:
    h_k = entropy_of(clusters)
    if h_k == 0:
        return 1.0
    return 1.0 - conditional_entropy(clusters, labels) / h_k


def oracle_ari(labels, clusters) -> float:
    n = len(labels)
    n00 = n01 = n10 = n11 = 0
    for i in range(n):
        for j in range(i + 1, n):
            same_label = labels[i] == labels[j]
            same_cluster = clusters[i] == clusters[j]
            if same_label and same_cluster:
                n11 += 1
            elif same_label:
                n10 += 1
            elif same_cluster:
                n01 += 1
            else:
                n00 += 1
    denom = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11)
    if denom == 0:
        return 1.0
    return 2 * (n00 * n11 - n01 * n10) / denom


def oracle_mutual_info(labels, clusters) -> float:
    n = len(labels)
    joint = Counter(zip(labels, clusters))
    pl = Counter(labels)
    pc = Counter(clusters)
    mi = 0.0
    for (l, c), count in joint.items():
        p = count / n
        mi += p * math.log(p / ((pl[l] / n) * (pc[c] / n)))
    return mi


def oracle_expected_mi(labels, clusters) -> float:
    """E[MI] over random permutations, via exact hypergeometric weights."""
    n = len(labels)
    a = list(Counter(labels).values())
    b = list(Counter(clusters).values())
    emi = 0.0
    for ai in a:
        for bj in b:
            for nij in range(max(1, ai + bj - n), min(ai, bj) + 1):
                pmf = Fraction(math.comb(ai, nij) * math.comb(n - ai, bj - nij),
                               math.comb(n, bj))
                emi += float(pmf) * (nij / n) * math.log(n * nij / (ai * bj))
    return emi


def oracle_ami(labels, clusters) -> float:
    if len(set(labels)) == 1 and len(set(clusters)) == 1:
        return 1.0
    mi = oracle_mutual_info(labels, clusters)
    emi = oracle_expected_mi(labels, clusters)
    normalizer = 0.5 * (entropy_of(labels) + entropy_of(clusters))
    denominator = normalizer - emi
    eps = 2.220446049250313e-16
    denominator = min(denominator, -eps) if denominator < 0 else max(denominator, eps)
    return (mi - emi) / denominator


def oracle_all(labels, clusters) -> tuple[float, float, float, float]:
    return (oracle_completeness(labels, clusters),
            oracle_homogeneity(labels, clusters),
            oracle_ari(labels, clusters),
            oracle_ami(labels, clusters))


def all_partitions(n: int):
    """Every set partition of range(n), as restricted-growth assignment tuples."""
    assignment = [0] * n

    def rec(i, used):
        if i == n:
            yield tuple(assignment)
            return
        for value in range(used + 1):
            assignment[i] = value
            yield from rec(i + 1, max(used, value + 1))

    yield from rec(1 if n else 0, 1 if n else 0)
