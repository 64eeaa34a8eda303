"""Clustering evaluation: NMI, ACC (optimal matching), ARI, and k-means.

All metrics are pure functions of the label arrays; the contingency
table is the single shared statistic.  Natural logarithms throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .augment import STREAM_KMEANS
from .errors import ContractError


@dataclass
class MetricsReport:
    nmi: float
    acc: float
    ari: float
    cluster_sizes: list
    n: int
    extras: dict = field(default_factory=dict)

    def as_dict(self):
        d = {"nmi": self.nmi, "acc": self.acc, "ari": self.ari,
             "cluster_sizes": list(self.cluster_sizes), "n": self.n}
        d.update(self.extras)
        return d


def contingency_table(pred, truth) -> np.ndarray:
    """counts[i][j] = number of samples with pred label i and true label j."""
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ContractError(f"label arrays must be equal-length vectors, "
                            f"got {pred.shape} and {truth.shape}")
    if pred.size < 1:
        raise ContractError("empty label arrays")
    kp = int(pred.max()) + 1
    kt = int(truth.max()) + 1
    table = np.zeros((kp, kt), dtype=np.int64)
    np.add.at(table, (pred, truth), 1)
    return table


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(table) -> float:
    """Mutual information normalized by the geometric mean of the entropies.

    Two single-cluster partitions score 1.0; if exactly one side has zero
    entropy the score is 0.0.
    """
    table = np.asarray(table, dtype=np.float64)
    n = table.sum()
    if n < 1:
        raise ContractError("nmi: empty table")
    a = table.sum(axis=1)
    b = table.sum(axis=0)
    h_u = _entropy(a, n)
    h_v = _entropy(b, n)
    if h_u == 0.0 and h_v == 0.0:
        return 1.0
    if h_u == 0.0 or h_v == 0.0:
        return 0.0
    nz = table > 0
    p = table[nz] / n
    outer = np.outer(a, b)[nz] / (n * n)
    info = float((p * np.log(p / outer)).sum())
    return info / np.sqrt(h_u * h_v)


def ari(table) -> float:
    """Adjusted Rand index from the contingency table (pair counting)."""
    table = np.asarray(table, dtype=np.float64)
    n = table.sum()
    if n < 2:
        raise ContractError(f"ari needs at least 2 samples, got {int(n)}")

    def comb2(x):
        return x * (x - 1.0) / 2.0

    sum_ij = comb2(table).sum()
    sum_a = comb2(table.sum(axis=1)).sum()
    sum_b = comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / comb2(n)
    max_index = 0.5 * (sum_a + sum_b)
    denom = max_index - expected
    if denom == 0.0:
        # both partitions trivial (all singletons or one block each)
        return 1.0 if sum_ij == max_index else 0.0
    return float((sum_ij - expected) / denom)


def hungarian_assignment(cost) -> np.ndarray:
    """Permutation p minimizing sum(cost[i, p[i]]) for a square cost matrix."""
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ContractError(f"cost matrix must be square, got {cost.shape}")
    if not np.isfinite(cost).all():
        raise ContractError("cost matrix contains non-finite entries")
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(cost.shape[0], dtype=np.int64)
    perm[rows] = cols
    return perm


def clustering_accuracy(pred, truth) -> float:
    """Best fraction of agreement over one-to-one cluster-to-class maps."""
    table = contingency_table(pred, truth)
    k = max(table.shape)
    padded = np.zeros((k, k), dtype=np.int64)
    padded[: table.shape[0], : table.shape[1]] = table
    perm = hungarian_assignment(-padded.astype(np.float64))
    matched = padded[np.arange(k), perm].sum()
    return float(matched) / int(table.sum())


def evaluate_labels(pred, truth) -> MetricsReport:
    table = contingency_table(pred, truth)
    sizes = table.sum(axis=1).astype(int).tolist()
    return MetricsReport(nmi=nmi(table), acc=clustering_accuracy(pred, truth),
                         ari=ari(table), cluster_sizes=sizes, n=int(table.sum()))


# -- k-means baseline ---------------------------------------------------------


def _kmeans_pp_init(points, k, rng):
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]), dtype=points.dtype)
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[i] = points[rng.integers(n)]
            continue
        probs = d2 / total
        centers[i] = points[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, ((points - centers[i]) ** 2).sum(axis=1))
    return centers


def _lloyd(points, centers, max_iter):
    n, k = points.shape[0], centers.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    pp2 = (points * points).sum(axis=1)
    for _ in range(max_iter):
        d2 = pp2[:, None] - 2.0 * points @ centers.T + (centers * centers).sum(axis=1)
        new_labels = d2.argmin(axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            mask = labels == c
            if mask.any():
                centers[c] = points[mask].mean(axis=0)
            else:
                # revive an empty cluster at the point farthest from its center
                far = d2[np.arange(n), labels].argmax()
                centers[c] = points[far]
                labels[far] = c
    d2 = pp2[:, None] - 2.0 * points @ centers.T + (centers * centers).sum(axis=1)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(n), labels].sum())
    return labels, inertia


def kmeans(points, k, seed=0, max_iter=100, restarts=10):
    """k-means++ initialized Lloyd iterations; best of ``restarts`` by inertia."""
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if k < 1 or n < k:
        raise ContractError(f"kmeans needs n >= K >= 1, got n={n}, K={k}")
    best_labels, best_inertia = None, np.inf
    for r in range(restarts):
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence((int(seed), STREAM_KMEANS, r))))
        centers = _kmeans_pp_init(points, k, rng)
        labels, inertia = _lloyd(points, centers.copy(), max_iter)
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return best_labels
