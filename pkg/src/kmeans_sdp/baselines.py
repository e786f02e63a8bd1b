"""Reference clusterings: exhaustive search and Lloyd's algorithm.

The brute-force oracle enumerates every partition of N points into exactly k
nonempty unlabeled clusters (restricted-growth strings, first-occurrence
canonical labeling) and returns the exact global k-means optimum together
with a uniqueness flag. Lloyd's algorithm with k-means++ seeding serves as
the conventional baseline; it is deterministic given its seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, TooLarge
from .geometry import Dataset, Partition

_ENUM_LIMIT = 10**7
# Objective ties closer than this are reported as non-unique optima.
_TIE_TOL = 1e-12


def stirling2(n: int, k: int) -> int:
    """Number of partitions of n labeled items into k nonempty blocks."""
    if k < 0 or k > n:
        return 0
    row = [1] + [0] * k
    for i in range(1, n + 1):
        new = [0] * (k + 1)
        for j in range(1, min(i, k) + 1):
            new[j] = j * row[j] + row[j - 1]
        row = new
    return row[k]


@dataclass(frozen=True)
class BruteForceResult:
    best_partition: Partition
    best_objective: float
    unique: bool
    partitions_enumerated: int


def brute_force_kmeans(data: Dataset, k: int) -> BruteForceResult:
    """Exact k-means optimum by enumeration.

    Refuses instances with more than 10^7 partitions. The objective of a
    block is sum ||x||^2 - ||sum x||^2 / n, accumulated incrementally along
    the enumeration tree.
    """
    n = data.n_points
    if not 1 <= k <= n:
        raise DimensionMismatch(f"k={k} outside 1..{n}")
    count = stirling2(n, k)
    if count > _ENUM_LIMIT:
        raise TooLarge(count, _ENUM_LIMIT)
    pts = data.points
    sq = np.sum(pts * pts, axis=1)
    total_sq = float(sq.sum())
    m = data.dim

    labels = np.zeros(n, dtype=int)
    sums = np.zeros((k, m))
    counts = np.zeros(k, dtype=int)

    best = {"obj": np.inf, "labels": None, "gap": np.inf, "count": 0}

    def recurse(i: int, used: int):
        if i == n:
            best["count"] += 1
            obj = total_sq - sum(
                float(sums[a] @ sums[a]) / counts[a] for a in range(k)
            )
            if obj < best["obj"] - _TIE_TOL:
                best["gap"] = best["obj"] - obj
                best["obj"] = obj
                best["labels"] = labels.copy()
            elif abs(obj - best["obj"]) <= _TIE_TOL:
                # Enumeration never revisits a partition, so this is a tie.
                best["gap"] = 0.0
            else:
                best["gap"] = min(best["gap"], obj - best["obj"])
            return
        # Remaining points must still be able to open every unused block.
        for a in range(min(used + 1, k)):
            needed_after = k - used - (1 if a == used else 0)
            if needed_after > n - i - 1:
                continue
            labels[i] = a
            counts[a] += 1
            sums[a] += pts[i]
            recurse(i + 1, used + 1 if a == used else used)
            counts[a] -= 1
            sums[a] -= pts[i]

    recurse(0, 0)
    assert best["count"] == count, "enumeration count mismatch"
    part = Partition.from_labels(best["labels"])
    return BruteForceResult(
        best_partition=part,
        best_objective=float(best["obj"]),
        unique=bool(best["gap"] > _TIE_TOL),
        partitions_enumerated=int(best["count"]),
    )


def _kmeanspp_centers(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = pts.shape[0]
    centers = np.empty((k, pts.shape[1]))
    centers[0] = pts[rng.integers(n)]
    dist_sq = np.sum((pts - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = dist_sq.sum()
        if total <= 0:
            centers[j] = pts[rng.integers(n)]
        else:
            centers[j] = pts[rng.choice(n, p=dist_sq / total)]
        dist_sq = np.minimum(dist_sq, np.sum((pts - centers[j]) ** 2, axis=1))
    return centers


def _lloyd_labels(
    pts: np.ndarray, k: int, seed: int = 0, max_iter: int = 300
) -> tuple[np.ndarray, bool, int]:
    """Run Lloyd's iterations; returns (labels, stabilized, iterations).

    Empty clusters are repaired by reseeding the centroid at the point
    farthest from its currently assigned center. The k-means objective never
    increases across repair-free iterations (asserted).
    """
    pts = np.asarray(pts, dtype=float)
    n = pts.shape[0]
    rng = np.random.default_rng(seed)
    centers = _kmeanspp_centers(pts, k, rng)
    labels = np.full(n, -1, dtype=int)
    prev_obj = np.inf
    for it in range(1, max_iter + 1):
        d2 = np.sum((pts[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(d2, axis=1)
        repaired = False
        for a in range(k):
            if not np.any(new_labels == a):
                farthest = int(np.argmax(d2[np.arange(n), new_labels]))
                new_labels[farthest] = a
                repaired = True
        obj = 0.0
        for a in range(k):
            block = pts[new_labels == a]
            obj += float(np.sum((block - block.mean(axis=0)) ** 2))
        if not repaired:
            assert obj <= prev_obj + 1e-9 * (1.0 + abs(prev_obj)), "objective increased"
        prev_obj = obj
        if np.array_equal(new_labels, labels):
            return labels, True, it
        labels = new_labels
        for a in range(k):
            centers[a] = pts[labels == a].mean(axis=0)
    return labels, False, max_iter


def lloyd(data: Dataset, k: int, seed: int = 0, max_iter: int = 300) -> Partition:
    """Lloyd's algorithm with k-means++ seeding; always returns a partition."""
    if not 1 <= k <= data.n_points:
        raise DimensionMismatch(f"k={k} outside 1..{data.n_points}")
    labels, _, _ = _lloyd_labels(data.points, k, seed=seed, max_iter=max_iter)
    # Canonical first-occurrence labeling.
    mapping: dict[int, int] = {}
    canonical = np.empty(len(labels), dtype=int)
    for i, lab in enumerate(labels):
        lab = int(lab)
        if lab not in mapping:
            mapping[lab] = len(mapping)
        canonical[i] = mapping[lab]
    return Partition.from_labels(canonical)
