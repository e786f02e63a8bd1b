"""Data model and deterministic cluster statistics.

Everything downstream (proximity checks, certificates, solvers) consumes the
quantities computed here: per-cluster centers and centered blocks, operator
norms, and for each cluster pair the center distance h, the unit center-line
direction w, the signed projections u, and the maximum signed projection tau.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import CoincidentCenters, DimensionMismatch, EmptyCluster

# Blocks below this entry count get an exact SVD; larger ones use power
# iteration (relative tolerance 1e-10).
_SVD_ENTRY_LIMIT = 10**6


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """N points in R^m, optionally carrying a ground-truth labeling.

    Attributes:
        points: (N, m) float array, one point per row.
        truth_labels: optional (N,) int array with labels forming a
            contiguous range 0..k-1 and every cluster nonempty.
    """

    points: np.ndarray
    truth_labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise DimensionMismatch(f"points must be a nonempty 2-D array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DimensionMismatch("points contain non-finite coordinates")
        object.__setattr__(self, "points", _readonly(pts))
        if self.truth_labels is not None:
            labels = np.asarray(self.truth_labels, dtype=int)
            _validate_labels(labels, pts.shape[0])
            labels = labels.copy()
            labels.setflags(write=False)
            object.__setattr__(self, "truth_labels", labels)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def truth_partition(self) -> "Partition":
        if self.truth_labels is None:
            raise DimensionMismatch("dataset has no ground-truth labels")
        return Partition.from_labels(self.truth_labels)


def _validate_labels(labels: np.ndarray, n: int) -> int:
    if labels.ndim != 1 or labels.shape[0] != n:
        raise DimensionMismatch(f"label vector has length {labels.shape}, expected {n}")
    k = int(labels.max()) + 1 if labels.size else 0
    if labels.min() < 0:
        raise DimensionMismatch("labels must be nonnegative")
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        empty = int(np.flatnonzero(counts == 0)[0])
        raise EmptyCluster(f"cluster {empty} is empty; labels must cover 0..k-1")
    return k


@dataclass(frozen=True)
class Partition:
    """Assignment of N points into k nonempty clusters."""

    labels: np.ndarray
    k: int
    sizes: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int).copy()
        k = _validate_labels(labels, labels.shape[0])
        if k != self.k:
            raise DimensionMismatch(f"labels use {k} clusters, declared k={self.k}")
        sizes = np.asarray(self.sizes, dtype=int)
        if not np.array_equal(sizes, np.bincount(labels, minlength=k)):
            raise DimensionMismatch("declared sizes disagree with labels")
        labels.setflags(write=False)
        sizes = sizes.copy()
        sizes.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        labels = np.asarray(labels, dtype=int)
        k = int(labels.max()) + 1 if labels.size else 0
        return cls(labels=labels, k=k, sizes=np.bincount(labels, minlength=k))

    @property
    def n_points(self) -> int:
        return self.labels.shape[0]

    def members(self, a: int) -> np.ndarray:
        """Original indices of cluster a, in ascending order."""
        return np.flatnonzero(self.labels == a)

    def is_balanced(self) -> bool:
        return bool(np.all(self.sizes == self.sizes[0]))


@dataclass(frozen=True)
class ClusterGeometry:
    """Per-cluster centers, centered data blocks, and their norms.

    Attributes:
        centers: (k, m) cluster means.
        centered_blocks: per cluster, the (n_a, m) block of points minus the
            cluster mean; column sums are zero.
        op_norms: largest singular value of each centered block.
        op_norm_sq_sum: sum of squared operator norms over all clusters.
        frob_sq: squared Frobenius norm of each centered block.
        sizes: cluster sizes n_a.
        members: per cluster, the ascending original point indices.
    """

    centers: np.ndarray
    centered_blocks: tuple[np.ndarray, ...]
    op_norms: np.ndarray
    op_norm_sq_sum: float
    frob_sq: np.ndarray
    sizes: np.ndarray
    members: tuple[np.ndarray, ...]

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


@dataclass(frozen=True)
class PairStats:
    """Pairwise center/projection statistics for all ordered cluster pairs.

    Attributes:
        h: (k, k) symmetric center distances, zero diagonal.
        w: (k, k, m); w[a, b] is the unit vector from center a to center b.
        u: u[a][b] is the length-n_a vector of signed projections of cluster
            a's centered points onto w[a, b]; entries sum to zero.
        tau: (k, k) symmetric; tau[a, b] is the largest entry over u[a][b]
            and u[b][a].
    """

    h: np.ndarray
    w: np.ndarray
    u: tuple[tuple[np.ndarray, ...], ...]
    tau: np.ndarray


def _operator_norm(block: np.ndarray) -> float:
    """Largest singular value; exact SVD for small blocks, else power iteration."""
    if block.size == 0:
        return 0.0
    if block.size <= _SVD_ENTRY_LIMIT:
        return float(np.linalg.svd(block, compute_uv=False)[0])
    # Power iteration on block^T block, relative tolerance 1e-10.
    rng = np.random.default_rng(0)
    v = rng.standard_normal(block.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(10_000):
        w = block.T @ (block @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new_sigma = np.sqrt(nw)
        if abs(new_sigma - sigma) <= 1e-10 * max(new_sigma, 1.0):
            return float(new_sigma)
        sigma = new_sigma
    return float(sigma)


def compute_geometry(data: Dataset, part: Partition) -> ClusterGeometry:
    """Centers, centered blocks, and operator norms for a partition.

    Raises:
        DimensionMismatch: label length differs from the dataset size.
        EmptyCluster: some cluster has no points.
    """
    if part.n_points != data.n_points:
        raise DimensionMismatch(
            f"partition labels {part.n_points} points, dataset has {data.n_points}"
        )
    if np.any(part.sizes == 0):
        raise EmptyCluster("partition contains an empty cluster")
    pts = data.points
    centers = np.empty((part.k, data.dim))
    blocks = []
    members = []
    for a in range(part.k):
        idx = part.members(a)
        block = pts[idx]
        centers[a] = block.mean(axis=0)
        blocks.append(_readonly(block - centers[a]))
        members.append(idx)
    op_norms = np.array([_operator_norm(b) for b in blocks])
    frob_sq = np.array([float(np.sum(b * b)) for b in blocks])
    return ClusterGeometry(
        centers=_readonly(centers),
        centered_blocks=tuple(blocks),
        op_norms=_readonly(op_norms),
        op_norm_sq_sum=float(np.sum(op_norms**2)),
        frob_sq=_readonly(frob_sq),
        sizes=part.sizes,
        members=tuple(members),
    )


def compute_pair_stats(geom: ClusterGeometry) -> PairStats:
    """h, w, u, tau for every ordered cluster pair.

    Raises:
        CoincidentCenters: some pair of centers coincides, reported with the
            offending pair; the center-line direction is undefined there.
    """
    k, m = geom.k, geom.dim
    diffs = geom.centers[None, :, :] - geom.centers[:, None, :]
    h = np.linalg.norm(diffs, axis=2)
    for a in range(k):
        for b in range(a + 1, k):
            if h[a, b] == 0.0:
                raise CoincidentCenters(a, b)
    w = np.zeros((k, k, m))
    nonzero = h > 0
    w[nonzero] = diffs[nonzero] / h[nonzero][:, None]
    u = tuple(
        tuple(_readonly(geom.centered_blocks[a] @ w[a, b]) for b in range(k))
        for a in range(k)
    )
    tau = np.zeros((k, k))
    for a in range(k):
        for b in range(a + 1, k):
            tau[a, b] = tau[b, a] = max(float(u[a][b].max()), float(u[b][a].max()))
    return PairStats(h=_readonly(h), w=_readonly(w), u=u, tau=_readonly(tau))


def distance_matrix(data: Dataset, part: Partition) -> tuple[np.ndarray, np.ndarray]:
    """Squared-distance matrix in cluster-contiguous order.

    Rows and columns follow the partition cluster by cluster (ascending
    original index within each cluster), so any block (a, b) occupies a
    contiguous submatrix.

    Returns:
        (D, order): D is the (N, N) symmetric matrix of squared Euclidean
        distances with zero diagonal; order[p] is the original index of the
        point placed at position p.
    """
    if part.n_points != data.n_points:
        raise DimensionMismatch(
            f"partition labels {part.n_points} points, dataset has {data.n_points}"
        )
    order = np.argsort(part.labels, kind="stable")
    pts = data.points[order]
    dist = cdist(pts, pts, "sqeuclidean")
    np.fill_diagonal(dist, 0.0)
    return dist, order


def block_slices(sizes) -> list[slice]:
    """Contiguous index ranges of each cluster in block order."""
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    return [slice(int(offsets[a]), int(offsets[a + 1])) for a in range(len(sizes))]
