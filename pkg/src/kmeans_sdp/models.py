"""Synthetic cluster models, worst-case center layouts, and separation bounds.

Sampling uses the counter-based Philox generator with one substream per
cluster (the cluster index is folded into the stream key), so adding a
cluster never perturbs the draws of earlier clusters and identical specs
reproduce bit-identical datasets.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonPsdCovariance, UnsupportedShape
from .geometry import Dataset


class SupportKind(enum.Enum):
    UNIFORM_BALL = "ball"
    UNIFORM_SPHERE = "sphere"
    EQUISPACED_CIRCLE = "circle"


class CenterShape(enum.Enum):
    CIRCLE = "circle"
    LINE = "line"
    HIVE = "hive"


def _cluster_rng(seed: int, cluster: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(0, cluster))
    return np.random.Generator(np.random.Philox(ss))


def _aux_rng(seed: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(1,))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class BallModelSpec:
    """Clusters drawn as center plus zero-mean noise inside the unit ball.

    support is one SupportKind for all clusters or a sequence of k kinds.
    The equispaced-circle support places n_a evenly spaced points on the unit
    circle at a seeded random phase (2-D only); its population mean is zero
    over the phase and its per-axis variance is 1/2, the maximum a unit-ball
    support can reach.
    """

    centers: np.ndarray
    sizes: np.ndarray
    support: tuple[SupportKind, ...] | SupportKind = SupportKind.UNIFORM_BALL
    seed: int = 0

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        sizes = np.atleast_1d(np.asarray(self.sizes, dtype=int))
        if centers.shape[0] != sizes.shape[0]:
            raise DimensionMismatch("centers and sizes disagree on k")
        if np.any(sizes < 1):
            raise DimensionMismatch("every cluster size must be >= 1")
        support = self.support
        if isinstance(support, SupportKind):
            support = (support,) * centers.shape[0]
        support = tuple(support)
        if len(support) != centers.shape[0]:
            raise DimensionMismatch("per-cluster support list must have length k")
        if any(s is SupportKind.EQUISPACED_CIRCLE for s in support) and centers.shape[1] != 2:
            raise UnsupportedShape("equispaced-circle support requires 2-D data")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "support", support)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


def _sample_support(kind: SupportKind, n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    if kind is SupportKind.UNIFORM_SPHERE:
        g = rng.standard_normal((n, m))
        return g / np.linalg.norm(g, axis=1, keepdims=True)
    if kind is SupportKind.UNIFORM_BALL:
        g = rng.standard_normal((n, m))
        dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
        radii = rng.random(n) ** (1.0 / m)
        return dirs * radii[:, None]
    phase = rng.uniform(0.0, 2.0 * np.pi)
    angles = phase + 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(angles), np.sin(angles)])


def sample_ball_model(spec: BallModelSpec) -> Dataset:
    """Draw the dataset; truth labels attached in cluster order."""
    blocks = []
    labels = []
    for a in range(spec.k):
        rng = _cluster_rng(spec.seed, a)
        noise = _sample_support(spec.support[a], int(spec.sizes[a]), spec.dim, rng)
        blocks.append(spec.centers[a] + noise)
        labels.extend([a] * int(spec.sizes[a]))
    return Dataset(points=np.vstack(blocks), truth_labels=np.array(labels))


@dataclass(frozen=True)
class GmmSpec:
    """Gaussian mixture: per-cluster mean and PSD covariance.

    Cluster sizes are either fixed (sizes) or multinomial (weights + total).
    Covariances may be singular; sampling uses the symmetric square root.
    """

    centers: np.ndarray
    covariances: np.ndarray
    sizes: np.ndarray | None = None
    weights: np.ndarray | None = None
    total: int | None = None
    seed: int = 0

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        k, m = centers.shape
        covs = np.asarray(self.covariances, dtype=float)
        if covs.ndim == 2:
            covs = np.broadcast_to(covs, (k, m, m)).copy()
        if covs.shape != (k, m, m):
            raise DimensionMismatch(f"covariances must be (k, m, m), got {covs.shape}")
        for a in range(k):
            if np.abs(covs[a] - covs[a].T).max() > 1e-10 * (1.0 + np.abs(covs[a]).max()):
                raise NonPsdCovariance(f"covariance {a} is not symmetric")
        if (self.sizes is None) == (self.weights is None):
            raise DimensionMismatch("specify exactly one of sizes / weights")
        if self.sizes is not None:
            sizes = np.atleast_1d(np.asarray(self.sizes, dtype=int))
            if sizes.shape[0] != k or np.any(sizes < 1):
                raise DimensionMismatch("sizes must be k positive integers")
            object.__setattr__(self, "sizes", sizes)
        else:
            weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
            if weights.shape[0] != k or np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
                raise DimensionMismatch("weights must be k nonnegative numbers summing to 1")
            if self.total is None or self.total < k:
                raise DimensionMismatch("multinomial mode needs total >= k")
            object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "covariances", covs)

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


def _psd_sqrt(cov: np.ndarray) -> np.ndarray:
    eigvals, eigvecs = np.linalg.eigh(0.5 * (cov + cov.T))
    scale = max(float(eigvals[-1]), 1.0)
    if eigvals[0] < -1e-10 * scale:
        raise NonPsdCovariance(f"covariance has negative eigenvalue {eigvals[0]:.3e}")
    root = np.sqrt(np.clip(eigvals, 0.0, None))
    return (eigvecs * root) @ eigvecs.T


def sample_gmm(spec: GmmSpec) -> Dataset:
    """Draw the mixture; truth labels attached in cluster order."""
    if spec.sizes is not None:
        sizes = spec.sizes
    else:
        counts = _aux_rng(spec.seed).multinomial(spec.total, spec.weights)
        # Every cluster must be nonempty to define a partition.
        counts = np.maximum(counts, 1)
        while counts.sum() > spec.total:
            counts[int(np.argmax(counts))] -= 1
        sizes = counts
    blocks = []
    labels = []
    for a in range(spec.k):
        rng = _cluster_rng(spec.seed, a)
        root = _psd_sqrt(spec.covariances[a])
        g = rng.standard_normal((int(sizes[a]), spec.dim))
        blocks.append(spec.centers[a] + g @ root.T)
        labels.extend([a] * int(sizes[a]))
    return Dataset(points=np.vstack(blocks), truth_labels=np.array(labels))


def center_geometry(shape: CenterShape, k: int, delta: float, dim: int = 2) -> np.ndarray:
    """Center layouts whose minimal pairwise distance is exactly delta.

    Line: collinear equispaced. Circle: regular k-gon with side delta.
    Hive: triangular-lattice packing with nearest-neighbor spacing delta
    (the most compact of the three; 2-D only).
    """
    if k < 2:
        raise UnsupportedShape("center geometries need k >= 2")
    if delta <= 0:
        raise UnsupportedShape("delta must be positive")
    if shape is CenterShape.LINE:
        centers = np.zeros((k, max(dim, 1)))
        centers[:, 0] = delta * np.arange(k)
        return centers
    if dim < 2:
        raise UnsupportedShape(f"{shape.value} geometry requires dim >= 2")
    if shape is CenterShape.CIRCLE:
        radius = delta / (2.0 * math.sin(math.pi / k))
        angles = 2.0 * np.pi * np.arange(k) / k
        centers = np.zeros((k, dim))
        centers[:, 0] = radius * np.cos(angles)
        centers[:, 1] = radius * np.sin(angles)
        return centers
    if shape is CenterShape.HIVE:
        if dim != 2:
            raise UnsupportedShape("hive geometry is 2-D only")
        # Triangular lattice sites nearest the origin; adjacent picks are at
        # exactly one lattice spacing.
        reach = int(math.ceil(math.sqrt(k))) + 2
        sites = []
        for i in range(-reach, reach + 1):
            for j in range(-reach, reach + 1):
                x = delta * (i + 0.5 * j)
                y = delta * (math.sqrt(3.0) / 2.0) * j
                sites.append((x * x + y * y, math.atan2(y, x), x, y))
        sites.sort(key=lambda t: (round(t[0], 9), t[1]))
        centers = np.array([(x, y) for _, _, x, y in sites[:k]])
        spacing = min(
            float(np.linalg.norm(centers[i] - centers[j]))
            for i in range(k)
            for j in range(i + 1, k)
        )
        assert abs(spacing - delta) <= 1e-12 * max(delta, 1.0), "hive packing spacing drifted"
        return centers
    raise UnsupportedShape(f"unknown shape {shape}")


def support_sigma_max(kind: SupportKind, m: int) -> float:
    """Operator-norm sqrt of the support covariance: 1/sqrt(m+2) for the
    solid ball, 1/sqrt(m) for the sphere and the equispaced circle."""
    if kind is SupportKind.UNIFORM_BALL:
        return 1.0 / math.sqrt(m + 2)
    if kind is SupportKind.UNIFORM_SPHERE:
        return 1.0 / math.sqrt(m)
    return 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class BoundReport:
    """Separation bounds for a model family.

    delta_sufficient guarantees exact recovery with high probability;
    delta_necessary is a threshold below which recovery provably fails (0
    when no such threshold is known). Bounds are sufficient thresholds, not
    transition predictions; the observed transition sits between them.
    """

    delta_sufficient: float
    delta_necessary: float
    delta_sufficient_asymptotic: float
    applicable: bool
    params: dict = field(default_factory=dict)
    formula_id: str = ""


def sbm_bounds(
    k: int, m: int, n_total: int, w_min: float, sigma_max: float, gamma: float = 1.0
) -> BoundReport:
    """Stochastic-ball-model separation bounds.

    Sufficient: 2 + sqrt(2/w_min) sigma_max + 7 sqrt(t/w_min) with
    t = sqrt(4 log(4 k m N^gamma) / (N w_min)); requires
    N >= (4/w_min) log(4 k m N^gamma), else flagged inapplicable.
    Necessary: 1 + sqrt(1 + 2 sigma_max^2) for balanced clusters.
    """
    if min(k, m, n_total) < 1 or w_min <= 0 or sigma_max < 0 or gamma <= 0:
        raise DimensionMismatch("bound parameters must be positive")
    log_term = math.log(4.0 * k * m * n_total**gamma)
    t = math.sqrt(4.0 * log_term / (n_total * w_min))
    applicable = n_total >= (4.0 / w_min) * log_term
    sufficient = 2.0 + math.sqrt(2.0 / w_min) * sigma_max + 7.0 * math.sqrt(t / w_min)
    asymptotic = 2.0 + math.sqrt(2.0 / w_min) * sigma_max
    necessary = 1.0 + math.sqrt(1.0 + 2.0 * sigma_max**2)
    # sqrt(2/w_min) >= sqrt(2) for any w_min <= 1, so even the asymptotic
    # sufficient bound dominates the necessary one.
    assert asymptotic >= necessary, "sufficient bound fell below necessary bound"
    return BoundReport(
        delta_sufficient=sufficient,
        delta_necessary=necessary,
        delta_sufficient_asymptotic=asymptotic,
        applicable=bool(applicable),
        params={
            "k": k,
            "m": m,
            "N": n_total,
            "w_min": w_min,
            "sigma_max": sigma_max,
            "gamma": gamma,
            "t": t,
        },
        formula_id="ball_model",
    )


def gmm_bound(
    k: int, m: int, n_total: int, w_min: float, sigma_max: float, gamma: float = 1.0
) -> BoundReport:
    """Gaussian-mixture separation bound.

    sigma_max * (2/sqrt(w_min) + 4 sqrt(s) + q) with s = 2 log(k N^(1+gamma)),
    t = max(8 log(k N^(1+gamma))/m, sqrt(8 log(k N^(1+gamma))/m)), and the
    finite-sample correction q = 10 sqrt(km(1+t)/(N w_min)) + 6m(1+t)/sqrt(N).
    No necessary threshold is known for this family.
    """
    if min(k, m, n_total) < 1 or w_min <= 0 or sigma_max < 0 or gamma <= 0:
        raise DimensionMismatch("bound parameters must be positive")
    log_term = math.log(k * float(n_total) ** (1.0 + gamma))
    s = 2.0 * log_term
    t_core = 8.0 * log_term / m
    t = max(t_core, math.sqrt(t_core))
    q = 10.0 * math.sqrt(k * m * (1.0 + t) / (n_total * w_min)) + 6.0 * m * (1.0 + t) / math.sqrt(
        n_total
    )
    sufficient = sigma_max * (2.0 / math.sqrt(w_min) + 4.0 * math.sqrt(s) + q)
    asymptotic = sigma_max * (2.0 / math.sqrt(w_min) + 4.0 * math.sqrt(s))
    return BoundReport(
        delta_sufficient=sufficient,
        delta_necessary=0.0,
        delta_sufficient_asymptotic=asymptotic,
        applicable=True,
        params={
            "k": k,
            "m": m,
            "N": n_total,
            "w_min": w_min,
            "sigma_max": sigma_max,
            "gamma": gamma,
            "t": t,
            "s": s,
            "q": q,
        },
        formula_id="gaussian_mixture",
    )
