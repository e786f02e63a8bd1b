"""Splitting solver for the two k-means SDP relaxations, plus rounding.

Both problems minimize <Z, D> over the intersection of the PSD cone, the
nonnegative orthant, and an affine set:

    trace variant:    Z 1 = 1,  Tr Z = k
    balanced variant: Z 1 = 1,  diag Z = (1/n) 1      (N = n k)

The solver is a three-block consensus ADMM: one copy of the variable per
constraint set, projected in closed form (eigenvalue clamp for the PSD cone,
entrywise clamp for nonnegativity, a rank-structured update for the affine
set), with scaled dual variables and residual-balancing penalty adaptation.
The iterate sequence is invariant to positive rescaling of D; internally D is
normalized to unit Frobenius norm, which fixes the penalty scale.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import (
    DimensionMismatch,
    InvalidProblem,
    NotConverged,
    RoundingAmbiguous,
)
from .geometry import Dataset, Partition, block_slices, distance_matrix


class Relaxation(enum.Enum):
    PENG_WEI = "peng_wei"
    AMINI_LEVINA = "amini_levina"


@dataclass(frozen=True)
class SdpProblem:
    """Cost matrix, cluster count, and constraint variant.

    dist must be symmetric, entrywise nonnegative, with zero diagonal. For
    the balanced variant N must equal cluster_size * k.
    """

    dist: np.ndarray
    k: int
    variant: Relaxation = Relaxation.PENG_WEI
    cluster_size: int | None = None

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InvalidProblem(f"cost matrix must be square, got {d.shape}")
        scale = float(np.abs(d).max()) if d.size else 0.0
        if not np.all(np.isfinite(d)):
            raise InvalidProblem("cost matrix has non-finite entries")
        if np.abs(d - d.T).max(initial=0.0) > 1e-9 * max(scale, 1.0):
            raise InvalidProblem("cost matrix is not symmetric")
        if d.min(initial=0.0) < -1e-12 * max(scale, 1.0):
            raise InvalidProblem("cost matrix has negative entries")
        if np.abs(np.diag(d)).max(initial=0.0) > 1e-12 * max(scale, 1.0):
            raise InvalidProblem("cost matrix diagonal must be zero")
        n = d.shape[0]
        if not 1 <= self.k <= n:
            raise InvalidProblem(f"k={self.k} outside 1..{n}")
        if self.variant is Relaxation.AMINI_LEVINA:
            if self.cluster_size is None or self.cluster_size * self.k != n:
                raise InvalidProblem(
                    f"balanced variant needs N = n*k, got N={n}, k={self.k}, n={self.cluster_size}"
                )
        d = 0.5 * (d + d.T)
        np.fill_diagonal(d, 0.0)
        d = np.maximum(d, 0.0)
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)

    @property
    def n(self) -> int:
        return self.dist.shape[0]


@dataclass(frozen=True)
class Residuals:
    """Literal feasibility violations of a returned iterate."""

    psd_violation: float
    nonneg_violation: float
    rowsum_violation: float
    trace_violation: float

    def max(self) -> float:
        return max(
            self.psd_violation,
            self.nonneg_violation,
            self.rowsum_violation,
            self.trace_violation,
        )


@dataclass(frozen=True)
class SdpSolution:
    Z: np.ndarray
    objective: float
    residuals: Residuals
    iterations: int
    converged: bool


@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 50_000
    tol_primal: float = 1e-7
    tol_obj: float = 1e-9
    size_cap: int = 400
    adapt_rho: bool = True
    adapt_factor: float = 2.0
    adapt_ratio: float = 10.0
    # Rebalancing too often destabilizes nearly-converged iterates, so
    # adaptations are spaced at least this many iterations apart.
    adapt_cooldown: int = 50


@dataclass(frozen=True)
class RoundedPartition:
    part: Partition
    recovery_distance: float
    exact: bool


def ideal_solution(part: Partition) -> np.ndarray:
    """The block matrix encoding a partition: X_ij = 1/n_a when i,j share
    cluster a, else 0. Idempotent, trace k, rows sum to one."""
    weights = 1.0 / part.sizes[part.labels]
    same = part.labels[:, None] == part.labels[None, :]
    return np.where(same, weights[:, None], 0.0)


def _measure_residuals(Z: np.ndarray, prob: SdpProblem) -> Residuals:
    sym = 0.5 * (Z + Z.T)
    eigs = np.linalg.eigvalsh(sym)
    psd = max(0.0, -float(eigs[0]))
    nonneg = max(0.0, -float(Z.min()))
    rowsum = float(np.abs(Z.sum(axis=1) - 1.0).max())
    if prob.variant is Relaxation.PENG_WEI:
        trace = abs(float(np.trace(Z)) - prob.k)
    else:
        trace = float(np.abs(np.diag(Z) - 1.0 / prob.cluster_size).max())
    return Residuals(psd, nonneg, rowsum, trace)


def _project_psd(Y: np.ndarray) -> np.ndarray:
    sym = 0.5 * (Y + Y.T)
    eigvals, eigvecs = np.linalg.eigh(sym)
    pos = eigvals > 0
    if pos.all():
        return sym
    if not pos.any():
        return np.zeros_like(sym)
    V = eigvecs[:, pos] * eigvals[pos]
    return V @ eigvecs[:, pos].T


def _project_affine_trace(Y: np.ndarray, k: int) -> np.ndarray:
    """Orthogonal projection onto {Z = Z^T, Z1 = 1, Tr Z = k}."""
    n = Y.shape[0]
    q = float(Y.sum())
    t0 = float(np.trace(Y))
    nu = (k - t0 - 1.0 + q / n) / (n - 1.0)
    s = k - t0 - nu * n
    lam = (2.0 / n) * (1.0 - Y.sum(axis=1)) - ((s + 2.0 * nu) / n)
    Z = Y + 0.5 * (lam[:, None] + lam[None, :])
    Z[np.diag_indices(n)] += nu
    return Z


def _project_affine_diag(Y: np.ndarray, n_per: int) -> np.ndarray:
    """Orthogonal projection onto {Z = Z^T, Z1 = 1, diag Z = (1/n) 1}."""
    n = Y.shape[0]
    r = 1.0 - Y.sum(axis=1) - 1.0 / n_per + np.diag(Y)
    s = float(r.sum()) / (n - 1.0)
    lam = (2.0 * r - s) / (n - 2.0)
    nu = 1.0 / n_per - np.diag(Y) - lam
    Z = Y + 0.5 * (lam[:, None] + lam[None, :])
    Z[np.diag_indices(n)] += nu
    return Z


def solve(prob: SdpProblem, opts: SolverOptions | None = None) -> SdpSolution:
    """Solve the relaxation; cold start at (k/N) J, no warm starting.

    Converged means every literal residual of the returned Z is at most
    tol_primal and the objective changed by at most tol_obj (relative) over
    the last step. Hitting max_iter raises NotConverged carrying the best
    iterate.
    """
    opts = opts or SolverOptions()
    n, k = prob.n, prob.k
    if n > opts.size_cap:
        raise InvalidProblem(f"N={n} exceeds solver size cap {opts.size_cap}")
    D = prob.dist

    if k == n or k == 1:
        Z = np.eye(n) if k == n else np.full((n, n), 1.0 / n)
        return SdpSolution(
            Z=Z,
            objective=float(np.sum(Z * D)),
            residuals=_measure_residuals(Z, prob),
            iterations=0,
            converged=True,
        )

    scale = float(np.linalg.norm(D))
    Dn = D / scale if scale > 0 else D
    if prob.variant is Relaxation.PENG_WEI:
        project_affine = lambda Y: _project_affine_trace(Y, k)
    else:
        project_affine = lambda Y: _project_affine_diag(Y, prob.cluster_size)

    rho = 1.0
    Zbar = np.full((n, n), k / n)
    U1 = np.zeros((n, n))
    U2 = np.zeros((n, n))
    U3 = np.zeros((n, n))
    obj_prev = float(np.sum(Zbar * D))
    consensus_tol = opts.tol_primal
    last_adapt = 0

    for it in range(1, opts.max_iter + 1):
        Z1 = _project_psd(Zbar - U1)
        Z2 = np.maximum(Zbar - U2, 0.0)
        Z3 = project_affine(Zbar - U3)
        Zbar_new = (Z1 + U1 + Z2 + U2 + Z3 + U3) / 3.0 - Dn / (3.0 * rho)
        step = float(np.linalg.norm(Zbar_new - Zbar))
        Zbar = Zbar_new
        U1 += Z1 - Zbar
        U2 += Z2 - Zbar
        U3 += Z3 - Zbar

        primal = max(
            float(np.linalg.norm(Z1 - Zbar)),
            float(np.linalg.norm(Z2 - Zbar)),
            float(np.linalg.norm(Z3 - Zbar)),
        )
        dual = rho * np.sqrt(3.0) * step

        obj = float(np.sum(Zbar * D))
        if primal <= consensus_tol and abs(obj - obj_prev) <= opts.tol_obj * (1.0 + abs(obj)):
            residuals = _measure_residuals(Zbar, prob)
            if residuals.max() <= opts.tol_primal:
                return SdpSolution(
                    Z=Zbar, objective=obj, residuals=residuals, iterations=it, converged=True
                )
            # Consensus was met but a literal residual is not; tighten.
            consensus_tol *= 0.5
        obj_prev = obj

        if opts.adapt_rho and it - last_adapt >= opts.adapt_cooldown:
            if primal > opts.adapt_ratio * dual:
                rho *= opts.adapt_factor
                U1 /= opts.adapt_factor
                U2 /= opts.adapt_factor
                U3 /= opts.adapt_factor
                last_adapt = it
            elif dual > opts.adapt_ratio * primal:
                rho /= opts.adapt_factor
                U1 *= opts.adapt_factor
                U2 *= opts.adapt_factor
                U3 *= opts.adapt_factor
                last_adapt = it

    best = SdpSolution(
        Z=Zbar,
        objective=float(np.sum(Zbar * D)),
        residuals=_measure_residuals(Zbar, prob),
        iterations=opts.max_iter,
        converged=False,
    )
    raise NotConverged(best)


def round_solution(
    sol: SdpSolution,
    k: int,
    ref: Partition | None = None,
    eps_rec: float = 1e-3,
    seed: int = 0,
    allow_unconverged: bool = False,
) -> RoundedPartition:
    """Extract a partition from an iterate and score its recovery distance.

    Thresholds the entries at 1/(2N) and takes connected components; if that
    does not yield exactly k components, falls back to Lloyd's algorithm on
    the rows of Z (seeded, deterministic). The recovery distance is the
    relative Frobenius distance between Z and the ideal block matrix of the
    reference partition (the rounded one if no reference is given).
    """
    if not sol.converged and not allow_unconverged:
        raise RoundingAmbiguous("solution did not converge; pass allow_unconverged=True to round anyway")
    Z = sol.Z
    n = Z.shape[0]
    theta = 1.0 / (2.0 * n)
    adjacency = 0.5 * (Z + Z.T) > theta
    n_comp, comp = connected_components(sp.csr_matrix(adjacency), directed=False)
    if n_comp == k:
        labels = _first_occurrence_relabel(comp)
    else:
        from .baselines import _lloyd_labels

        labels, stabilized, _ = _lloyd_labels(Z, k, seed=seed, max_iter=100)
        if not stabilized:
            raise RoundingAmbiguous(
                f"threshold graph gave {n_comp} components and Lloyd fallback did not stabilize"
            )
        labels = _first_occurrence_relabel(labels)
    part = Partition.from_labels(labels)
    target = ref if ref is not None else part
    X = ideal_solution(target)
    denom = float(np.linalg.norm(X))
    rec = float(np.linalg.norm(Z - X)) / denom
    return RoundedPartition(part=part, recovery_distance=rec, exact=bool(rec <= eps_rec))


def _first_occurrence_relabel(labels: np.ndarray) -> np.ndarray:
    """Relabel clusters in order of first appearance (canonical form)."""
    mapping: dict[int, int] = {}
    out = np.empty(len(labels), dtype=int)
    for i, lab in enumerate(labels):
        lab = int(lab)
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[i] = mapping[lab]
    return out


def kmeans_objective(data: Dataset, part: Partition) -> float:
    """Sum of squared within-cluster deviations.

    Also checks the pairwise identity objective = <X, D>/2, which ties the
    combinatorial objective to the SDP cost at the partition's block matrix.
    """
    if part.n_points != data.n_points:
        raise DimensionMismatch("partition does not match dataset")
    total = 0.0
    for a in range(part.k):
        block = data.points[part.members(a)]
        total += float(np.sum((block - block.mean(axis=0)) ** 2))
    dist, order = distance_matrix(data, part)
    sizes = part.sizes
    half_xd = 0.0
    for a, sl in enumerate(block_slices(sizes)):
        half_xd += float(dist[sl, sl].sum()) / (2.0 * sizes[a])
    assert abs(total - half_xd) <= 1e-9 * (1.0 + total), "objective identity violated"
    return total
