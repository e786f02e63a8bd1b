"""Dual certificates proving a partition is the unique k-means optimum.

For a candidate partition with block matrix X (see ideal_solution), a dual
certificate is a pair (z, B) — scalar z for the trace-constrained
relaxation, per-cluster z_a for the balanced one — from which a matrix Q is
assembled. If Q is positive semidefinite, B is entrywise nonnegative with
zero diagonal blocks, and Q annihilates the all-ones vector blockwise, then
X is a global optimum; strict entrywise positivity of B's off-diagonal
blocks upgrades the verdict to *unique* global optimum.

All matrices here live in cluster-contiguous (block) order. Construction
uses closed-form kernel blocks; assembling the kernels from the distance
matrix and projecting is kept as an independent oracle for tests.

When the construction here comes out invalid, that does NOT mean the
partition is non-optimal: the construction is sufficient only. A failed
necessary condition (see proximity) is what rules recovery out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MismatchedInputs, NotBalanced
from .geometry import (
    ClusterGeometry,
    Dataset,
    PairStats,
    Partition,
    block_slices,
    compute_geometry,
    compute_pair_stats,
    distance_matrix,
)
from .sdp import Relaxation

# Eigen/linear-solve noise allowances, relative to ||Q||. Genuine violations
# in failure fixtures exceed 1e-3, so these cannot mask one.
EPS_PSD = 1e-8
EPS_LIN = 1e-8
EPS_RECON = 1e-8


@dataclass(frozen=True)
class CertificateKernels:
    """Shared certificate ingredients for one (data, partition) pair.

    M, E are the fixed kernels entering Q; M_T and M_Tperp are M's components
    in the subspace decomposition induced by X (T carries row/column spans of
    the cluster indicators, Tperp its orthogonal complement). F is the
    balanced-variant diagonal-compensation kernel (None for unbalanced
    partitions). dist is the squared-distance matrix in block order.
    """

    sizes: np.ndarray
    dist: np.ndarray
    order: np.ndarray
    M: np.ndarray
    E: np.ndarray
    M_T: np.ndarray
    M_Tperp: np.ndarray
    F: np.ndarray | None
    geom: ClusterGeometry
    pairs: PairStats

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def k(self) -> int:
        return len(self.sizes)


@dataclass(frozen=True)
class CertificateVerdicts:
    q_min_eig: float
    b_min_offdiag: float
    q_row_annihilation: float
    q_norm: float
    reconstruction_error: float
    optimal: bool
    valid: bool


@dataclass(frozen=True)
class DualCertificate:
    """Constructed dual certificate with measured verdicts.

    z is the scalar multiplier for the trace variant; z_per_cluster the
    per-cluster multipliers for the balanced variant (exactly one is set).
    alpha is the reconstructed multiplier of the row-sum constraints.
    duality_gap is |<D, X> - dual objective|; it vanishes for a valid
    certificate.
    """

    variant: Relaxation
    z: float | None
    z_per_cluster: np.ndarray | None
    B: np.ndarray
    Q: np.ndarray
    alpha: np.ndarray
    verdicts: CertificateVerdicts
    duality_gap: float


def project_t(Z: np.ndarray, sizes) -> np.ndarray:
    """Blockwise projection onto T: row/column averages against each block."""
    out = np.empty_like(Z, dtype=float)
    slices = block_slices(sizes)
    for a, sa in enumerate(slices):
        na = sizes[a]
        for b, sb in enumerate(slices):
            nb = sizes[b]
            blk = Z[sa, sb]
            rows = blk.sum(axis=1, keepdims=True) / nb
            cols = blk.sum(axis=0, keepdims=True) / na
            total = blk.sum() / (na * nb)
            out[sa, sb] = rows + cols - total
    return out


def project_tperp(Z: np.ndarray, sizes) -> np.ndarray:
    """Blockwise projection onto the complement of T (double centering)."""
    out = np.empty_like(Z, dtype=float)
    slices = block_slices(sizes)
    for a, sa in enumerate(slices):
        na = sizes[a]
        for b, sb in enumerate(slices):
            nb = sizes[b]
            blk = Z[sa, sb]
            rows = blk.sum(axis=1, keepdims=True) / nb
            cols = blk.sum(axis=0, keepdims=True) / na
            total = blk.sum() / (na * nb)
            out[sa, sb] = blk - rows - cols + total
    return out


def assemble_kernels_from_distances(dist: np.ndarray, sizes) -> tuple[np.ndarray, np.ndarray]:
    """Oracle path: build (M, E) directly from distance-matrix blocks.

    Kept independent of the closed forms on purpose; tests compare the two.
    """
    n = dist.shape[0]
    slices = block_slices(sizes)
    M = np.empty((n, n))
    E = np.empty((n, n))
    diag_means = []  # <D^(a,a), J> / n_a^2
    for a, sa in enumerate(slices):
        diag_means.append(float(dist[sa, sa].sum()) / (sizes[a] ** 2))
    for a, sa in enumerate(slices):
        na = sizes[a]
        for b, sb in enumerate(slices):
            nb = sizes[b]
            if a == b:
                E[sa, sb] = 1.0 / na
                blk = dist[sa, sa]
                rows = blk.sum(axis=1, keepdims=True) / na
                cols = blk.sum(axis=0, keepdims=True) / na
                total = blk.sum() / (na * na)
                M[sa, sb] = blk - rows - cols + total
            else:
                E[sa, sb] = 0.5 * (1.0 / na + 1.0 / nb)
                row_term = dist[sa, sa].sum(axis=1, keepdims=True) / na
                col_term = dist[sb, sb].sum(axis=0, keepdims=True) / nb
                M[sa, sb] = (
                    dist[sa, sb]
                    - row_term
                    - col_term
                    + 0.5 * (diag_means[a] + diag_means[b])
                )
    return M, E


def _balanced_z(geom: ClusterGeometry) -> np.ndarray:
    return 2.0 * geom.k * geom.op_norms**2


def build_kernels(data: Dataset, part: Partition) -> CertificateKernels:
    """Closed-form kernels for a partition; F included when balanced."""
    geom = compute_geometry(data, part)
    pairs = compute_pair_stats(geom)
    dist, order = distance_matrix(data, part)
    sizes = part.sizes
    n = part.n_points
    slices = block_slices(sizes)

    stacked = np.vstack(geom.centered_blocks)
    M_Tperp = -2.0 * (stacked @ stacked.T)

    M_T = np.zeros((n, n))
    for a in range(part.k):
        for b in range(part.k):
            if a == b:
                continue
            h = pairs.h[a, b]
            u_ab = pairs.u[a][b]
            u_ba = pairs.u[b][a]
            M_T[slices[a], slices[b]] = (
                h * h - 2.0 * h * u_ab[:, None] - 2.0 * h * u_ba[None, :]
            )
    M = M_T + M_Tperp

    E = np.empty((n, n))
    for a in range(part.k):
        for b in range(part.k):
            if a == b:
                E[slices[a], slices[b]] = 1.0 / sizes[a]
            else:
                E[slices[a], slices[b]] = 0.5 * (1.0 / sizes[a] + 1.0 / sizes[b])

    F = None
    if part.is_balanced() and part.k >= 1:
        n_per = int(sizes[0])
        z_vec = _balanced_z(geom)
        F = np.empty((n, n))
        for a in range(part.k):
            for b in range(part.k):
                if a == b:
                    F[slices[a], slices[b]] = -z_vec[a] / n_per
                    F[slices[a], slices[a]] += z_vec[a] * np.eye(n_per)
                else:
                    F[slices[a], slices[b]] = -(z_vec[a] + z_vec[b]) / (2.0 * n_per)

    return CertificateKernels(
        sizes=sizes,
        dist=dist,
        order=order,
        M=M,
        E=E,
        M_T=M_T,
        M_Tperp=M_Tperp,
        F=F,
        geom=geom,
        pairs=pairs,
    )


def _b_tperp(kernels: CertificateKernels) -> np.ndarray:
    """Off-diagonal blocks 4 u_ab u_ba^T, zero diagonal blocks."""
    n = kernels.n
    out = np.zeros((n, n))
    slices = block_slices(kernels.sizes)
    for a in range(kernels.k):
        for b in range(kernels.k):
            if a == b:
                continue
            out[slices[a], slices[b]] = 4.0 * np.outer(
                kernels.pairs.u[a][b], kernels.pairs.u[b][a]
            )
    return out


def _spectral_norm_sym(A: np.ndarray) -> float:
    eigs = np.linalg.eigvalsh(0.5 * (A + A.T))
    return float(max(abs(eigs[0]), abs(eigs[-1])))


def _block_matrix(part_sizes) -> np.ndarray:
    """Ideal block matrix X in block order."""
    slices = block_slices(part_sizes)
    n = int(np.sum(part_sizes))
    X = np.zeros((n, n))
    for a, sl in enumerate(slices):
        X[sl, sl] = 1.0 / part_sizes[a]
    return X


def _alpha(dist: np.ndarray, sizes, z_per_block: np.ndarray) -> np.ndarray:
    """Row-sum multipliers forced by complementary slackness."""
    out = np.empty(dist.shape[0])
    for a, sl in enumerate(block_slices(sizes)):
        na = sizes[a]
        blk = dist[sl, sl]
        out[sl] = (
            -(2.0 / na) * blk.sum(axis=1)
            + blk.sum() / (na * na)
            - z_per_block[a] / na
        )
    return out


def _measure(Q: np.ndarray, B: np.ndarray, sizes, reconstruction_error: float) -> CertificateVerdicts:
    eigs = np.linalg.eigvalsh(0.5 * (Q + Q.T))
    q_min = float(eigs[0])
    q_norm = float(max(abs(eigs[0]), abs(eigs[-1])))
    slices = block_slices(sizes)
    b_min = np.inf
    row_max = 0.0
    for a, sa in enumerate(slices):
        for b, sb in enumerate(slices):
            row_max = max(row_max, float(np.abs(Q[sa, sb].sum(axis=1)).max()))
            if a != b:
                b_min = min(b_min, float(B[sa, sb].min()))
    b_min = float(b_min)
    optimal = (
        q_min >= -EPS_PSD * q_norm
        and b_min >= 0.0
        and row_max <= EPS_LIN * max(q_norm, 1e-30)
        and reconstruction_error <= EPS_RECON
    )
    return CertificateVerdicts(
        q_min_eig=q_min,
        b_min_offdiag=b_min,
        q_row_annihilation=row_max,
        q_norm=q_norm,
        reconstruction_error=reconstruction_error,
        optimal=optimal,
        valid=bool(optimal and b_min > 0.0),
    )


def _reconstruction_error(
    dist: np.ndarray, B: np.ndarray, Q: np.ndarray, alpha: np.ndarray, z_diag: np.ndarray
) -> float:
    """Relative size of B + Q - (D + adjoint(lambda))."""
    n = dist.shape[0]
    target = dist + 0.5 * (np.outer(alpha, np.ones(n)) + np.outer(np.ones(n), alpha))
    target[np.diag_indices(n)] += z_diag
    denom = float(np.linalg.norm(target)) + 1.0
    return float(np.linalg.norm(B + Q - target)) / denom


def build_certificate_pw(
    data: Dataset, part: Partition, kernels: CertificateKernels | None = None
) -> DualCertificate:
    """Certificate for the trace-constrained relaxation.

    z is the spectral norm of M_Tperp - B_Tperp with the rank-one choice
    B_Tperp = 4 u_ab u_ba^T per pair; B's T-component is then forced by the
    blockwise annihilation constraint.
    """
    if part.k < 2:
        raise MismatchedInputs("certificates need k >= 2 clusters")
    if kernels is None:
        kernels = build_kernels(data, part)
    sizes = kernels.sizes
    slices = block_slices(sizes)
    n = kernels.n

    B_Tperp = _b_tperp(kernels)
    z = _spectral_norm_sym(kernels.M_Tperp - B_Tperp)

    B = np.zeros((n, n))
    for a in range(kernels.k):
        na = sizes[a]
        for b in range(kernels.k):
            if a == b:
                continue
            nb = sizes[b]
            coupling = z * (na + nb) / (2.0 * na * nb)
            B[slices[a], slices[b]] = (
                kernels.M_T[slices[a], slices[b]] - coupling + B_Tperp[slices[a], slices[b]]
            )

    Q = z * (np.eye(n) - kernels.E) + kernels.M - B
    alpha = _alpha(kernels.dist, sizes, np.full(kernels.k, z))
    recon = _reconstruction_error(kernels.dist, B, Q, alpha, np.full(n, z))
    verdicts = _measure(Q, B, sizes, recon)

    X = _block_matrix(sizes)
    primal = float(np.sum(kernels.dist * X))
    dual = -part.k * z - float(alpha.sum())
    return DualCertificate(
        variant=Relaxation.PENG_WEI,
        z=z,
        z_per_cluster=None,
        B=B,
        Q=Q,
        alpha=alpha,
        verdicts=verdicts,
        duality_gap=abs(primal - dual),
    )


def build_certificate_balanced(
    data: Dataset, part: Partition, kernels: CertificateKernels | None = None
) -> DualCertificate:
    """Certificate for the balanced relaxation: z_a = 2k ||Xbar_a||^2."""
    if part.k < 2:
        raise MismatchedInputs("certificates need k >= 2 clusters")
    if not part.is_balanced():
        raise NotBalanced(part.sizes)
    if kernels is None:
        kernels = build_kernels(data, part)
    sizes = kernels.sizes
    n_per = int(sizes[0])
    slices = block_slices(sizes)
    n = kernels.n

    z_vec = _balanced_z(kernels.geom)
    B_Tperp = _b_tperp(kernels)
    B = np.zeros((n, n))
    for a in range(kernels.k):
        for b in range(kernels.k):
            if a == b:
                continue
            coupling = (z_vec[a] + z_vec[b]) / (2.0 * n_per)
            B[slices[a], slices[b]] = (
                kernels.M_T[slices[a], slices[b]] - coupling + B_Tperp[slices[a], slices[b]]
            )

    Q = kernels.F + kernels.M - B
    alpha = _alpha(kernels.dist, sizes, z_vec)
    z_diag = np.repeat(z_vec, n_per)
    recon = _reconstruction_error(kernels.dist, B, Q, alpha, z_diag)
    verdicts = _measure(Q, B, sizes, recon)

    X = _block_matrix(sizes)
    primal = float(np.sum(kernels.dist * X))
    dual = -float(z_vec.sum()) - float(alpha.sum())
    return DualCertificate(
        variant=Relaxation.AMINI_LEVINA,
        z=None,
        z_per_cluster=z_vec,
        B=B,
        Q=Q,
        alpha=alpha,
        verdicts=verdicts,
        duality_gap=abs(primal - dual),
    )


def verify_certificate(
    cert: DualCertificate, kernels: CertificateKernels, part: Partition
) -> CertificateVerdicts:
    """Re-measure a certificate's verdicts from scratch.

    Recomputes the Q spectrum, the B off-diagonal minimum, the blockwise
    annihilation, and the reconstruction identity tying (B, Q) back to the
    distance matrix and the multipliers. Raises MismatchedInputs when the
    certificate and kernels disagree on shape or variant data.
    """
    if not np.array_equal(kernels.sizes, part.sizes):
        raise MismatchedInputs("kernels and partition disagree on cluster sizes")
    n = kernels.n
    if cert.B.shape != (n, n) or cert.Q.shape != (n, n) or cert.alpha.shape != (n,):
        raise MismatchedInputs("certificate matrices do not match kernel dimensions")
    if cert.variant is Relaxation.PENG_WEI:
        if cert.z is None:
            raise MismatchedInputs("trace-variant certificate lacks scalar z")
        z_diag = np.full(n, cert.z)
    else:
        if cert.z_per_cluster is None or len(cert.z_per_cluster) != kernels.k:
            raise MismatchedInputs("balanced certificate lacks per-cluster z")
        if not np.all(kernels.sizes == kernels.sizes[0]):
            raise MismatchedInputs("balanced certificate on unbalanced kernels")
        z_diag = np.repeat(cert.z_per_cluster, int(kernels.sizes[0]))
    recon = _reconstruction_error(kernels.dist, cert.B, cert.Q, cert.alpha, z_diag)
    return _measure(cert.Q, cert.B, kernels.sizes, recon)


def certificate_to_dict(cert: DualCertificate) -> dict:
    """JSON-friendly summary (matrices omitted)."""
    v = cert.verdicts
    out = {
        "variant": cert.variant.value,
        "valid": v.valid,
        "unique": v.valid,
        "optimal": v.optimal,
        "q_min_eig": v.q_min_eig,
        "b_min_offdiag": v.b_min_offdiag,
        "q_row_annihilation": v.q_row_annihilation,
        "duality_gap": cert.duality_gap,
    }
    if cert.z is not None:
        out["z"] = cert.z
    else:
        out["z_a"] = [float(z) for z in cert.z_per_cluster]
    return out
