"""Exact-recovery toolkit for k-means clustering.

Checks deterministic proximity conditions sufficient for a partition to be
the unique global k-means optimum, solves the trace-constrained and
balanced SDP relaxations, constructs and verifies the dual certificates
behind those guarantees, and reproduces stochastic-ball / Gaussian-mixture
phase-transition experiments at desk scale.
"""

from .baselines import BruteForceResult, brute_force_kmeans, lloyd, stirling2
from .certificate import (
    CertificateKernels,
    CertificateVerdicts,
    DualCertificate,
    build_certificate_balanced,
    build_certificate_pw,
    build_kernels,
    verify_certificate,
)
from .geometry import (
    ClusterGeometry,
    Dataset,
    PairStats,
    Partition,
    compute_geometry,
    compute_pair_stats,
    distance_matrix,
)
from .io import load_dataset_csv, save_dataset_csv
from .models import (
    BallModelSpec,
    BoundReport,
    CenterShape,
    GmmSpec,
    SupportKind,
    center_geometry,
    gmm_bound,
    sample_ball_model,
    sample_gmm,
    sbm_bounds,
    support_sigma_max,
)
from .proximity import (
    AcceptVerdict,
    Mode,
    ProximityReport,
    accept_answer,
    check_necessary_balanced,
    check_necessary_general,
    check_proximity_balanced,
    check_proximity_general,
)
from .sdp import (
    Relaxation,
    RoundedPartition,
    SdpProblem,
    SdpSolution,
    SolverOptions,
    ideal_solution,
    kmeans_objective,
    round_solution,
    solve,
)
from .sweep import (
    SuccessMetric,
    SweepConfig,
    SweepResult,
    emit_report,
    isotonic_max_violation,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "AcceptVerdict",
    "BallModelSpec",
    "BoundReport",
    "BruteForceResult",
    "CenterShape",
    "CertificateKernels",
    "CertificateVerdicts",
    "ClusterGeometry",
    "Dataset",
    "DualCertificate",
    "GmmSpec",
    "Mode",
    "PairStats",
    "Partition",
    "ProximityReport",
    "Relaxation",
    "RoundedPartition",
    "SdpProblem",
    "SdpSolution",
    "SolverOptions",
    "SuccessMetric",
    "SupportKind",
    "SweepConfig",
    "SweepResult",
    "accept_answer",
    "brute_force_kmeans",
    "build_certificate_balanced",
    "build_certificate_pw",
    "build_kernels",
    "center_geometry",
    "check_necessary_balanced",
    "check_necessary_general",
    "check_proximity_balanced",
    "check_proximity_general",
    "compute_geometry",
    "compute_pair_stats",
    "distance_matrix",
    "emit_report",
    "gmm_bound",
    "ideal_solution",
    "isotonic_max_violation",
    "kmeans_objective",
    "lloyd",
    "load_dataset_csv",
    "round_solution",
    "run_sweep",
    "sample_ball_model",
    "sample_gmm",
    "save_dataset_csv",
    "sbm_bounds",
    "solve",
    "stirling2",
    "support_sigma_max",
    "verify_certificate",
]
