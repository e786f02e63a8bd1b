"""Batch phase-transition experiments: generate, solve, round, score.

A sweep runs `trials_per_delta` independent trials at every separation in
`delta_grid`, counts exact recoveries, and annotates the resulting rate
curve with the model-family separation bounds. Trial (i, t) draws its seed
from the spawn key (i, t) of the sweep seed, so results are reproducible and
independent of execution order; a work pool reduces rows deterministically.
"""

from __future__ import annotations

import enum
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .certificate import build_certificate_balanced, build_certificate_pw
from .errors import DimensionMismatch, NotConverged
from .geometry import Partition, distance_matrix
from .models import (
    BallModelSpec,
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
from .sdp import Relaxation, SdpProblem, SolverOptions, ideal_solution, solve


class SuccessMetric(enum.Enum):
    SDP_RECOVERY = "sdp_recovery"
    CERTIFICATE_VALID = "certificate_valid"
    BOTH = "both"


@dataclass(frozen=True)
class SweepConfig:
    """One phase-transition experiment.

    kind is "ball" or "gmm"; the model is laid out on the chosen center
    geometry at each separation in delta_grid with n_per_cluster points per
    cluster. For the ball model `support` picks the noise distribution; for
    the Gaussian mixture the covariance is sigma^2 I.
    """

    kind: str
    shape: CenterShape
    k: int
    dim: int
    n_per_cluster: int
    delta_grid: tuple[float, ...]
    trials_per_delta: int
    relaxation: Relaxation = Relaxation.PENG_WEI
    metric: SuccessMetric = SuccessMetric.SDP_RECOVERY
    support: SupportKind = SupportKind.UNIFORM_BALL
    sigma: float = 1.0
    eps_rec: float = 1e-3
    seed: int = 0
    max_iter: int = 50_000
    workers: int = 1

    def __post_init__(self):
        if self.kind not in ("ball", "gmm"):
            raise DimensionMismatch(f"unknown model kind {self.kind!r}")
        grid = tuple(float(d) for d in self.delta_grid)
        if len(grid) == 0:
            raise DimensionMismatch("delta_grid must be nonempty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise DimensionMismatch("delta_grid must be strictly increasing")
        if self.trials_per_delta < 1:
            raise DimensionMismatch("trials_per_delta must be >= 1")
        if self.k < 2 or self.n_per_cluster < 1:
            raise DimensionMismatch("need k >= 2 and n_per_cluster >= 1")
        object.__setattr__(self, "delta_grid", grid)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "shape": self.shape.value,
            "k": self.k,
            "dim": self.dim,
            "n_per_cluster": self.n_per_cluster,
            "delta_grid": list(self.delta_grid),
            "trials_per_delta": self.trials_per_delta,
            "relaxation": self.relaxation.value,
            "metric": self.metric.value,
            "support": self.support.value,
            "sigma": self.sigma,
            "eps_rec": self.eps_rec,
            "seed": self.seed,
            "max_iter": self.max_iter,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "SweepConfig":
        return cls(
            kind=raw["kind"],
            shape=CenterShape(raw.get("shape", "line")),
            k=int(raw["k"]),
            dim=int(raw.get("dim", 2)),
            n_per_cluster=int(raw.get("n_per_cluster", 30)),
            delta_grid=tuple(raw["delta_grid"]),
            trials_per_delta=int(raw.get("trials_per_delta", 20)),
            relaxation=Relaxation(raw.get("relaxation", "peng_wei")),
            metric=SuccessMetric(raw.get("metric", "sdp_recovery")),
            support=SupportKind(raw.get("support", "ball")),
            sigma=float(raw.get("sigma", 1.0)),
            eps_rec=float(raw.get("eps_rec", 1e-3)),
            seed=int(raw.get("seed", 0)),
            max_iter=int(raw.get("max_iter", 50_000)),
            workers=int(raw.get("workers", 1)),
        )


@dataclass(frozen=True)
class SweepRow:
    delta: float
    trials: int
    successes: int
    rate: float
    unconverged: int
    mean_solve_iters: float
    mean_wall_ms: float
    cert_successes: int | None = None


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    rows: tuple[SweepRow, ...]
    annotations: dict = field(default_factory=dict)

    def rates(self) -> np.ndarray:
        return np.array([row.rate for row in self.rows])

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "rows": [
                {
                    "delta": r.delta,
                    "trials": r.trials,
                    "successes": r.successes,
                    "rate": r.rate,
                    "unconverged": r.unconverged,
                    "mean_solve_iters": r.mean_solve_iters,
                    "mean_wall_ms": r.mean_wall_ms,
                    **({"cert_successes": r.cert_successes} if r.cert_successes is not None else {}),
                }
                for r in self.rows
            ],
            "annotations": self.annotations,
        }


def _trial_seed(base_seed: int, delta_index: int, trial: int) -> int:
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(delta_index, trial))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _run_trial(cfg: SweepConfig, delta_index: int, trial: int) -> dict:
    delta = cfg.delta_grid[delta_index]
    centers = center_geometry(cfg.shape, cfg.k, delta, dim=cfg.dim)
    seed = _trial_seed(cfg.seed, delta_index, trial)
    sizes = [cfg.n_per_cluster] * cfg.k
    if cfg.kind == "ball":
        data = sample_ball_model(
            BallModelSpec(centers=centers, sizes=sizes, support=cfg.support, seed=seed)
        )
    else:
        cov = cfg.sigma**2 * np.eye(cfg.dim)
        data = sample_gmm(GmmSpec(centers=centers, covariances=cov, sizes=sizes, seed=seed))
    truth = data.truth_partition()
    dist, _ = distance_matrix(data, truth)
    if cfg.relaxation is Relaxation.AMINI_LEVINA:
        prob = SdpProblem(dist=dist, k=cfg.k, variant=cfg.relaxation, cluster_size=cfg.n_per_cluster)
    else:
        prob = SdpProblem(dist=dist, k=cfg.k)
    opts = SolverOptions(max_iter=cfg.max_iter)

    out = {"iters": cfg.max_iter, "wall_ms": 0.0, "recovered": False, "converged": False}
    t0 = time.perf_counter()
    try:
        sol = solve(prob, opts)
        out["converged"] = True
        out["iters"] = sol.iterations
        X = ideal_solution(Partition.from_labels(np.repeat(np.arange(cfg.k), cfg.n_per_cluster)))
        rec = float(np.linalg.norm(sol.Z - X)) / float(np.linalg.norm(X))
        out["recovered"] = rec <= cfg.eps_rec
    except NotConverged:
        pass
    out["wall_ms"] = (time.perf_counter() - t0) * 1e3

    if cfg.metric in (SuccessMetric.CERTIFICATE_VALID, SuccessMetric.BOTH):
        if cfg.relaxation is Relaxation.AMINI_LEVINA:
            cert = build_certificate_balanced(data, truth)
        else:
            cert = build_certificate_pw(data, truth)
        out["cert_valid"] = cert.verdicts.valid
    if cfg.metric is SuccessMetric.SDP_RECOVERY:
        out["success"] = out["recovered"]
    elif cfg.metric is SuccessMetric.CERTIFICATE_VALID:
        out["success"] = out["cert_valid"]
    else:
        out["success"] = out["recovered"] and out["cert_valid"]
    return out


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Execute the sweep; failures (including solver non-convergence) count
    as unsuccessful trials and never abort the run."""
    tasks = [(di, t) for di in range(len(cfg.delta_grid)) for t in range(cfg.trials_per_delta)]
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(lambda dt: _run_trial(cfg, *dt), tasks))
    else:
        outcomes = [_run_trial(cfg, di, t) for di, t in tasks]

    rows = []
    per_delta = cfg.trials_per_delta
    track_cert = cfg.metric in (SuccessMetric.CERTIFICATE_VALID, SuccessMetric.BOTH)
    for di, delta in enumerate(cfg.delta_grid):
        chunk = outcomes[di * per_delta : (di + 1) * per_delta]
        successes = sum(bool(o["success"]) for o in chunk)
        rows.append(
            SweepRow(
                delta=float(delta),
                trials=per_delta,
                successes=successes,
                rate=successes / per_delta,
                unconverged=sum(not o["converged"] for o in chunk),
                mean_solve_iters=float(np.mean([o["iters"] for o in chunk])),
                mean_wall_ms=float(np.mean([o["wall_ms"] for o in chunk])),
                cert_successes=sum(bool(o.get("cert_valid")) for o in chunk) if track_cert else None,
            )
        )

    n_total = cfg.k * cfg.n_per_cluster
    w_min = 1.0 / cfg.k
    if cfg.kind == "ball":
        bounds = sbm_bounds(
            cfg.k, cfg.dim, n_total, w_min, support_sigma_max(cfg.support, cfg.dim)
        )
        annotations = {
            "sufficient": bounds.delta_sufficient,
            "sufficient_asymptotic": bounds.delta_sufficient_asymptotic,
            "necessary": bounds.delta_necessary,
            "conjecture_line": 2.0 + 2.0 / cfg.dim,
        }
    else:
        bounds = gmm_bound(cfg.k, cfg.dim, n_total, w_min, cfg.sigma)
        annotations = {
            "sufficient": bounds.delta_sufficient,
            "sufficient_asymptotic": bounds.delta_sufficient_asymptotic,
        }
    return SweepResult(config=cfg, rows=tuple(rows), annotations=annotations)


def isotonic_fit(rates) -> np.ndarray:
    """Nondecreasing least-squares fit (pool adjacent violators)."""
    values = [float(r) for r in rates]
    weights = [1.0] * len(values)
    blocks = [[v, w, 1] for v, w in zip(values, weights)]
    merged: list[list] = []
    for blk in blocks:
        merged.append(blk)
        while len(merged) > 1 and merged[-2][0] > merged[-1][0] + 1e-15:
            v2, w2, c2 = merged.pop()
            v1, w1, c1 = merged.pop()
            w = w1 + w2
            merged.append([(v1 * w1 + v2 * w2) / w, w, c1 + c2])
    out = []
    for v, _, c in merged:
        out.extend([v] * c)
    return np.array(out)


def isotonic_max_violation(rates) -> float:
    """Largest deviation of the rate curve from its best monotone fit."""
    rates = np.asarray(rates, dtype=float)
    return float(np.abs(rates - isotonic_fit(rates)).max()) if rates.size else 0.0


def emit_report(result: SweepResult, fmt: str, path) -> str:
    """Write a sweep report; formats: csv, json, plotdata."""
    if fmt == "json":
        payload = json.dumps(result.to_dict(), sort_keys=True, indent=2) + "\n"
        with open(path, "w") as fh:
            fh.write(payload)
        return str(path)
    base_cols = [
        "delta",
        "trials",
        "successes",
        "rate",
        "unconverged",
        "mean_solve_iters",
        "mean_wall_ms",
    ]
    track_cert = any(r.cert_successes is not None for r in result.rows)
    if track_cert:
        base_cols.append("cert_successes")
    if fmt == "csv":
        lines = [",".join(base_cols)]
        for r in result.rows:
            vals = [
                f"{r.delta:.10g}",
                str(r.trials),
                str(r.successes),
                f"{r.rate:.10g}",
                str(r.unconverged),
                f"{r.mean_solve_iters:.10g}",
                f"{r.mean_wall_ms:.10g}",
            ]
            if track_cert:
                vals.append(str(r.cert_successes))
            lines.append(",".join(vals))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        return str(path)
    if fmt == "plotdata":
        cols = ["kind"] + base_cols + ["label", "value"]
        lines = [",".join(cols)]
        for r in result.rows:
            vals = [
                "rate",
                f"{r.delta:.10g}",
                str(r.trials),
                str(r.successes),
                f"{r.rate:.10g}",
                str(r.unconverged),
                f"{r.mean_solve_iters:.10g}",
                f"{r.mean_wall_ms:.10g}",
            ]
            if track_cert:
                vals.append(str(r.cert_successes))
            vals.extend(["", ""])
            lines.append(",".join(vals))
        pad = len(base_cols)
        for label, value in sorted(result.annotations.items()):
            lines.append(",".join(["bound"] + [""] * pad + [label, f"{value:.10g}"]))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        return str(path)
    raise DimensionMismatch(f"unknown report format {fmt!r}")
