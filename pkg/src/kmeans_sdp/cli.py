"""Command-line interface.

Subcommands: check, certify, solve, generate, bounds, oracle, lloyd, sweep.
All results are emitted as JSON (or CSV for sweep reports) to --out or
stdout. Exit codes: 0 success, 2 validation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io as dataset_io
from .baselines import brute_force_kmeans, lloyd
from .certificate import build_certificate_balanced, build_certificate_pw, certificate_to_dict
from .errors import Error, NotConverged
from .geometry import Dataset, Partition, distance_matrix
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
)
from .proximity import (
    Mode,
    check_necessary_balanced,
    check_necessary_general,
    check_proximity_balanced,
    check_proximity_general,
    report_to_dict,
)
from .geometry import compute_geometry, compute_pair_stats
from .sdp import Relaxation, SdpProblem, SolverOptions, kmeans_objective, round_solution, solve
from .sweep import SweepConfig, emit_report, run_sweep


def _emit(payload: dict, out_path: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_labeled(path) -> tuple[Dataset, Partition]:
    data = dataset_io.load_dataset_csv(path)
    if data.truth_labels is None:
        raise Error(f"{path}: a label column is required for this command")
    return data, data.truth_partition()


_CHECKS = {
    "general": check_proximity_general,
    "balanced": check_proximity_balanced,
    "necessary-general": check_necessary_general,
    "necessary-balanced": check_necessary_balanced,
}


def _cmd_check(args) -> None:
    data, part = _load_labeled(args.data)
    geom = compute_geometry(data, part)
    pairs = compute_pair_stats(geom)
    report = _CHECKS[args.mode](geom, pairs)
    _emit(report_to_dict(report), args.out)


def _cmd_certify(args) -> None:
    data, part = _load_labeled(args.data)
    if args.variant == "balanced":
        cert = build_certificate_balanced(data, part)
    else:
        cert = build_certificate_pw(data, part)
    _emit(certificate_to_dict(cert), args.out)


def _cmd_solve(args) -> None:
    data = dataset_io.load_dataset_csv(args.data)
    if data.truth_labels is not None:
        ref = data.truth_partition()
        k = args.k if args.k is not None else ref.k
    else:
        ref = None
        if args.k is None:
            raise Error("--k is required when the dataset has no label column")
        k = args.k
    order_part = ref if ref is not None else Partition.from_labels(np.zeros(data.n_points, dtype=int))
    dist, order = distance_matrix(data, order_part)
    if args.variant == "balanced":
        if data.n_points % k != 0:
            raise Error(f"balanced variant needs N divisible by k, got N={data.n_points}, k={k}")
        prob = SdpProblem(
            dist=dist, k=k, variant=Relaxation.AMINI_LEVINA, cluster_size=data.n_points // k
        )
    else:
        prob = SdpProblem(dist=dist, k=k)
    opts = SolverOptions(max_iter=args.max_iter)
    converged = True
    try:
        sol = solve(prob, opts)
    except NotConverged as exc:
        sol = exc.solution
        converged = False
    ref_block = None
    if ref is not None:
        # Points were reordered cluster-contiguously; relabel the reference.
        ref_block = Partition.from_labels(ref.labels[order])
    rounded = round_solution(sol, k, ref=ref_block, allow_unconverged=True)
    labels_original = np.empty(data.n_points, dtype=int)
    labels_original[order] = rounded.part.labels
    if args.dump_z:
        np.savetxt(args.dump_z, sol.Z, delimiter=",")
    _emit(
        {
            "objective": sol.objective,
            "residuals": {
                "psd_violation": sol.residuals.psd_violation,
                "nonneg_violation": sol.residuals.nonneg_violation,
                "rowsum_violation": sol.residuals.rowsum_violation,
                "trace_violation": sol.residuals.trace_violation,
            },
            "iterations": sol.iterations,
            "converged": converged,
            "rounded_labels": labels_original.tolist(),
            "recovery_distance": rounded.recovery_distance,
            "exact": rounded.exact,
        },
        args.out,
    )


def _cmd_generate(args) -> None:
    centers = center_geometry(CenterShape(args.shape), args.k, args.delta, dim=args.dim)
    sizes = [args.n] * args.k
    if args.model == "ball":
        spec = BallModelSpec(
            centers=centers, sizes=sizes, support=SupportKind(args.support), seed=args.seed
        )
        data = sample_ball_model(spec)
        echo = {
            "model": "ball",
            "support": args.support,
            "centers": centers.tolist(),
            "sizes": sizes,
            "seed": args.seed,
        }
    else:
        cov = args.sigma**2 * np.eye(args.dim)
        spec = GmmSpec(centers=centers, covariances=cov, sizes=sizes, seed=args.seed)
        data = sample_gmm(spec)
        echo = {
            "model": "gmm",
            "sigma": args.sigma,
            "centers": centers.tolist(),
            "sizes": sizes,
            "seed": args.seed,
        }
    dataset_io.save_dataset_csv(args.out, data)
    sidecar = str(args.out) + ".json"
    with open(sidecar, "w") as fh:
        json.dump(echo, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _cmd_bounds(args) -> None:
    if args.model == "ball":
        report = sbm_bounds(args.k, args.dim, args.n_total, args.w_min, args.sigma_max, args.gamma)
    else:
        report = gmm_bound(args.k, args.dim, args.n_total, args.w_min, args.sigma_max, args.gamma)
    _emit(
        {
            "delta_sufficient": report.delta_sufficient,
            "delta_necessary": report.delta_necessary,
            "delta_sufficient_asymptotic": report.delta_sufficient_asymptotic,
            "applicable": report.applicable,
            "params": report.params,
            "formula_id": report.formula_id,
        },
        args.out,
    )


def _cmd_oracle(args) -> None:
    data = dataset_io.load_dataset_csv(args.data)
    result = brute_force_kmeans(data, args.k)
    _emit(
        {
            "labels": result.best_partition.labels.tolist(),
            "objective": result.best_objective,
            "unique": result.unique,
            "partitions_enumerated": result.partitions_enumerated,
        },
        args.out,
    )


def _cmd_lloyd(args) -> None:
    data = dataset_io.load_dataset_csv(args.data)
    part = lloyd(data, args.k, seed=args.seed)
    _emit(
        {
            "labels": part.labels.tolist(),
            "objective": kmeans_objective(data, part),
        },
        args.out,
    )


def _cmd_sweep(args) -> None:
    with open(args.config) as fh:
        raw = json.load(fh)
    if args.seed is not None:
        raw["seed"] = args.seed
    cfg = SweepConfig.from_dict(raw)
    result = run_sweep(cfg)
    if args.out:
        emit_report(result, args.format, args.out)
    else:
        _emit(result.to_dict(), None)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kmeans-sdp",
        description="Exact-recovery toolkit for k-means: proximity checks, SDP solves, "
        "dual certificates, model generators, and phase-transition sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="evaluate a proximity condition on a labeled dataset")
    p.add_argument("--data", required=True, help="CSV with a label column")
    p.add_argument("--mode", choices=sorted(_CHECKS), default="general")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("certify", help="build and verify a dual certificate")
    p.add_argument("--data", required=True, help="CSV with a label column")
    p.add_argument("--variant", choices=["pw", "balanced"], default="pw")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("solve", help="solve the SDP relaxation and round")
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--variant", choices=["pw", "balanced"], default="pw")
    p.add_argument("--max-iter", type=int, default=50_000)
    p.add_argument("--dump-z", help="write the solution matrix Z as CSV")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("generate", help="sample a synthetic dataset")
    p.add_argument("--model", choices=["ball", "gmm"], required=True)
    p.add_argument("--shape", choices=[s.value for s in CenterShape], default="line")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--n", type=int, default=30, help="points per cluster")
    p.add_argument("--support", choices=[s.value for s in SupportKind], default="ball")
    p.add_argument("--sigma", type=float, default=1.0, help="gmm isotropic std")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV (sidecar JSON written alongside)")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("bounds", help="evaluate separation-bound formulas")
    p.add_argument("--model", choices=["ball", "gmm"], required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--n-total", type=int, required=True)
    p.add_argument("--w-min", type=float, required=True)
    p.add_argument("--sigma-max", type=float, required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("oracle", help="exact k-means optimum by enumeration (tiny N)")
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("lloyd", help="Lloyd's algorithm with k-means++ seeding")
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_lloyd)

    p = sub.add_parser("sweep", help="run a phase-transition sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json", "plotdata"], default="csv")
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (Error, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
