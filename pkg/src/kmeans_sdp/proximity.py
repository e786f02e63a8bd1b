"""Proximity conditions for exact recovery, and the answer-accepting test.

Two sufficient conditions (general and balanced) and two necessary
conditions are evaluated per cluster pair. For the sufficient conditions a
pair passes when the margin of every point past the bisector of the two
centers exceeds a spread-dependent threshold:

    general:  (h - 2*tau) / 2  >  sqrt( sum_l ||Xbar_l||^2 * (1/n_a + 1/n_b) ) / 2
    balanced: (h - 2*tau) / 2  >  sqrt( (k/n) * (||Xbar_a||^2 + ||Xbar_b||^2) ) / 2

For the necessary conditions the pair quantity is the center distance itself:

    general:  h  >=  tau + sqrt(tau^2 + max_t ||Xbar_t||^2 * (1/n_a + 1/n_b))
    balanced: h  >=  tau + sqrt(tau^2 + (||Xbar_a||^2 + ||Xbar_b||^2) / n)

A failed necessary condition proves the corresponding relaxation cannot
recover the partition exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import NotBalanced
from .geometry import (
    ClusterGeometry,
    Dataset,
    PairStats,
    Partition,
    compute_geometry,
    compute_pair_stats,
)

# Float ties must not silently certify: sufficient checks demand a margin
# strictly above +slack, necessary checks tolerate a margin down to -slack,
# with slack = 1e-12 * max(h).
_TIE_SLACK = 1e-12


class Mode(enum.Enum):
    GENERAL = "general"
    BALANCED = "balanced"
    NECESSARY_GENERAL = "necessary_general"
    NECESSARY_BALANCED = "necessary_balanced"


class AcceptVerdict(enum.Enum):
    CERTIFIED_UNIQUE_OPTIMUM = "certified_unique_optimum"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class PairCheck:
    """One unordered pair's margin, with both ordered projection maxima."""

    a: int
    b: int
    lhs: float
    rhs: float
    margin: float
    max_u_ab: float
    max_u_ba: float


@dataclass(frozen=True)
class ProximityReport:
    mode: Mode
    satisfied: bool
    pairs: tuple[PairCheck, ...]
    cost_counters: dict

    def pair(self, a: int, b: int) -> PairCheck:
        a, b = min(a, b), max(a, b)
        for p in self.pairs:
            if (p.a, p.b) == (a, b):
                return p
        raise KeyError((a, b))


def _cost_counters(geom: ClusterGeometry) -> dict:
    m = geom.dim
    n_total = int(geom.sizes.sum())
    return {
        "svd_flops_estimate": int(m * m * n_total),
        "inner_products": int((geom.k - 1) * n_total),
    }


def _build_report(geom: ClusterGeometry, pairs: PairStats, mode: Mode, rhs_fn) -> ProximityReport:
    if geom.k < 2:
        _raise_too_few(geom.k)
    necessary = mode in (Mode.NECESSARY_GENERAL, Mode.NECESSARY_BALANCED)
    slack = _TIE_SLACK * float(pairs.h.max())
    checks = []
    ok = True
    for a in range(geom.k):
        for b in range(a + 1, geom.k):
            h = float(pairs.h[a, b])
            tau = float(pairs.tau[a, b])
            rhs_core = rhs_fn(a, b)
            if necessary:
                lhs = h
                rhs = tau + np.sqrt(tau * tau + rhs_core)
            else:
                lhs = 0.5 * h - tau
                rhs = 0.5 * np.sqrt(rhs_core)
            margin = float(lhs - rhs)
            passes = margin >= -slack if necessary else margin > slack
            ok = bool(ok and passes)
            checks.append(
                PairCheck(
                    a=a,
                    b=b,
                    lhs=float(lhs),
                    rhs=float(rhs),
                    margin=margin,
                    max_u_ab=float(pairs.u[a][b].max()),
                    max_u_ba=float(pairs.u[b][a].max()),
                )
            )
    return ProximityReport(
        mode=mode, satisfied=ok, pairs=tuple(checks), cost_counters=_cost_counters(geom)
    )


def _raise_too_few(k):
    raise ValueError(f"proximity conditions need k >= 2 clusters, got k={k}")


def _require_balanced(geom: ClusterGeometry) -> int:
    sizes = geom.sizes
    if not np.all(sizes == sizes[0]):
        raise NotBalanced(sizes)
    return int(sizes[0])


def check_proximity_general(geom: ClusterGeometry, pairs: PairStats) -> ProximityReport:
    """Sufficient condition for the trace-constrained relaxation.

    Pass means the partition is provably the unique optimum of both the
    relaxation and k-means itself.
    """
    total = geom.op_norm_sq_sum

    def rhs_core(a, b):
        return total * (1.0 / geom.sizes[a] + 1.0 / geom.sizes[b])

    return _build_report(geom, pairs, Mode.GENERAL, rhs_core)


def check_proximity_balanced(geom: ClusterGeometry, pairs: PairStats) -> ProximityReport:
    """Sufficient condition for the balanced (fixed-diagonal) relaxation.

    Fully localized: each pair's threshold uses only that pair's operator
    norms. Requires equal cluster sizes.
    """
    n = _require_balanced(geom)
    k = geom.k

    def rhs_core(a, b):
        return (k / n) * (geom.op_norms[a] ** 2 + geom.op_norms[b] ** 2)

    return _build_report(geom, pairs, Mode.BALANCED, rhs_core)


def check_necessary_general(geom: ClusterGeometry, pairs: PairStats) -> ProximityReport:
    """Necessary condition; failure proves the relaxation cannot recover."""
    worst = float(np.max(geom.op_norms) ** 2)

    def rhs_core(a, b):
        return worst * (1.0 / geom.sizes[a] + 1.0 / geom.sizes[b])

    return _build_report(geom, pairs, Mode.NECESSARY_GENERAL, rhs_core)


def check_necessary_balanced(geom: ClusterGeometry, pairs: PairStats) -> ProximityReport:
    """Necessary condition for the balanced relaxation."""
    n = _require_balanced(geom)

    def rhs_core(a, b):
        return (geom.op_norms[a] ** 2 + geom.op_norms[b] ** 2) / n

    return _build_report(geom, pairs, Mode.NECESSARY_BALANCED, rhs_core)


def accept_answer(data: Dataset, part: Partition) -> AcceptVerdict:
    """Accept-or-unknown test for a candidate k-means answer.

    Returns CERTIFIED_UNIQUE_OPTIMUM when the general proximity condition
    holds, which proves the partition is the unique global k-means optimum.
    Anything else (including k=1, where the condition is vacuous) returns
    UNKNOWN; the test never rejects an answer.
    """
    if part.k < 2:
        return AcceptVerdict.UNKNOWN
    geom = compute_geometry(data, part)
    pairs = compute_pair_stats(geom)
    report = check_proximity_general(geom, pairs)
    if report.satisfied:
        return AcceptVerdict.CERTIFIED_UNIQUE_OPTIMUM
    return AcceptVerdict.UNKNOWN


def report_to_dict(report: ProximityReport) -> dict:
    """JSON-friendly form of a report."""
    return {
        "mode": report.mode.value,
        "satisfied": report.satisfied,
        "pairs": [
            {
                "a": p.a,
                "b": p.b,
                "lhs": p.lhs,
                "rhs": p.rhs,
                "margin": p.margin,
                "max_u_ab": p.max_u_ab,
                "max_u_ba": p.max_u_ba,
            }
            for p in report.pairs
        ],
        "cost_counters": report.cost_counters,
    }
