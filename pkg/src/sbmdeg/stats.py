"""Degree statistics and the four goodness-of-fit tests against degree corrections."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats as sps

from . import exactdist, thresholds
from .model import AdjacencySample, CommunityAssignment, GraphParams, NullMoments, ParameterDomainError

__all__ = [
    "NullMoments",
    "TestOutcome",
    "degrees",
    "split_degrees",
    "standardized_combo",
    "total_degree_null",
    "total_degree_test",
    "hc_grid",
    "hc_statistic",
    "hc_test",
    "max_degree_threshold",
    "max_degree_test",
    "two_stage_test",
]


@dataclass(frozen=True)
class TestOutcome:
    """One accept/reject decision; ``reject`` is always ``statistic > threshold``."""

    statistic: float
    threshold: float
    test_id: str
    nuisance: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    __test__ = False  # not a pytest class

    @property
    def reject(self) -> bool:
        return bool(self.statistic > self.threshold)


def _check_sizes(g: AdjacencySample, c: CommunityAssignment) -> None:
    if g.n != c.n:
        raise ParameterDomainError(f"graph has {g.n} vertices, community has {c.n}")


def degrees(g: AdjacencySample) -> np.ndarray:
    return np.count_nonzero(g.edges, axis=1).astype(np.int64)


def split_degrees(g: AdjacencySample, c: CommunityAssignment) -> tuple[np.ndarray, np.ndarray]:
    """Within-block and across-block degrees ``(d(1), d(2))`` of every vertex."""
    _check_sizes(g, c)
    in_c = np.count_nonzero(g.edges[:, c.members], axis=1).astype(np.int64)
    total = degrees(g)
    within = np.where(c.members, in_c, total - in_c)
    return within, total - within


def _combo(g, c, beta1, beta2):
    if not (beta1 > 0 and beta2 > 0):
        raise ParameterDomainError(f"weights must be positive, got ({beta1}, {beta2})")
    if beta1 == beta2:
        # Block-agnostic: the split is never looked at.
        d = degrees(g).astype(np.float64)
        return beta1 * d
    d1, d2 = split_degrees(g, c)
    return beta1 * d1 + beta2 * d2


def standardized_combo(g, c, beta1, beta2, m: NullMoments) -> np.ndarray:
    """``D_i = [beta1 (d_i(1) - mu1) + beta2 (d_i(2) - mu2)] / sigma(beta1, beta2)``."""
    raw = _combo(g, c, beta1, beta2)
    return (raw - m.weighted_mean(beta1, beta2)) / m.sigma_n0_weighted(beta1, beta2)


# ---------------------------------------------------------------- total degree

def total_degree_null(params: GraphParams) -> tuple[float, float]:
    """Exact null mean and sd of ``sum_i d_i`` (each edge counted twice)."""
    n, pa, pb = params.n, params.a / params.n, params.b / params.n
    within_pairs = 2 * math.comb(n // 2, 2)
    across_pairs = (n // 2) ** 2
    mean = 2 * (within_pairs * pa + across_pairs * pb)
    var = 4 * (within_pairs * pa * (1 - pa) + across_pairs * pb * (1 - pb))
    return mean, math.sqrt(var)


def total_degree_test(g: AdjacencySample, params: GraphParams, calibration=("normal", 0.05)) -> TestOutcome:
    """Reject for a large edge total.

    ``calibration`` is ``("normal", level)``, ``("chebyshev", level)`` or
    ``("cutoff", value)``.
    """
    kind, value = calibration
    mean, sd = total_degree_null(params)
    if kind in ("normal", "chebyshev"):
        if not 0 < value < 1:
            raise ParameterDomainError(f"level must lie in (0, 1), got {value}")
        if kind == "normal":
            thr = mean + float(sps.norm.isf(value)) * sd
        else:
            thr = mean + sd / math.sqrt(value)
    elif kind == "cutoff":
        thr = float(value)
    else:
        raise ValueError(f"unknown calibration {kind!r}")
    stat = float(degrees(g).sum())
    return TestOutcome(stat, thr, "total_degree", {"calibration": kind, "value": value})


# ------------------------------------------------------------ higher criticism

def hc_grid(n: int) -> list[int]:
    """Positive integers ``t`` with ``t < sqrt(10 log n)``."""
    bound = math.sqrt(10 * math.log(n))
    top = math.ceil(bound) - 1
    if top < 1:
        raise ParameterDomainError(f"threshold grid is empty for n={n}")
    return list(range(1, top + 1))


def _null_oracles(params, beta1, beta2):
    def tail(t):
        return exactdist.null_tail(params, beta1, beta2, t)

    def var(t):
        return exactdist.hc_moments("null", params, beta1, beta2, t)[1]

    return tail, var


def hc_statistic(
    g: AdjacencySample,
    c: CommunityAssignment,
    beta1: float,
    beta2: float,
    params: GraphParams,
    tail_oracle: Callable[[float], float] | None = None,
    var_oracle: Callable[[float], float] | None = None,
) -> tuple[float, list[tuple[int, float]]]:
    """Higher-criticism value and the per-threshold ``(t, GHC_t)`` list.

    The oracles give the exact null tail ``P(D_i > t)`` and the exact null
    variance of ``HC_t``.  They default to :mod:`exactdist`, and callers that
    evaluate many graphs should pass cached versions.
    """
    _check_sizes(g, c)
    if tail_oracle is None or var_oracle is None:
        t0, v0 = _null_oracles(params, beta1, beta2)
        tail_oracle = tail_oracle or t0
        var_oracle = var_oracle or v0
    raw = _combo(g, c, beta1, beta2)
    per = []
    for t in hc_grid(g.n):
        cutoff = exactdist.hc_cutoff(params, beta1, beta2, t)
        hc_t = np.count_nonzero(raw > cutoff) - g.n * tail_oracle(t)
        v = var_oracle(t)
        per.append((t, hc_t / math.sqrt(v) if v > 0 else (math.inf if hc_t > 0 else -math.inf)))
    return max(v for _, v in per), per


def hc_test(g, c, beta1, beta2, params, tail_oracle=None, var_oracle=None) -> TestOutcome:
    value, per = hc_statistic(g, c, beta1, beta2, params, tail_oracle, var_oracle)
    return TestOutcome(
        value,
        math.sqrt(math.log(g.n)),
        "hc",
        {"beta1": beta1, "beta2": beta2, "t_grid": [t for t, _ in per]},
    )


# ------------------------------------------------------------- maximum degree

def max_degree_threshold(n: int, calibration) -> float:
    """``("delta", d)`` gives ``sqrt(2(1+d) log n)``.  ``("gumbel", level)`` gives the
    Gumbel-corrected cutoff on the standardized scale."""
    kind, value = calibration
    if kind == "delta":
        if not value > 0:
            raise ParameterDomainError(f"delta must be positive, got {value}")
        return math.sqrt(2 * (1 + value) * math.log(n))
    if kind == "gumbel":
        if not 0 < value < 1:
            raise ParameterDomainError(f"level must lie in (0, 1), got {value}")
        y = thresholds.gumbel_quantile(1 - value)
        return thresholds.gumbel_centering(n, 0.0, 1.0, y)
    raise ValueError(f"unknown calibration {kind!r}")


def max_degree_test(g, c, beta1, beta2, params, calibration=("gumbel", 0.05)) -> TestOutcome:
    kind, _ = calibration
    notes = []
    if kind == "gumbel":
        if beta1 != beta2:
            raise ParameterDomainError("the Gumbel calibration is defined for beta1 == beta2 only")
        if params.b <= math.log(params.n) ** 3:
            notes.append(
                f"b = {params.b} <= (log n)^3 = {math.log(params.n) ** 3:.1f}: Gumbel limit may be inaccurate"
            )
    c = c if c is not None else CommunityAssignment.first_half(g.n)
    m = NullMoments.from_params(params)
    stat = float(np.max(standardized_combo(g, c, beta1, beta2, m)))
    thr = max_degree_threshold(g.n, calibration)
    return TestOutcome(
        stat, thr, "max_degree",
        {"beta1": beta1, "beta2": beta2, "calibration": list(calibration)},
        tuple(notes),
    )


# ------------------------------------------------------------------ two stage

def two_stage_test(g, params, recovery, level: float = 0.05, oracles=None) -> TestOutcome:
    """Recover communities, then union of the weighted HC test and the vanilla max test.

    ``recovery`` maps a graph to a ``RecoveryReport`` (or raises).  ``oracles``
    optionally supplies cached ``(tail_oracle, var_oracle)`` for the optimal
    weights.  The reported statistic is ``max(HC / sqrt(log n), max_D / max_thr)``
    against threshold 1, so ``reject`` matches the union rule.
    """
    if params.tau_a == params.tau_b:
        beta1 = beta2 = 1.0
    else:
        beta1, beta2 = thresholds.optimal_betas(thresholds.RegimeLimits(params.tau_a, params.tau_b))
    mx = max_degree_test(g, None, 1.0, 1.0, params, ("gumbel", level))
    notes = list(mx.warnings)
    try:
        report = recovery(g)
    except Exception as exc:  # recovery failure -> inconclusive, max stage decides
        notes.append(f"recovery failed: {exc}")
        report = None
    mx_ratio = mx.statistic / mx.threshold
    nuisance = {"beta1": beta1, "beta2": beta2, "level": level}
    if report is None:
        nuisance["inconclusive"] = True
        return TestOutcome(mx_ratio, 1.0, "two_stage", nuisance, tuple(notes))
    tail, var = oracles if oracles is not None else (None, None)
    hc = hc_test(g, report.estimate, beta1, beta2, params, tail, var)
    nuisance.update(hc_stat=hc.statistic, max_stat=mx.statistic, hc_reject=hc.reject, max_reject=mx.reject)
    stat = max(hc.statistic / hc.threshold, mx_ratio)
    return TestOutcome(stat, 1.0, "two_stage", nuisance, tuple(notes))
