"""Seed-deterministic Monte Carlo experiments.

Replicate ``r`` draws its graph from seed ``base_seed ^ r``.  Null replicates
use indices ``0 .. reps-1``; alternative replicates at grid point ``k`` use
``reps * (k + 1) + r`` (or ``reps + r`` for every ``k`` in coupled mode).
Workers only ever see (config, seed) pairs and results are gathered in index
order, so every output is independent of the worker count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import stats as sps

from . import community, exactdist, stats, thresholds
from .model import (
    CommunityAssignment,
    GraphParams,
    NullMoments,
    ParameterDomainError,
    make_theta,
    sample_graph,
)

__all__ = [
    "TESTS",
    "ExperimentConfig",
    "RiskEstimate",
    "GumbelCheck",
    "default_workers",
    "signal_A",
    "estimate_risk",
    "compare_tests",
    "power_curve",
    "phase_diagram",
    "gumbel_check",
]

TESTS = ("total_degree", "hc", "max_degree", "two_stage", "always", "never")
QUANTILE_LEVELS = tuple(round(0.1 * k, 1) for k in range(1, 10))


def default_workers() -> int:
    return int(os.environ.get("SBMDEG_WORKERS", "1"))


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment.

    The alternative is ``1 + A`` on ``n**(1-alpha)`` vertices, with ``A`` given
    by ``signal = (kind, value)``:

    * ``("C", C)`` means ``A = sqrt(C log n) / sigma_n0``.
    * ``("r", r)`` means ``A = n**(-r) / sqrt(a)``, the dense-regime scale.
    * ``("A", A)`` sets ``A`` directly.

    ``options`` carries test settings: ``beta1``/``beta2`` (a number or
    ``"optimal"``), ``level``, ``calibration`` and ``delta``.
    """

    params: GraphParams
    alpha: float
    signal: tuple[str, float] = ("C", 0.0)
    support_rule: str = "balanced-random"
    test: str = "hc"
    options: dict = field(default_factory=dict)
    reps: int = 100
    base_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ParameterDomainError(f"reps must be >= 1, got {self.reps}")
        if self.workers < 1:
            raise ParameterDomainError(f"workers must be >= 1, got {self.workers}")
        if self.test not in TESTS:
            raise ParameterDomainError(f"unknown test {self.test!r}; choose from {', '.join(TESTS)}")
        if self.signal[0] not in ("C", "A", "r"):
            raise ParameterDomainError(f"signal kind must be C, A or r, got {self.signal[0]!r}")
        if not 0 < self.alpha < 1:
            raise ParameterDomainError(f"alpha must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class RiskEstimate:
    type1: float
    type2: float
    risk: float
    se_type1: float
    se_type2: float
    reps: int

    @classmethod
    def from_counts(cls, null_rejects: int, alt_rejects: int, reps: int) -> "RiskEstimate":
        t1 = null_rejects / reps
        t2 = 1 - alt_rejects / reps
        return cls(
            type1=t1,
            type2=t2,
            risk=t1 + t2,
            se_type1=math.sqrt(t1 * (1 - t1) / reps),
            se_type2=math.sqrt(t2 * (1 - t2) / reps),
            reps=reps,
        )

    @property
    def power(self) -> float:
        return 1 - self.type2

    @property
    def se_risk(self) -> float:
        return math.hypot(self.se_type1, self.se_type2)


def signal_A(params: GraphParams, signal: tuple[str, float]) -> float:
    kind, value = signal
    if kind == "A":
        return float(value)
    if kind == "r":
        return params.n ** (-value) / math.sqrt(params.a)
    return thresholds.signal_strength(value, params.n, NullMoments.from_params(params).sigma_n0)


# ----------------------------------------------------------- test evaluation

def _resolve_betas(params: GraphParams, options: dict) -> tuple[float, float]:
    b1, b2 = options.get("beta1", 1.0), options.get("beta2", 1.0)
    if b1 == "optimal" or b2 == "optimal":
        if params.a == params.b:
            return 1.0, 1.0
        return thresholds.optimal_betas(thresholds.RegimeLimits.from_params(params))
    return float(b1), float(b2)


@dataclass(frozen=True)
class _Oracles:
    """Exact null tail and HC variance for each grid threshold (picklable lookup)."""

    tail: dict
    var: dict

    @classmethod
    def build(cls, params, beta1, beta2):
        grid = stats.hc_grid(params.n)
        tail = {t: exactdist.null_tail(params, beta1, beta2, t) for t in grid}
        var = {t: exactdist.hc_moments("null", params, beta1, beta2, t)[1] for t in grid}
        return cls(tail, var)


@dataclass(frozen=True)
class _Evaluator:
    """Applies a fixed list of tests to a graph; built once, shipped to workers."""

    params: GraphParams
    tests: tuple[str, ...]
    options: dict
    betas: tuple[float, float]
    oracles: _Oracles | None
    two_stage_oracles: _Oracles | None

    @classmethod
    def build(cls, params, tests, options):
        betas = _resolve_betas(params, options)
        oracles = _Oracles.build(params, *betas) if "hc" in tests else None
        two = None
        if "two_stage" in tests:
            b_opt = _resolve_betas(params, {"beta1": "optimal"})
            two = oracles if oracles is not None and b_opt == betas else _Oracles.build(params, *b_opt)
        return cls(params, tuple(tests), dict(options), betas, oracles, two)

    def __call__(self, g, truth: CommunityAssignment) -> list[float]:
        """Per test: ``statistic - threshold`` (positive means reject)."""
        out = []
        opts, params = self.options, self.params
        for test in self.tests:
            if test == "always":
                out.append(math.inf)
            elif test == "never":
                out.append(-math.inf)
            elif test == "total_degree":
                cal = opts.get("calibration", ("normal", opts.get("level", 0.05)))
                if cal[0] not in ("normal", "chebyshev", "cutoff"):
                    cal = ("normal", opts.get("level", 0.05))
                o = stats.total_degree_test(g, params, tuple(cal))
                out.append(o.statistic - o.threshold)
            elif test == "hc":
                o = stats.hc_test(g, truth, *self.betas, params,
                                  self.oracles.tail.__getitem__, self.oracles.var.__getitem__)
                out.append(o.statistic - o.threshold)
            elif test == "max_degree":
                if "delta" in opts:
                    cal = ("delta", opts["delta"])
                else:
                    cal = ("gumbel", opts.get("level", 0.05))
                o = stats.max_degree_test(g, truth, *self.betas, params, cal)
                out.append(o.statistic - o.threshold)
            elif test == "two_stage":
                o = stats.two_stage_test(
                    g, params, community.spectral_recover, opts.get("level", 0.05),
                    (self.two_stage_oracles.tail.__getitem__, self.two_stage_oracles.var.__getitem__),
                )
                out.append(o.statistic - o.threshold)
        return out


@dataclass(frozen=True)
class _Job:
    evaluator: _Evaluator
    alpha: float
    A: float
    support_rule: str


def _run_one(job: _Job, seed: int) -> list[float]:
    params = job.evaluator.params
    truth = CommunityAssignment.first_half(params.n)
    theta = None
    if job.A > 0:
        theta = make_theta(params, job.alpha, job.A, job.support_rule, seed=seed, community=truth)
    g = sample_graph(params, truth, theta, seed)
    return job.evaluator(g, truth)


def _run_star(args):
    return _run_one(*args)


def _run_many(jobs_and_seeds: list[tuple[_Job, int]], workers: int) -> list[list[float]]:
    if workers <= 1 or len(jobs_and_seeds) <= 1:
        return [_run_one(j, s) for j, s in jobs_and_seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_star, jobs_and_seeds, chunksize=1))


def _check_feasible(cfg: ExperimentConfig, A: float) -> None:
    # Fail fast in the parent rather than inside a worker.
    if A > 0:
        make_theta(cfg.params, cfg.alpha, A, "balanced-first")


# ------------------------------------------------------------------ public API

def compare_tests(cfg: ExperimentConfig, tests: Sequence[str]) -> dict[str, RiskEstimate]:
    """Risk of several tests evaluated on the same replicate graphs."""
    for t in tests:
        if t not in TESTS:
            raise ParameterDomainError(f"unknown test {t!r}")
    A = signal_A(cfg.params, cfg.signal)
    _check_feasible(cfg, A)
    ev = _Evaluator.build(cfg.params, tests, cfg.options)
    null_job = _Job(ev, cfg.alpha, 0.0, cfg.support_rule)
    alt_job = _Job(ev, cfg.alpha, A, cfg.support_rule)
    work = [(null_job, cfg.base_seed ^ r) for r in range(cfg.reps)]
    work += [(alt_job, cfg.base_seed ^ (cfg.reps + r)) for r in range(cfg.reps)]
    res = np.array(_run_many(work, cfg.workers), dtype=float).reshape(2 * cfg.reps, len(tests))
    rej = res > 0
    return {
        t: RiskEstimate.from_counts(int(rej[: cfg.reps, k].sum()), int(rej[cfg.reps:, k].sum()), cfg.reps)
        for k, t in enumerate(tests)
    }


def estimate_risk(cfg: ExperimentConfig) -> RiskEstimate:
    """Type I error under the null plus Type II error at the configured alternative."""
    return compare_tests(cfg, [cfg.test])[cfg.test]


def _grid_runs(cfg, tests, A_values, coupled, with_null=True):
    """Optional shared null block plus one alternative block per ``A``."""
    ev = _Evaluator.build(cfg.params, tests, cfg.options)
    R = cfg.reps
    work = []
    if with_null:
        work = [(_Job(ev, cfg.alpha, 0.0, cfg.support_rule), cfg.base_seed ^ r) for r in range(R)]
    for k, A in enumerate(A_values):
        job = _Job(ev, cfg.alpha, A, cfg.support_rule)
        offset = R if coupled else R * (k + 1)
        work += [(job, cfg.base_seed ^ (offset + r)) for r in range(R)]
    res = np.array(_run_many(work, cfg.workers), dtype=float).reshape(-1, R, len(tests)) > 0
    if not with_null:
        return None, list(res)
    return res[0], list(res[1:])


def power_curve(
    cfg: ExperimentConfig, C_grid: Sequence[float], coupled: bool = False
) -> list[tuple[float, RiskEstimate]]:
    """Risk along a sorted grid of ``C`` (or of the configured signal kind).

    Null replicates are computed once and shared by every grid point.  In
    coupled mode every grid point reuses the same alternative seeds, so the
    support and the pair uniforms are shared and graphs are nested in ``C``.
    Statistics that only grow when edges are added are then pathwise monotone.
    """
    grid = list(C_grid)
    if grid != sorted(grid):
        raise ParameterDomainError("C grid must be sorted")
    kind = cfg.signal[0]
    A_values = [signal_A(cfg.params, (kind, c)) for c in grid]
    for A in A_values:
        _check_feasible(cfg, A)
    null_rej, alt_rej = _grid_runs(cfg, [cfg.test], A_values, coupled)
    n0 = int(null_rej[:, 0].sum())
    return [
        (c, RiskEstimate.from_counts(n0, int(a[:, 0].sum()), cfg.reps)) for c, a in zip(grid, alt_rej)
    ]


def _overlays(alpha: float, params: GraphParams) -> dict[str, float]:
    lim = thresholds.RegimeLimits.from_params(params)
    b_opt = (1.0, 1.0) if params.a == params.b else thresholds.optimal_betas(lim)
    return {
        "c_sparse": thresholds.c_sparse(alpha, lim),
        "c_hc_vanilla": thresholds.c_hc(alpha, 1.0, 1.0, lim),
        "c_hc_optimal": thresholds.c_hc(alpha, *b_opt, lim),
    }


def phase_diagram(
    alpha_grid: Sequence[float],
    C_grid: Sequence[float],
    cfg: ExperimentConfig,
    tests: Sequence[str] | None = None,
) -> list[dict]:
    """Empirical risk per ``(alpha, C, test)`` cell with the analytic boundaries.

    Each cell row carries ``c_sparse``, ``c_hc_vanilla`` and ``c_hc_optimal`` at
    its ``alpha``.  Null replicates are shared across all cells.  Within an
    ``alpha`` the grid runs in coupled mode.
    """
    tests = list(tests) if tests else [cfg.test]
    for a in alpha_grid:
        if not 0.5 < a < 1:
            raise ParameterDomainError(f"phase diagram alphas must lie in (1/2, 1), got {a}")
    C_grid = sorted(C_grid)
    A_values = [signal_A(cfg.params, ("C", c)) for c in C_grid]
    rows = []
    null_rej = None
    for i, alpha in enumerate(alpha_grid):
        # Alternatives for each alpha get their own seed block; the null is run once.
        sub = replace(cfg, alpha=alpha, base_seed=cfg.base_seed ^ (i << 40))
        for A in A_values:
            _check_feasible(sub, A)
        nr, alt_rej = _grid_runs(sub, tests, A_values, coupled=True, with_null=i == 0)
        if i == 0:
            null_rej = nr
        over = _overlays(alpha, cfg.params)
        for c, alt in zip(C_grid, alt_rej):
            for k, t in enumerate(tests):
                est = RiskEstimate.from_counts(int(null_rej[:, k].sum()), int(alt[:, k].sum()), cfg.reps)
                rows.append({
                    "alpha": alpha, "C": c, "test_id": t,
                    "type1": est.type1, "type2": est.type2, "risk": est.risk, "se_risk": est.se_risk,
                    **over,
                })
    return rows


# -------------------------------------------------------------- Gumbel check

@dataclass(frozen=True)
class GumbelCheck:
    ks_distance: float
    quantiles: tuple[tuple[float, float, float], ...]  # (level, empirical, Gumbel)
    max_degrees: np.ndarray
    y: np.ndarray
    warnings: tuple[str, ...] = ()

    def rejection_rate(self, level: float) -> float:
        """Null rejection rate of the Gumbel-calibrated max-degree test."""
        return float(np.mean(self.y > thresholds.gumbel_quantile(1 - level)))


def _max_degree(params: GraphParams, seed: int) -> int:
    g = sample_graph(params, CommunityAssignment.first_half(params.n), None, seed)
    return int(stats.degrees(g).max())


def _max_star(args):
    return _max_degree(*args)


def gumbel_check(n: int, a: float, b: float, reps: int, seed: int, workers: int = 1) -> GumbelCheck:
    """Compare the centred null maximum degree with the standard Gumbel law."""
    if reps < 100:
        raise ParameterDomainError(f"gumbel_check needs reps >= 100, got {reps}")
    params = GraphParams(n, a, b)
    notes = []
    if b <= math.log(n) ** 3:
        notes.append(f"b = {b} <= (log n)^3 = {math.log(n) ** 3:.1f}: Gumbel limit may be inaccurate")
    args = [(params, seed ^ r) for r in range(reps)]
    if workers <= 1:
        mx = [_max_degree(*x) for x in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            mx = list(pool.map(_max_star, args, chunksize=1))
    mx = np.asarray(mx, dtype=np.int64)
    m = NullMoments.from_params(params)
    y = np.asarray(thresholds.gumbel_y(n, m.mu_n0, m.sigma_n0, mx.astype(float)))
    ks = float(sps.kstest(y, sps.gumbel_r.cdf).statistic)
    table = tuple(
        (q, float(np.quantile(y, q)), float(sps.gumbel_r.ppf(q))) for q in QUANTILE_LEVELS
    )
    return GumbelCheck(ks, table, mx, y, tuple(notes))
