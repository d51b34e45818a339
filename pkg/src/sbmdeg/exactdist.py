"""Exact laws of weighted sums of independent binomials.

A :class:`BinomialMix` is ``sum_j w_j * Bin(m_j, p_j)``.  Components sharing a
weight are convolved on the integer lattice first.  The resulting weight
groups are then combined in one of two ways.

* If every weight is a rational multiple of a common step, the whole law lives
  on one integer lattice and is an exact convolution.
* Otherwise the support points are bucketed at resolution ``1e-9 * sd``.

Tail probabilities over at most two weight groups skip building the joint
support.  They condition on the first group and read survival values of the
second, which is exact and linear in the trial count.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from .model import GraphParams, NullMoments, ParameterDomainError

__all__ = [
    "BinomialMix",
    "ExactLaw",
    "SizeGuardError",
    "exact_law",
    "tail_prob",
    "point_prob",
    "weighted_tail",
    "change_of_measure_check",
    "moderate_deviation_ratio",
    "degree_mix",
    "exp_scale_ratio",
    "hc_moments",
    "null_tail",
]

MAX_TRIALS = 10**6
MAX_LATTICE = 5 * 10**7
DENOMINATOR_CAP = 10**6
BUCKET_REL = 1e-9


class SizeGuardError(MemoryError):
    """The requested law exceeds the desk-scale size guard."""


@dataclass(frozen=True)
class BinomialMix:
    """Independent components ``(weight, trials, prob)``."""

    components: tuple[tuple[float, int, float], ...]

    def __init__(self, components: Iterable[Sequence[float]]):
        comps = []
        for w, m, p in components:
            w, p = float(w), float(p)
            if int(m) != m or m < 0:
                raise ParameterDomainError(f"trials must be a nonnegative integer, got {m}")
            if not w > 0:
                raise ParameterDomainError(f"weights must be positive, got {w}")
            if not 0.0 <= p <= 1.0:
                raise ParameterDomainError(f"success probability outside [0, 1]: {p}")
            comps.append((w, int(m), p))
        object.__setattr__(self, "components", tuple(comps))

    def __add__(self, other: "BinomialMix") -> "BinomialMix":
        return BinomialMix(self.components + other.components)

    @property
    def total_trials(self) -> int:
        return sum(m for _, m, _ in self.components)

    @property
    def mean(self) -> float:
        return math.fsum(w * m * p for w, m, p in self.components)

    @property
    def variance(self) -> float:
        return math.fsum(w * w * m * p * (1 - p) for w, m, p in self.components)

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    @property
    def max_value(self) -> float:
        return math.fsum(w * m for w, m, _ in self.components)


@dataclass(frozen=True)
class ExactLaw:
    support: np.ndarray
    pmf: np.ndarray
    mean: float
    variance: float

    def sf(self) -> np.ndarray:
        """``P(S > support[k])`` for every support point."""
        tail = np.cumsum(self.pmf[::-1])[::-1]
        return np.append(tail[1:], 0.0)


def _binom_pmf(m: int, p: float) -> np.ndarray:
    return stats.binom.pmf(np.arange(m + 1), m, p)


def _conv(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # Direct summation: FFT round-off would swamp tails far below 1e-16.
    if x.size == 1:
        return y * x[0]
    if y.size == 1:
        return x * y[0]
    return np.convolve(x, y)


def _guard(mix: BinomialMix) -> None:
    if mix.total_trials > MAX_TRIALS:
        raise SizeGuardError(
            f"mix has {mix.total_trials} trials; the exact engine is capped at {MAX_TRIALS}"
        )


def _groups(mix: BinomialMix) -> list[tuple[float, np.ndarray]]:
    """Integer-lattice pmf of the trial count for each distinct weight."""
    by_weight: dict[float, list[tuple[int, float]]] = {}
    for w, m, p in mix.components:
        by_weight.setdefault(w, []).append((m, p))
    out = []
    for w in sorted(by_weight):
        pmf = reduce(_conv, (_binom_pmf(m, p) for m, p in by_weight[w]), np.ones(1))
        out.append((w, pmf))
    return out


def _as_fraction(w: float) -> Fraction | None:
    f = Fraction(w).limit_denominator(DENOMINATOR_CAP)
    return f if abs(float(f) - w) <= 4 * np.finfo(float).eps * abs(w) else None


def _lattice_step(weights: Sequence[float]) -> tuple[float, list[int]] | None:
    """Common step ``g`` with integer multipliers, or None if incommensurate."""
    fracs = [_as_fraction(w) for w in weights]
    if any(f is None for f in fracs):
        return None
    den = reduce(math.lcm, (f.denominator for f in fracs), 1)
    nums = [f.numerator * (den // f.denominator) for f in fracs]
    g = reduce(math.gcd, nums)
    return g / den, [k // g for k in nums]


def exact_law(mix: BinomialMix, value_resolution="lattice") -> ExactLaw:
    """Full support and pmf of the mix.

    ``value_resolution="lattice"`` uses an exact lattice convolution when the
    weights are commensurate and falls back to bucketing otherwise.  A float
    forces bucketing at that resolution.
    """
    _guard(mix)
    groups = _groups(mix)
    mean, var = mix.mean, mix.variance
    if not groups:
        return ExactLaw(np.zeros(1), np.ones(1), 0.0, 0.0)
    if value_resolution == "lattice":
        step = _lattice_step([w for w, _ in groups])
        if step is not None:
            g, mult = step
            span = sum(k * (pmf.size - 1) for k, (_, pmf) in zip(mult, groups))
            if span <= MAX_LATTICE:
                pmf = np.ones(1)
                for k, (_, p) in zip(mult, groups):
                    spread = np.zeros(k * (p.size - 1) + 1)
                    spread[::k] = p
                    pmf = _conv(pmf, spread)
                keep = pmf > 0
                support = g * np.arange(pmf.size)
                return ExactLaw(support[keep], pmf[keep], mean, var)
        eps = BUCKET_REL * math.sqrt(var) if var > 0 else BUCKET_REL
    else:
        eps = float(value_resolution)
    vals, probs = np.zeros(1), np.ones(1)
    for w, pmf in groups:
        nz = np.flatnonzero(pmf > 0)
        v = (vals[:, None] + w * nz[None, :]).ravel()
        p = (probs[:, None] * pmf[nz][None, :]).ravel()
        if v.size > MAX_LATTICE:
            raise SizeGuardError("bucketed support exceeds the size guard")
        keys = np.round(v / eps).astype(np.int64)
        uniq, inv = np.unique(keys, return_inverse=True)
        probs = np.bincount(inv, weights=p)
        vals = np.bincount(inv, weights=v * p) / np.where(probs > 0, probs, 1)
        vals = np.where(probs > 0, vals, uniq * eps)
    return ExactLaw(vals, probs, mean, var)


def _sf_int(pmf: np.ndarray) -> np.ndarray:
    """``sf[k] = P(U > k - 1)`` for ``k = 0 .. m + 1`` (tail sums from the top)."""
    tail = np.cumsum(pmf[::-1])[::-1]
    return np.append(tail, 0.0)


def weighted_tail(groups: list[tuple[float, np.ndarray]], cutoff: float) -> float:
    """``P(sum_g w_g U_g > cutoff)`` for at most two weight groups.

    The comparison ``w1*u + w2*v > cutoff`` is evaluated in floating point
    exactly as the degree statistics evaluate it, so oracle and statistic agree
    on every lattice point.
    """
    if not groups:
        return float(0.0 > cutoff)
    if len(groups) == 1:
        w, pmf = groups[0]
        k = np.arange(pmf.size)
        return float(math.fsum(pmf[w * k > cutoff]))
    if len(groups) != 2:
        raise ValueError("weighted_tail handles at most two weight groups")
    (w1, p1), (w2, p2) = groups
    u = np.arange(p1.size)
    m2 = p2.size - 1
    first = np.floor((cutoff - w1 * u) / w2) + 1
    first = np.clip(first, 0, m2 + 1).astype(np.int64)
    # Repair one-ulp disagreements with the direct predicate.
    below = np.clip(first - 1, 0, m2)
    fix_down = (first > 0) & (w1 * u + w2 * below > cutoff)
    first = np.where(fix_down, first - 1, first)
    at = np.clip(first, 0, m2)
    fix_up = (first <= m2) & ~(w1 * u + w2 * at > cutoff)
    first = np.where(fix_up, first + 1, first)
    sf2 = _sf_int(p2)
    return float(math.fsum(p1 * sf2[first]))


def tail_prob(mix: BinomialMix, x: float) -> float:
    """``P(S - E[S] > x)`` computed exactly."""
    _guard(mix)
    cutoff = mix.mean + x
    groups = _groups(mix)
    if len(groups) <= 2:
        return weighted_tail(groups, cutoff)
    law = exact_law(mix)
    return float(math.fsum(law.pmf[law.support > cutoff]))


def point_prob(mix: BinomialMix, v: float, tolerance: float = 1e-9) -> float:
    """``P(|S - v| <= tolerance)``."""
    law = exact_law(mix)
    return float(math.fsum(law.pmf[np.abs(law.support - v) <= tolerance]))


def change_of_measure_check(n1, p1, n2, p2, alpha1, alpha2, beta1, beta2, interval):
    """Both sides of the exponential-tilting identity for two binomials.

    ``interval = (lo, hi)`` is the closed value set ``B``, and a list of such
    pairs checks each in turn.  ``lhs = E[alpha1^X alpha2^Y 1(beta1 X + beta2 Y in B)]``
    and ``rhs`` is the product of the binomial normalizers times the tilted
    probability of the same event.  Both are exhaustive sums in exact
    rationals, with float inputs taken at their exact binary value.
    Returns ``(lhs, rhs, |lhs - rhs|)`` per interval, the gap evaluated
    before rounding.
    """
    for name, m in (("n1", n1), ("n2", n2)):
        if int(m) != m or not 0 <= m <= 200:
            raise ParameterDomainError(f"{name} must be an integer in [0, 200], got {m}")
    for name, p in (("p1", p1), ("p2", p2)):
        if not 0 <= p <= 1:
            raise ParameterDomainError(f"{name} must lie in [0, 1], got {p}")
    for name, v in (("alpha1", alpha1), ("alpha2", alpha2), ("beta1", beta1), ("beta2", beta2)):
        if not v > 0:
            raise ParameterDomainError(f"{name} must be positive, got {v}")
    single = len(interval) == 2 and not isinstance(interval[0], (tuple, list))
    intervals = [interval] if single else list(interval)
    # Exact rationals: the tilted terms reach z^n ~ 1e8, where float64
    # rounding alone would exceed an absolute 1e-12 budget.
    F = Fraction
    n1, n2 = int(n1), int(n2)
    p1, p2, alpha1, alpha2 = F(p1), F(p2), F(alpha1), F(alpha2)
    b1, b2 = F(beta1), F(beta2)

    def pmf(m, q):
        return [math.comb(m, k) * q**k * (1 - q) ** (m - k) for k in range(m + 1)]

    def prefix(v):
        out = [F(0)]
        for t in v:
            out.append(out[-1] + t)
        return out

    z1 = 1 - p1 + alpha1 * p1
    z2 = 1 - p2 + alpha2 * p2
    lx = [alpha1**x * t for x, t in enumerate(pmf(n1, p1))]
    ly = prefix([alpha2**y * t for y, t in enumerate(pmf(n2, p2))])
    rx = pmf(n1, alpha1 * p1 / z1)
    ry = prefix(pmf(n2, alpha2 * p2 / z2))
    scale = z1**n1 * z2**n2

    results = []
    for lo, hi in intervals:
        lo, hi = F(lo), F(hi)
        lhs = rhs = F(0)
        for x in range(n1 + 1):
            # Admissible y form a contiguous range because beta2 > 0.
            y0 = max(0, math.ceil((lo - b1 * x) / b2))
            y1 = min(n2, math.floor((hi - b1 * x) / b2))
            if y0 > y1:
                continue
            lhs += lx[x] * (ly[y1 + 1] - ly[y0])
            rhs += rx[x] * (ry[y1 + 1] - ry[y0])
        rhs *= scale
        results.append((float(lhs), float(rhs), float(abs(lhs - rhs))))
    return results[0] if single else results


def degree_mix(n: int, a: float, b: float, beta1: float = 1.0, beta2: float = 1.0,
               within: int | None = None, across: int | None = None) -> BinomialMix:
    """``beta1 * Bin(within, a/n) + beta2 * Bin(across, b/n)``; both counts default to ``n/2``."""
    within = n // 2 if within is None else within
    across = n // 2 if across is None else across
    return BinomialMix([(beta1, within, a / n), (beta2, across, b / n)])


def moderate_deviation_ratio(
    family: Callable[[int], BinomialMix] | Iterable[tuple[int, BinomialMix]],
    C: float,
    ns: Iterable[int] | None = None,
    center: Callable[[int], float] | None = None,
    scale: Callable[[int], float] | None = None,
) -> list[tuple[int, float]]:
    """``log P(S - mu_n > C * sigma_n * sqrt(log n)) / log n`` along a family.

    ``family`` maps ``n`` to a mix (then ``ns`` lists the sizes) or is an
    iterable of ``(n, mix)`` pairs.  By default ``mu_n`` and ``sigma_n`` are
    the mix's own mean and sd.  Pass ``center``/``scale`` to measure a
    contaminated law against the uncontaminated ones.
    """
    if not C > 0:
        raise ParameterDomainError(f"C must be positive, got {C}")
    pairs = [(k, family(k)) for k in ns] if callable(family) else list(family)
    out = []
    for n, mix in pairs:
        mu = mix.mean if center is None else center(n)
        sd = mix.sd if scale is None else scale(n)
        cutoff = mu + C * sd * math.sqrt(math.log(n))
        p = tail_prob(mix, cutoff - mix.mean)
        out.append((n, math.log(p) / math.log(n) if p > 0 else -math.inf))
    return out


def exp_scale_ratio(n: int, a: float, b: float, x: float) -> float:
    """Exact ``P(X + Y - E > sd * x) / (1 - Phi(x))`` for ``X ~ Bin(n/2, a/n)``,
    ``Y ~ Bin(n/2, b/n)``."""
    if b <= math.log(n) ** 3:
        warnings.warn(
            f"b = {b} <= (log n)^3 = {math.log(n) ** 3:.1f}; outside the regime of the normal-tail limit",
            RuntimeWarning,
            stacklevel=2,
        )
    mix = degree_mix(n, a, b)
    tail = tail_prob(mix, mix.sd * x)
    if tail == 0.0:
        return 0.0  # beyond the support
    return tail / stats.norm.sf(x)


# --------------------------------------------------------------------------
# Higher-criticism moments
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _VertexClass:
    block: int  # 0 for C, 1 for C^c
    theta: float
    count: int


def _classes(n: int, s1: int, s2: int, A: float) -> list[_VertexClass]:
    half = n // 2
    raw = [
        _VertexClass(0, 1.0 + A, s1),
        _VertexClass(0, 1.0, half - s1),
        _VertexClass(1, 1.0 + A, s2),
        _VertexClass(1, 1.0, half - s2),
    ]
    return [c for c in raw if c.count > 0]


def _neighbor_groups(params, classes, k, beta1, beta2, drop=None):
    """Weight groups for the degree combination of a vertex in ``classes[k]``.

    ``drop`` removes one potential neighbor from the given class (the partner
    of an edge being conditioned on).
    """
    me = classes[k]
    within, across = [], []
    for l, other in enumerate(classes):
        count = other.count - (l == k) - (l == drop)
        if count <= 0:
            continue
        same = other.block == me.block
        rate = (params.a if same else params.b) / params.n
        (within if same else across).append((count, me.theta * other.theta * rate))
    groups = []
    for w, comps in ((beta1, within), (beta2, across)):
        pmf = reduce(_conv, (_binom_pmf(m, p) for m, p in comps), np.ones(1))
        groups.append((w, pmf))
    if beta1 == beta2:
        groups = [(beta1, _conv(groups[0][1], groups[1][1]))]
    return groups


def hc_cutoff(params: GraphParams, beta1: float, beta2: float, t: float) -> float:
    """Raw-scale cutoff: ``D_i > t`` iff ``beta1*d1 + beta2*d2 > cutoff``."""
    m = NullMoments.from_params(params)
    return m.weighted_mean(beta1, beta2) + t * m.sigma_n0_weighted(beta1, beta2)


def null_tail(params: GraphParams, beta1: float, beta2: float, t: float) -> float:
    """Exact null ``P(D_i(C, beta1, beta2) > t)``."""
    classes = _classes(params.n, 0, 0, 0.0)
    return weighted_tail(
        _neighbor_groups(params, classes, 0, beta1, beta2), hc_cutoff(params, beta1, beta2, t)
    )


def hc_moments(scenario, params: GraphParams, beta1: float, beta2: float, t: float):
    """Exact mean and variance of ``HC_t = sum_i [1(D_i > t) - p0(t)]``.

    ``scenario`` is ``"null"`` or ``("planted", s1, s2, A)`` with ``s1``
    (``s2``) boosted vertices inside C (C^c).  Vertices fall into at most four
    exchangeable classes.  Distinct indicators interact only through their
    shared edge, so conditioning on that edge gives
    ``cov = p(1-p)(x1' - x1'')(x2' - x2'')``, where ``'`` / ``''`` mark the
    conditional tails with the edge present / absent.
    """
    if scenario == "null":
        s1 = s2 = 0
        A = 0.0
    else:
        tag, s1, s2, A = scenario
        if tag != "planted":
            raise ValueError(f"unknown scenario {scenario!r}")
    n = params.n
    if not (0 <= s1 <= n // 2 and 0 <= s2 <= n // 2):
        raise ParameterDomainError("planted support sizes must lie in [0, n/2]")
    classes = _classes(n, s1, s2, A)
    cutoff = hc_cutoff(params, beta1, beta2, t)
    p0 = null_tail(params, beta1, beta2, t)

    marg = [weighted_tail(_neighbor_groups(params, classes, k, beta1, beta2), cutoff)
            for k in range(len(classes))]
    mean = math.fsum(c.count * a for c, a in zip(classes, marg)) - n * p0

    terms = [c.count * a * (1 - a) for c, a in zip(classes, marg)]
    for k, ck in enumerate(classes):
        for l, cl in enumerate(classes):
            pairs = ck.count * (cl.count - (k == l))
            if pairs == 0:
                continue
            same = ck.block == cl.block
            w = beta1 if same else beta2
            p = ck.theta * cl.theta * (params.a if same else params.b) / n

            def jump(src, dst):
                groups = _neighbor_groups(params, classes, src, beta1, beta2, drop=dst)
                return weighted_tail(groups, cutoff - w) - weighted_tail(groups, cutoff)

            terms.append(pairs * p * (1 - p) * jump(k, l) * jump(l, k))
    return mean, math.fsum(terms)
