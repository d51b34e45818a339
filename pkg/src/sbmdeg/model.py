"""Two-block degree-corrected SBM: parameters, communities, degree corrections
and seed-deterministic sampling.

Every unordered pair ``{i, j}`` (``i < j``) owns one uniform variate, read from
a counter-based Philox stream keyed by the replication seed at the pair's
position in the row-major upper triangle.  Any chunking of the rows therefore
reproduces the same graph, and two degree-correction vectors sampled with the
same seed are coupled monotonically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

__all__ = [
    "ParameterDomainError",
    "GraphParams",
    "CommunityAssignment",
    "ThetaVector",
    "AdjacencySample",
    "NullMoments",
    "support_size",
    "make_theta",
    "null_theta",
    "sample_graph",
    "sample_graph_coupled",
]

SEED_LIMIT = 2**64
# Stream tags mixed into the high 64 bits of the Philox key.
EDGE_STREAM = 0
SUPPORT_STREAM = 1
_CHUNK_UNIFORMS = 1 << 23


class ParameterDomainError(ValueError):
    """Raised when model parameters leave their admissible domain."""


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < SEED_LIMIT:
        raise ParameterDomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def stream(seed: int, tag: int) -> np.random.Generator:
    """Philox generator for ``(seed, tag)``; distinct tags never share draws."""
    return np.random.Generator(np.random.Philox(key=_check_seed(seed) | (tag << 64)))


@dataclass(frozen=True)
class GraphParams:
    """Vertex count ``n`` with within-block rate ``a`` and across-block rate ``b``.

    Edge probabilities under the null are ``a/n`` inside a block and ``b/n``
    across blocks.
    """

    n: int
    a: float
    b: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4 or self.n % 2:
            raise ParameterDomainError(f"n must be an even integer >= 4, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not 0 < self.b <= self.a <= self.n / 2:
            raise ParameterDomainError(
                f"need 0 < b <= a <= n/2, got n={self.n}, a={self.a}, b={self.b}"
            )

    @property
    def tau_a(self) -> float:
        return self.a / self.n

    @property
    def tau_b(self) -> float:
        return self.b / self.n

    @property
    def half(self) -> int:
        return self.n // 2


@dataclass(frozen=True, eq=False)
class CommunityAssignment:
    """Balanced bipartition of ``range(n)``; ``members[i]`` is True iff ``i`` is in C."""

    members: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.members, dtype=bool).copy()
        if m.ndim != 1 or m.size < 2 or m.size % 2:
            raise ParameterDomainError("membership vector must be 1-d with even length")
        if int(m.sum()) != m.size // 2:
            raise ParameterDomainError(
                f"community must hold exactly n/2 = {m.size // 2} vertices, got {int(m.sum())}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "members", m)

    @property
    def n(self) -> int:
        return self.members.size

    @classmethod
    def first_half(cls, n: int) -> "CommunityAssignment":
        m = np.zeros(n, dtype=bool)
        m[: n // 2] = True
        return cls(m)

    @classmethod
    def from_indices(cls, n: int, indices: Sequence[int]) -> "CommunityAssignment":
        m = np.zeros(n, dtype=bool)
        m[np.asarray(list(indices), dtype=np.int64)] = True
        return cls(m)

    def complement(self) -> "CommunityAssignment":
        return CommunityAssignment(~self.members)

    def __eq__(self, other):
        return isinstance(other, CommunityAssignment) and np.array_equal(
            self.members, other.members
        )

    def __hash__(self):
        return hash(self.members.tobytes())


@dataclass(frozen=True, eq=False)
class ThetaVector:
    """Degree corrections with their designated support.

    ``support`` is the index set chosen for the alternative.  When ``A > 0`` it
    coincides with ``{i : theta[i] != 1}``; with ``A == 0`` the vector is the
    null and the support is bookkeeping only.
    """

    theta: np.ndarray
    support: np.ndarray
    A: float = 0.0
    alpha: float | None = None

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=np.float64).copy()
        sup = np.unique(np.asarray(self.support, dtype=np.int64))
        if th.ndim != 1 or np.any(th < 0):
            raise ParameterDomainError("theta must be a 1-d vector of nonnegative reals")
        if sup.size and (sup[0] < 0 or sup[-1] >= th.size):
            raise ParameterDomainError("support indices out of range")
        if self.A < 0:
            raise ParameterDomainError(f"signal strength A must be >= 0, got {self.A}")
        if self.A > 0:
            if not np.array_equal(sup, np.flatnonzero(th != 1.0)):
                raise ParameterDomainError("support must equal {i : theta_i != 1}")
            if np.any(th[sup] < 1.0 + self.A):
                raise ParameterDomainError("every support coordinate needs theta_i >= 1 + A")
        th.setflags(write=False)
        sup.setflags(write=False)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "support", sup)

    @property
    def n(self) -> int:
        return self.theta.size

    @property
    def s(self) -> int:
        return self.support.size

    def max_pair_probability(self, params: GraphParams) -> float:
        """``max_{i != j} theta_i theta_j a/n`` (the within rate dominates)."""
        top = np.sort(self.theta)[-2:]
        return float(top[0] * top[1] * params.a / params.n)

    def check_feasible(self, params: GraphParams) -> None:
        if self.n != params.n:
            raise ParameterDomainError(f"theta has length {self.n}, params.n = {params.n}")
        bound = self.max_pair_probability(params)
        if bound > 1.0:
            raise ParameterDomainError(
                f"infeasible degree correction: max_(i!=j) theta_i*theta_j*a/n = {bound:.6g} > 1"
            )


@dataclass(frozen=True)
class NullMoments:
    """Null means and variances of the within/across degree of a single vertex."""

    mu0_n1: float
    mu0_n2: float
    var_within: float
    var_across: float

    @classmethod
    def from_params(cls, params: GraphParams) -> "NullMoments":
        n, pa, pb = params.n, params.a / params.n, params.b / params.n
        return cls(
            mu0_n1=(n / 2 - 1) * pa,
            mu0_n2=(n / 2) * pb,
            var_within=(n / 2 - 1) * pa * (1 - pa),
            var_across=(n / 2) * pb * (1 - pb),
        )

    @property
    def mu_n0(self) -> float:
        return self.mu0_n1 + self.mu0_n2

    @property
    def sigma_n0(self) -> float:
        return math.sqrt(self.var_within + self.var_across)

    def weighted_mean(self, beta1: float, beta2: float) -> float:
        return beta1 * self.mu0_n1 + beta2 * self.mu0_n2

    def sigma_n0_weighted(self, beta1: float, beta2: float) -> float:
        return math.sqrt(beta1**2 * self.var_within + beta2**2 * self.var_across)


@dataclass(frozen=True, eq=False)
class AdjacencySample:
    """Simple undirected graph as a dense symmetric boolean matrix."""

    edges: np.ndarray
    seed: int = 0

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=bool)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ParameterDomainError("adjacency must be a square matrix")
        if np.any(np.diagonal(e)):
            raise ParameterDomainError("adjacency must have a zero diagonal")
        if not np.array_equal(e, e.T):
            raise ParameterDomainError("adjacency must be symmetric")
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @classmethod
    def _trusted(cls, edges: np.ndarray, seed: int) -> "AdjacencySample":
        # Skips the O(n^2) validation for matrices built by the samplers.
        obj = object.__new__(cls)
        edges.setflags(write=False)
        object.__setattr__(obj, "edges", edges)
        object.__setattr__(obj, "seed", seed)
        return obj

    @property
    def n(self) -> int:
        return self.edges.shape[0]

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(self.edges)) // 2

    def edge_set(self) -> set[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.edges, 1))
        return set(zip(i.tolist(), j.tolist()))


def support_size(n: int, alpha: float) -> int:
    """``round(n**(1 - alpha))`` bumped up to the next even integer."""
    if not 0 < alpha < 1:
        raise ParameterDomainError(f"alpha must lie in (0, 1), got {alpha}")
    s = int(round(n ** (1.0 - alpha)))
    s += s % 2
    if s < 2 or s > n:
        raise ParameterDomainError(f"support size {s} not realizable for n={n}")
    return s


def null_theta(n: int) -> ThetaVector:
    return ThetaVector(np.ones(n), np.empty(0, dtype=np.int64), A=0.0)


def make_theta(
    params: GraphParams,
    alpha: float,
    A: float,
    support_rule="balanced-random",
    seed: int = 0,
    community: CommunityAssignment | None = None,
) -> ThetaVector:
    """Two-valued degree correction: ``1 + A`` on a support of size ``n**(1-alpha)``.

    ``support_rule`` is ``"balanced-random"`` (s/2 uniformly chosen vertices
    from each block), ``"balanced-first"`` (lowest indices of each block) or an
    explicit sequence of vertex indices.
    """
    n = params.n
    if A < 0:
        raise ParameterDomainError(f"signal strength A must be >= 0, got {A}")
    if community is None:
        community = CommunityAssignment.first_half(n)
    if community.n != n:
        raise ParameterDomainError("community size does not match params.n")
    if isinstance(support_rule, str):
        s = support_size(n, alpha)
        inside = np.flatnonzero(community.members)
        outside = np.flatnonzero(~community.members)
        if support_rule == "balanced-first":
            support = np.concatenate([inside[: s // 2], outside[: s // 2]])
        elif support_rule == "balanced-random":
            rng = stream(seed, SUPPORT_STREAM)
            support = np.concatenate(
                [
                    rng.choice(inside, size=s // 2, replace=False),
                    rng.choice(outside, size=s // 2, replace=False),
                ]
            )
        else:
            raise ParameterDomainError(f"unknown support rule {support_rule!r}")
    else:
        support = np.unique(np.asarray(list(support_rule), dtype=np.int64))
    theta = np.ones(n)
    theta[support] = 1.0 + A
    out = ThetaVector(theta, support, A=float(A), alpha=alpha)
    out.check_feasible(params)
    return out


@numba.njit(cache=True, nogil=True)
def _fill_rows(out_lo, out_hi, u, i0, i1, theta_lo, theta_hi, members, p_in, p_out):
    n = members.size
    k = 0
    for i in range(i0, i1):
        for j in range(i + 1, n):
            rate = p_in if members[i] == members[j] else p_out
            x = u[k]
            out_lo[i, j] = x < theta_lo[i] * theta_lo[j] * rate
            out_hi[i, j] = x < theta_hi[i] * theta_hi[j] * rate
            k += 1


@numba.njit(cache=True, nogil=True)
def _symmetrize(m):
    n = m.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            m[j, i] = m[i, j]


def _row_offset(n: int, i: int) -> int:
    return i * (n - 1) - i * (i - 1) // 2


def _pair_uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Uniforms for upper-triangle pair indices ``start .. start+count-1``."""
    block, skip = divmod(start, 4)  # Philox4x64 emits four words per counter step
    gen = np.random.Generator(
        np.random.Philox(key=seed | (EDGE_STREAM << 64), counter=[block, 0, 0, 0])
    )
    return gen.random(count + skip)[skip:]


def _sample_pair(params, community, theta_lo, theta_hi, seed):
    seed = _check_seed(seed)
    n = params.n
    if community.n != n:
        raise ParameterDomainError("community size does not match params.n")
    for th in (theta_lo, theta_hi):
        th.check_feasible(params)
    lo = np.zeros((n, n), dtype=bool)
    hi = lo if theta_hi is theta_lo else np.zeros((n, n), dtype=bool)
    members = np.ascontiguousarray(community.members)
    i0 = 0
    while i0 < n - 1:
        i1, count = i0, 0
        while i1 < n - 1 and (count == 0 or count + (n - 1 - i1) <= _CHUNK_UNIFORMS):
            count += n - 1 - i1
            i1 += 1
        u = _pair_uniforms(seed, _row_offset(n, i0), count)
        _fill_rows(
            lo, hi, u, i0, i1, theta_lo.theta, theta_hi.theta, members,
            params.a / n, params.b / n,
        )
        i0 = i1
    _symmetrize(lo)
    if hi is not lo:
        _symmetrize(hi)
    return AdjacencySample._trusted(lo, seed), AdjacencySample._trusted(hi, seed)


def sample_graph(
    params: GraphParams,
    community: CommunityAssignment,
    theta: ThetaVector | None,
    seed: int,
) -> AdjacencySample:
    """Draw one graph; ``{i, j}`` is an edge with probability ``theta_i theta_j a/n``
    inside a block and ``theta_i theta_j b/n`` across."""
    if theta is None:
        theta = null_theta(params.n)
    return _sample_pair(params, community, theta, theta, seed)[0]


def sample_graph_coupled(
    params: GraphParams,
    community: CommunityAssignment,
    theta_low: ThetaVector,
    theta_high: ThetaVector,
    seed: int,
) -> tuple[AdjacencySample, AdjacencySample]:
    """Sample two graphs from one uniform per pair, so ``low`` is a subgraph of ``high``."""
    if theta_low.n != theta_high.n:
        raise ParameterDomainError("theta vectors differ in length")
    if np.any(theta_low.theta > theta_high.theta):
        raise ParameterDomainError("coupled sampling requires theta_low <= theta_high coordinatewise")
    return _sample_pair(params, community, theta_low, theta_high, seed)
