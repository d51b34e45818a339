"""Closed-form detection boundaries and optimal within/across weights."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import GraphParams, ParameterDomainError

__all__ = [
    "RegimeLimits",
    "rho",
    "sparse_prefactor",
    "c_dense",
    "c_sparse",
    "c_hc",
    "c_max",
    "optimal_betas",
    "signal_strength",
    "gumbel_centering",
    "gumbel_quantile",
    "gumbel_y",
]


@dataclass(frozen=True)
class RegimeLimits:
    """Limits of ``a/n`` and ``b/n``.  ``lam`` is ``lim b/a`` and only matters
    when both limits vanish."""

    tau_a: float
    tau_b: float
    lam: float = 1.0

    def __post_init__(self):
        if not (0 <= self.tau_b <= self.tau_a <= 0.5):
            raise ParameterDomainError(
                f"need 0 <= tau_b <= tau_a <= 1/2, got tau_a={self.tau_a}, tau_b={self.tau_b}"
            )
        if self.tau_a == 0 and not 0 < self.lam <= 1:
            raise ParameterDomainError(f"lam must lie in (0, 1], got {self.lam}")

    @classmethod
    def from_params(cls, params: GraphParams) -> "RegimeLimits":
        return cls(params.tau_a, params.tau_b, params.b / params.a)

    @property
    def sparse(self) -> bool:
        return self.tau_a == 0


def _check_betas(beta1, beta2):
    if not (beta1 > 0 and beta2 > 0):
        raise ParameterDomainError(f"weights must be positive, got ({beta1}, {beta2})")


def rho(beta1: float, beta2: float, limits: RegimeLimits) -> float:
    """Variance-geometry factor of the weighted degree combination.

    When both rate limits vanish this is the limit along ``b/a -> lam``,
    i.e. ``(beta1^2 + beta2^2 lam)(1 + lam) / (beta1 + beta2 lam)^2``.
    """
    _check_betas(beta1, beta2)
    ta, tb = limits.tau_a, limits.tau_b
    if limits.sparse:
        lam = limits.lam
        return (beta1**2 + beta2**2 * lam) * (1 + lam) / (beta1 + beta2 * lam) ** 2
    va, vb = ta * (1 - ta), tb * (1 - tb)
    return (beta1**2 * va + beta2**2 * vb) * (va + vb) / (beta1 * ta + beta2 * tb) ** 2


def sparse_prefactor(limits: RegimeLimits) -> float:
    """``(ta(1-ta) + tb(1-tb)) / (ta/(1-ta) + tb/(1-tb))``, equal to 1 in the sparse limit."""
    ta, tb = limits.tau_a, limits.tau_b
    if limits.sparse:
        return 1.0
    return (ta * (1 - ta) + tb * (1 - tb)) / (ta / (1 - ta) + tb / (1 - tb))


def _sparse_shape(alpha: float) -> float:
    if alpha < 0.75:
        return alpha - 0.5
    return (1 - math.sqrt(1 - alpha)) ** 2


def c_dense(alpha: float) -> float:
    if not 0 < alpha < 0.5:
        raise ParameterDomainError(f"dense regime needs alpha in (0, 1/2), got {alpha}")
    return 0.5 - alpha


def c_sparse(alpha: float, limits: RegimeLimits) -> float:
    if not 0.5 < alpha < 1:
        raise ParameterDomainError(f"sparse regime needs alpha in (1/2, 1), got {alpha}")
    return 2 * sparse_prefactor(limits) * _sparse_shape(alpha)


def c_hc(alpha: float, beta1: float, beta2: float, limits: RegimeLimits) -> float:
    if not 0.5 < alpha < 1:
        raise ParameterDomainError(f"HC boundary needs alpha in (1/2, 1), got {alpha}")
    return 2 * rho(beta1, beta2, limits) * _sparse_shape(alpha)


def c_max(alpha: float, beta1: float, beta2: float, limits: RegimeLimits) -> float:
    if not 0.75 <= alpha < 1:
        raise ParameterDomainError(f"max-degree boundary needs alpha in [3/4, 1), got {alpha}")
    return 2 * rho(beta1, beta2, limits) * (1 - math.sqrt(1 - alpha)) ** 2


def optimal_betas(limits: RegimeLimits) -> tuple[float, float]:
    ta, tb = limits.tau_a, limits.tau_b
    if tb <= 0:
        raise ParameterDomainError(
            "optimal weights need tau_b > 0; use beta1 = beta2 = 1 in the sparse regime"
        )
    root = math.sqrt(ta / (1 - ta) + tb / (1 - tb))
    return 1 / ((1 - ta) * root), 1 / ((1 - tb) * root)


def signal_strength(C: float, n: int, sigma_n0: float) -> float:
    """Degree-correction size ``A = sqrt(C log n / sigma_n0^2)``."""
    if C < 0 or sigma_n0 <= 0 or n <= 1:
        raise ParameterDomainError("need C >= 0, sigma_n0 > 0 and n > 1")
    return math.sqrt(C * math.log(n)) / sigma_n0


def _bracket(n: int, y: float) -> float:
    L = math.log(n)
    return 1 - (math.log(L) + math.log(4 * math.pi)) / (4 * L) + y / (2 * L)


def gumbel_centering(n: int, mu_n0: float, sigma_n0: float, y: float) -> float:
    """Raw degree level at which the null maximum has Gumbel cdf ``exp(-e^{-y})``."""
    if n < 16:
        raise ParameterDomainError(f"Gumbel centering needs n >= 16, got {n}")
    return mu_n0 + sigma_n0 * math.sqrt(2 * math.log(n)) * _bracket(n, y)


def gumbel_quantile(q: float) -> float:
    """Standard Gumbel quantile ``-log(-log q)``."""
    if not 0 < q < 1:
        raise ParameterDomainError(f"quantile level must lie in (0, 1), got {q}")
    return -math.log(-math.log(q))


def gumbel_y(n: int, mu_n0: float, sigma_n0: float, max_degree):
    """Invert :func:`gumbel_centering` for ``y`` (works elementwise on arrays)."""
    L = math.log(n)
    x = (max_degree - mu_n0) / sigma_n0
    return 2 * L * (x / math.sqrt(2 * L) - 1 + (math.log(L) + math.log(4 * math.pi)) / (4 * L))
