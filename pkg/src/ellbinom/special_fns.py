"""Multivariate gamma and generalized Pochhammer symbols over a division algebra.

The algebra enters only through its real dimension ``beta`` (1 real, 2 complex,
4 quaternion, 8 octonion); every shifted argument is ``a - (i - 1) * beta / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from scipy.special import gammaln

from .errors import DomainError
from .partitions import Partition

__all__ = ["AlgebraDim", "BetaLike", "ln_mv_gamma", "mv_gamma", "gen_pochhammer",
           "ln_gen_pochhammer_ratio"]

_VALID_BETAS = (1, 2, 4, 8)


@dataclass(frozen=True)
class AlgebraDim:
    """Real dimension of a normed division algebra."""

    beta: int

    def __post_init__(self):
        if isinstance(self.beta, bool) or self.beta not in _VALID_BETAS:
            raise DomainError(f"beta must be one of {_VALID_BETAS}, got {self.beta!r}")
        object.__setattr__(self, "beta", int(self.beta))

    @property
    def alpha(self) -> Fraction:
        """Jack parameter ``2 / beta`` as an exact rational."""
        return Fraction(2, self.beta)

    @property
    def half(self) -> float:
        return self.beta / 2.0

    @classmethod
    def of(cls, beta: "BetaLike") -> "AlgebraDim":
        return beta if isinstance(beta, cls) else cls(beta)


BetaLike = Union[int, AlgebraDim]


def ln_mv_gamma(beta: BetaLike, m: int, a: float) -> float:
    """Natural log of the multivariate gamma function.

    ``Gamma_m(a) = pi**(m(m-1)beta/4) * prod_{i=1..m} Gamma(a - (i-1)beta/2)``,
    defined for ``a > (m - 1) * beta / 2``.
    """
    d = AlgebraDim.of(beta)
    if m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    total = m * (m - 1) * d.beta / 4.0 * math.log(math.pi)
    for i in range(m):
        arg = a - i * d.half
        if arg <= 0:
            raise DomainError(
                f"ln_mv_gamma(beta={d.beta}, m={m}, a={a}): gamma factor i={i + 1} "
                f"has argument a - {i}*beta/2 = {arg} <= 0; need a > {(m - 1) * d.half}"
            )
        total += float(gammaln(arg))
    return total


def mv_gamma(beta: BetaLike, m: int, a: float) -> float:
    return math.exp(ln_mv_gamma(beta, m, a))


def gen_pochhammer(beta: BetaLike, a: float, kappa: Partition) -> float:
    """Generalized Pochhammer symbol ``prod_i (a - (i-1)beta/2)_{k_i}``.

    Equals 1 for the empty partition. Zeros are legitimate values (a factor of
    the rising product hits 0) and are returned as such.
    """
    d = AlgebraDim.of(beta)
    factors = []
    for i, k_i in enumerate(kappa):
        shift = a - i * d.half
        factors.extend(shift + j for j in range(k_i))
    return math.prod(factors)


def ln_gen_pochhammer_ratio(beta: BetaLike, a: float, kappa: Partition) -> float:
    """``log |(a)_kappa|`` through gamma ratios; requires ``a > (l(kappa)-1)beta/2``."""
    d = AlgebraDim.of(beta)
    total = 0.0
    for i, k_i in enumerate(kappa):
        shift = a - i * d.half
        if shift <= 0:
            raise DomainError(f"row {i + 1} shift {shift} <= 0; use gen_pochhammer directly")
        total += float(gammaln(shift + k_i) - gammaln(shift))
    return total
