"""Jack polynomials ``C_kappa`` in the trace normalization.

Values are built from the monic Jack polynomials ``P_kappa`` with the
one-variable-at-a-time branching rule

    P_kappa(x_1..x_n) = sum_mu psi_{kappa/mu} x_n**|kappa/mu| P_mu(x_1..x_{n-1}),

the sum running over ``mu`` with ``kappa/mu`` a horizontal strip, and

    psi_{kappa/mu} = prod_{s in R - C} b_mu(s) / b_kappa(s),
    b_lam(s) = (alpha*arm + leg + 1) / (alpha*arm + leg + alpha),

where ``R`` (``C``) collects the cells of rows (columns) meeting the strip.
``C_kappa = alpha**k k! / prod_s (alpha*(arm + 1) + leg) * P_kappa`` which makes
``sum_{|kappa| = k} C_kappa(x) = (x_1 + ... + x_m)**k``.
"""

from __future__ import annotations

import itertools
import math
import threading
from functools import lru_cache
from typing import Sequence

import gmpy2
import numpy as np
from gmpy2 import mpfr

from .errors import ConfigurationError, DomainError
from .partitions import Partition, conjugate, partitions_upto
from .special_fns import AlgebraDim, BetaLike

__all__ = ["JackTable", "get_table", "jack_c", "jack_c_all", "jack_c_identity", "EXTENDED_PRECISION"]

# working precision in bits for the cancellation-prone series evaluations
EXTENDED_PRECISION = 192


def _strips_below(kappa: Partition, max_len: int):
    """Partitions ``mu`` with ``kappa/mu`` a horizontal strip and ``l(mu) <= max_len``.

    Yields in descending lexicographic order. Only the last part of ``mu``
    can be zero, so ``l(mu) <= max_len`` constrains that part alone.
    """
    ell = len(kappa)
    if ell == 0:
        yield ()
        return
    if ell > max_len + 1:
        return
    ranges = [range(kappa[i], kappa[i + 1] - 1, -1) for i in range(ell - 1)]
    last = range(kappa[-1], -1, -1) if ell <= max_len else range(0, -1, -1)
    for head in itertools.product(*ranges):
        for v in last:
            yield head + (v,) if v else head


@lru_cache(maxsize=None)
def _conj(p: Partition) -> Partition:
    return conjugate(p)


def _psi(kappa: Partition, mu: Partition, beta: int) -> tuple[int, int]:
    """Exact branching coefficient as an integer ratio ``(num, den)``.

    With ``alpha = 2 / beta`` every factor ``alpha*arm + leg + c`` is scaled by
    ``beta``; the scalings cancel between numerator and denominator. A cell in
    column ``j`` lies outside the strip columns iff ``kappa'_j == mu'_j``.
    """
    kc = _conj(kappa)
    mc = _conj(mu)
    num = den = 1
    for i, k_i in enumerate(kappa):
        m_i = mu[i] if i < len(mu) else 0
        if k_i == m_i:
            continue
        for j in range(m_i):
            c = mc[j]
            if kc[j] != c:
                continue
            bl = beta * (c - i - 1)
            a_mu = 2 * (m_i - j - 1)
            a_k = 2 * (k_i - j - 1)
            # b_mu(s) / b_kappa(s)
            num *= (a_mu + bl + beta) * (a_k + bl + 2)
            den *= (a_mu + bl + 2) * (a_k + bl + beta)
    return num, den


def _psi_factors(K: np.ndarray, M: np.ndarray, beta: int, chunk: int = 16384):
    """Integer factors of ``psi`` for padded partition rows ``K`` (kappa), ``M`` (mu).

    Yields ``(sel, num, den)`` with ``num``, ``den`` of shape ``(len(sel), cells)``;
    cells outside ``R - C`` carry the factor 1.
    """
    n, L = K.shape
    rows = np.arange(L, dtype=np.int64)[None, :, None]
    # group by mu_1 so each chunk spans few columns
    order = np.argsort(M[:, 0], kind="stable") if n else np.zeros(0, dtype=np.int64)
    for lo in range(0, n, chunk):
        sel = order[lo:lo + chunk]
        k = K[sel]
        m = M[sel]
        # only columns j < mu_1 can hold a contributing cell
        cols = np.arange(max(int(m.max(initial=0)), 1), dtype=np.int64)
        kc = (k[:, :, None] > cols).sum(axis=1)
        mc = (m[:, :, None] > cols).sum(axis=1)
        ki = k[:, :, None]
        mi = m[:, :, None]
        mask = (ki > mi) & (cols < mi) & (kc == mc)[:, None, :]
        bl = beta * (mc[:, None, :] - rows - 1)
        a_mu = 2 * (mi - cols - 1)
        a_k = 2 * (ki - cols - 1)
        # b_mu(s) / b_kappa(s)
        num = np.where(mask, (a_mu + bl + beta) * (a_k + bl + 2), 1).reshape(len(sel), -1)
        den = np.where(mask, (a_mu + bl + 2) * (a_k + bl + beta), 1).reshape(len(sel), -1)
        yield sel, num, den


def _psi_floats(K: np.ndarray, M: np.ndarray, beta: int) -> np.ndarray:
    out = np.ones(K.shape[0])
    for sel, num, den in _psi_factors(K, M, beta):
        out[sel] = (num / den).prod(axis=1)
    return out


def _exact_products(f: np.ndarray) -> list[int]:
    """Row products of a positive int64 array as exact Python ints."""
    if f.shape[1] == 0:
        return [1] * f.shape[0]
    bits = max(int(f.max()).bit_length(), 1)
    group = max(62 // bits, 1)
    pad = (-f.shape[1]) % group
    if pad:
        f = np.concatenate([f, np.ones((f.shape[0], pad), dtype=f.dtype)], axis=1)
    # partial products of `group` factors fit in int64 exactly
    partial = f.reshape(f.shape[0], -1, group).prod(axis=2)
    return np.prod(partial.astype(object), axis=1).tolist()


def _psi_exact(K: np.ndarray, M: np.ndarray, beta: int) -> list[tuple[int, int]]:
    out: list = [None] * K.shape[0]
    for sel, num, den in _psi_factors(K, M, beta):
        for i, nv, dv in zip(sel.tolist(), _exact_products(num), _exact_products(den)):
            out[i] = (nv, dv)
    return out


def _upper_hook_scaled(kappa: Partition, beta: int) -> int:
    """``beta**k prod_s (alpha (arm + 1) + leg)`` as an integer."""
    kc = conjugate(kappa)
    out = 1
    for i, k_i in enumerate(kappa):
        for j in range(k_i):
            out *= 2 * (k_i - j) + beta * (kc[j] - i - 1)
    return out


def _lower_hook_scaled(kappa: Partition, beta: int) -> int:
    """``beta**k prod_s (alpha arm + leg + 1)`` as an integer."""
    kc = conjugate(kappa)
    out = 1
    for i, k_i in enumerate(kappa):
        for j in range(k_i):
            out *= 2 * (k_i - j - 1) + beta * (kc[j] - i)
    return out


def _c_norm_ratio(kappa: Partition, beta: int) -> tuple[int, int]:
    """``alpha**k k! / prod_s (alpha (arm + 1) + leg)`` as ``(num, den)``."""
    k = sum(kappa)
    return 2**k * math.factorial(k), _upper_hook_scaled(kappa, beta)


class JackTable:
    """Branching coefficients for every partition up to ``max_degree``.

    The double-precision arrays are filled at construction and never mutated.
    Extended-precision copies are built once, on first use, under a lock, so a
    table can be shared between threads.

    Parameters
    ----------
    beta : int or AlgebraDim
        Algebra dimension; the Jack parameter is ``alpha = 2 / beta``.
    max_degree : int
        Largest partition weight that can be evaluated.
    max_parts : int
        Largest number of variables (spectrum length) supported.
    """

    def __init__(self, beta: BetaLike, max_degree: int, max_parts: int):
        self.dim = AlgebraDim.of(beta)
        if max_degree < 0:
            raise ConfigurationError(f"max_degree must be >= 0, got {max_degree}")
        if max_parts < 1:
            raise ConfigurationError(f"max_parts must be >= 1, got {max_parts}")
        self.max_degree = int(max_degree)
        self.max_parts = int(max_parts)
        b = self.dim.beta

        self.partitions: tuple[Partition, ...] = tuple(partitions_upto(self.max_degree, self.max_parts))
        self.index = {p: i for i, p in enumerate(self.partitions)}
        self.weights = np.array([sum(p) for p in self.partitions], dtype=np.int64)

        rows, cols = [], []
        index = self.index
        for r, kappa in enumerate(self.partitions):
            for mu in _strips_below(kappa, self.max_parts - 1):
                rows.append(r)
                cols.append(index[mu])
        self._rows = np.array(rows, dtype=np.int64)
        self._cols = np.array(cols, dtype=np.int64)
        self._degs = self.weights[self._rows] - self.weights[self._cols]
        padded = np.zeros((len(self.partitions), self.max_parts), dtype=np.int64)
        for i, p in enumerate(self.partitions):
            padded[i, :len(p)] = p
        self._padded = padded
        self._psis = _psi_floats(padded[self._rows], padded[self._cols], b)
        # segment starts for reduceat; rows are emitted in ascending order
        self._row_starts = np.searchsorted(self._rows, np.arange(len(self.partitions)))
        self._row_ends = np.append(self._row_starts[1:], len(self._rows))

        self._norm_ratios = tuple(_c_norm_ratio(kappa, b) for kappa in self.partitions)
        self._c_norm = np.array([n / d for n, d in self._norm_ratios])
        for arr in (self._rows, self._cols, self._degs, self._psis, self._c_norm,
                    self.weights, self._row_starts, self._row_ends):
            arr.setflags(write=False)
        self._ext_lock = threading.Lock()
        self._ext: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._ratios: tuple[tuple[int, int], ...] | None = None

    def exact_ratios(self) -> tuple[tuple[int, int], ...]:
        """Branching coefficients as exact ``(num, den)`` pairs, built on first use."""
        with self._ext_lock:
            if self._ratios is None:
                P = self._padded
                self._ratios = tuple(_psi_exact(P[self._rows], P[self._cols], self.dim.beta))
            return self._ratios

    @property
    def alpha(self) -> float:
        return float(self.dim.alpha)

    @property
    def beta(self) -> int:
        return self.dim.beta

    def c_normalizer(self, kappa: Partition) -> float:
        """Factor turning the monic ``P_kappa`` into ``C_kappa``."""
        return float(self._c_norm[self._lookup(kappa)])

    def _lookup(self, kappa: Partition) -> int:
        kappa = tuple(kappa)
        if sum(kappa) > self.max_degree:
            raise ConfigurationError(
                f"partition {kappa} has weight {sum(kappa)} > table max_degree {self.max_degree}"
            )
        try:
            return self.index[kappa]
        except KeyError:
            raise ConfigurationError(
                f"partition {kappa} has more than max_parts={self.max_parts} parts"
            ) from None

    def _check_len(self, n: int) -> None:
        if n > self.max_parts:
            raise ConfigurationError(
                f"spectrum has {n} entries but table supports max_parts={self.max_parts}"
            )

    def monic_all(self, x: Sequence[float]) -> np.ndarray:
        """``P_kappa(x)`` for every table partition, in table order."""
        x = _as_spectrum(x)
        self._check_len(len(x))
        vals = np.zeros(len(self.partitions))
        vals[self.index[()]] = 1.0
        for xn in x:
            contrib = self._psis * np.power(xn, self._degs) * vals[self._cols]
            vals = np.bincount(self._rows, weights=contrib, minlength=len(self.partitions))
        return vals

    def c_all(self, x: Sequence[float]) -> np.ndarray:
        """``C_kappa(x)`` for every table partition, in table order."""
        return self._c_norm * self.monic_all(x)

    def _extended_arrays(self, precision: int) -> tuple[np.ndarray, np.ndarray]:
        ratios = self.exact_ratios()
        with self._ext_lock:
            if precision not in self._ext:
                with gmpy2.context(gmpy2.get_context(), precision=precision):
                    psis = np.array([mpfr(n) / d for n, d in ratios], dtype=object)
                    norms = np.array([mpfr(n) / d for n, d in self._norm_ratios], dtype=object)
                self._ext[precision] = (psis, norms)
            return self._ext[precision]

    def c_all_extended(self, x: Sequence, precision: int = EXTENDED_PRECISION) -> np.ndarray:
        """``C_kappa(x)`` as an object array of ``gmpy2.mpfr`` at ``precision`` bits.

        Branching coefficients enter as exact integer ratios, so the only
        rounding is that of the working precision.
        """
        self._check_len(len(x))
        psis, norms = self._extended_arrays(precision)
        with gmpy2.context(gmpy2.get_context(), precision=precision):
            xs = [mpfr(v) for v in x]
            vals = np.array([mpfr(0)] * len(self.partitions), dtype=object)
            vals[self.index[()]] = mpfr(1)
            for xn in xs:
                powers = np.array([xn**d for d in range(self.max_degree + 1)], dtype=object)
                contrib = psis * powers[self._degs] * vals[self._cols]
                vals = np.add.reduceat(contrib, self._row_starts)
            return norms * vals

    def monic(self, kappa: Partition, x: Sequence[float]) -> float:
        self._lookup(kappa)
        x = _as_spectrum(x)
        memo: dict[tuple[Partition, int], float] = {}

        def rec(lam: Partition, n: int) -> float:
            if n == 0:
                return 1.0 if not lam else 0.0
            if len(lam) > n:
                return 0.0
            key = (lam, n)
            if key not in memo:
                xn = float(x[n - 1])
                r = self.index[lam]
                sl = slice(self._row_starts[r], self._row_ends[r])
                memo[key] = math.fsum(
                    float(psi) * xn ** int(d) * rec(self.partitions[c], n - 1)
                    for c, d, psi in zip(self._cols[sl], self._degs[sl], self._psis[sl])
                )
            return memo[key]

        return rec(tuple(kappa), len(x))


def _as_spectrum(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.size == 0:
        raise DomainError("spectrum must contain at least one value")
    if not np.all(np.isfinite(arr)):
        raise DomainError("spectrum entries must be finite")
    return arr


@lru_cache(maxsize=32)
def _cached_table(beta: int, max_degree: int, max_parts: int) -> JackTable:
    return JackTable(beta, max_degree, max_parts)


def get_table(beta: BetaLike, max_degree: int, max_parts: int) -> JackTable:
    """Process-wide shared table for ``(beta, max_degree, max_parts)``."""
    return _cached_table(AlgebraDim.of(beta).beta, int(max_degree), int(max_parts))


def _check_table(beta: BetaLike, table: JackTable) -> None:
    if AlgebraDim.of(beta).beta != table.beta:
        raise ConfigurationError(f"table built for beta={table.beta}, called with beta={beta}")


def jack_c(beta: BetaLike, kappa: Partition, x: Sequence[float], table: JackTable | None = None) -> float:
    """Evaluate ``C_kappa`` at the diagonal matrix with entries ``x``.

    Returns exactly 0 when ``kappa`` has more parts than ``x`` has entries.
    """
    kappa = tuple(kappa)
    x = _as_spectrum(x)
    if table is None:
        table = get_table(beta, sum(kappa), max(len(x), 1))
    _check_table(beta, table)
    if sum(kappa) > table.max_degree:
        raise ConfigurationError(
            f"partition {kappa} has weight {sum(kappa)} > table max_degree {table.max_degree}"
        )
    if len(kappa) > len(x):
        return 0.0
    return table.c_normalizer(kappa) * table.monic(kappa, x)


def jack_c_all(beta: BetaLike, x: Sequence[float], table: JackTable) -> dict[Partition, float]:
    """Map every table partition to ``C_kappa(x)``."""
    _check_table(beta, table)
    vals = table.c_all(x)
    return dict(zip(table.partitions, vals.tolist()))


def jack_c_identity(beta: BetaLike, kappa: Partition, m: int) -> float:
    """``C_kappa(I_m)`` from the closed-form content product.

    ``J_kappa(1^m) = prod_{(i,j)} (m - (i-1) + alpha (j-1))`` divided by the
    product of upper and lower hook lengths, times ``alpha**k k!``.
    """
    d = AlgebraDim.of(beta)
    kappa = tuple(kappa)
    if len(kappa) > m:
        raise DomainError(f"C_kappa(I_m) vanishes: partition {kappa} has more than m={m} parts")
    b = d.beta
    k = sum(kappa)
    # content factors (m - i + alpha j) scaled by beta as well
    content = 1
    for i, k_i in enumerate(kappa):
        for j in range(k_i):
            content *= b * (m - i) + 2 * j
    num = 2**k * math.factorial(k) * content
    den = _upper_hook_scaled(kappa, b) * _lower_hook_scaled(kappa, b)
    return num / den
