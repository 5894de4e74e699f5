"""Hypergeometric-type series of Jack polynomials and the binomial-series check.

``p_series_1`` sums

    sum_k g_k / k! sum_{|kappa| = k} prod_i (a_i)_kappa / prod_j (b_j)_kappa C_kappa(x)

and ``p_series_2`` the two-argument form with ``C_kappa(x) C_kappa(y) / C_kappa(I)``.
With ``g_k = 1`` these are the classical ``pFq`` of matrix argument.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import gmpy2
import mpmath
import numpy as np
from gmpy2 import mpfr

from . import generators as gen
from .errors import ConfigurationError, DomainError
from .jack import EXTENDED_PRECISION, JackTable, get_table, jack_c_identity
from .special_fns import AlgebraDim, BetaLike, gen_pochhammer, ln_mv_gamma

__all__ = [
    "SeriesSpec",
    "SeriesResult",
    "Theorem1Record",
    "sym_eigenvalues",
    "quaternion_to_complex",
    "p_series_1",
    "p_series_2",
    "hypergeometric_pfq",
    "elliptical_binomial_coeffs",
    "verify_theorem1",
]


@dataclass(frozen=True)
class SeriesSpec:
    """Parameters of a truncated Jack series.

    ``coeffs`` is the weight sequence ``g_0..g_K``; ``None`` means all ones.
    Entries may be floats or ``mpmath.mpf``; the extended-precision path uses
    them at full precision.

    ``precision`` is ``"double"``, ``"extended"`` or ``"auto"``. In auto mode
    the series is first summed in float64 and redone in extended precision
    only if it failed to converge or the estimated rounding error
    (condition number times machine epsilon) threatens ``tol``.
    """

    beta: int
    a_params: tuple[float, ...] = ()
    b_params: tuple[float, ...] = ()
    coeffs: tuple | None = None
    max_degree: int = 40
    tol: float = 1e-12
    accelerate: bool = False
    precision: str = "auto"

    def __post_init__(self):
        object.__setattr__(self, "beta", AlgebraDim.of(self.beta).beta)
        object.__setattr__(self, "a_params", tuple(float(a) for a in self.a_params))
        object.__setattr__(self, "b_params", tuple(float(b) for b in self.b_params))
        if self.coeffs is not None:
            object.__setattr__(self, "coeffs", tuple(self.coeffs))
        if self.max_degree < 0:
            raise ConfigurationError(f"max_degree must be >= 0, got {self.max_degree}")
        if not self.tol > 0:
            raise ConfigurationError(f"tol must be positive, got {self.tol}")
        if self.coeffs is not None and len(self.coeffs) < self.max_degree + 1:
            raise ConfigurationError(
                f"need {self.max_degree + 1} coefficients g_0..g_K, got {len(self.coeffs)}"
            )
        if self.precision not in ("auto", "double", "extended"):
            raise ConfigurationError(f"unknown precision mode {self.precision!r}")

    def weight(self, k: int) -> float:
        return 1.0 if self.coeffs is None else float(self.coeffs[k])

    def weight_ext(self, k: int):
        return mpfr(1) if self.coeffs is None else _to_mpfr(self.coeffs[k])

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.coeffs is not None:
            d["coeffs"] = [float(c) for c in self.coeffs]
        return d


@dataclass
class SeriesResult:
    value: float
    terms_used: int
    tail_estimate: float
    converged: bool
    method: str = "direct"
    precision: str = "double"
    condition: float = 1.0
    degree_sums: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("degree_sums")
        return d


def _to_mpfr(v):
    if isinstance(v, mpmath.mpf):
        return mpfr(mpmath.nstr(v, 80, strip_zeros=False))
    if isinstance(v, Fraction):
        return mpfr(gmpy2.mpq(v.numerator, v.denominator))
    return mpfr(v)


# -- matrix arguments -------------------------------------------------------


def quaternion_to_complex(q0, q1, q2, q3) -> np.ndarray:
    """Complex ``2m x 2m`` image of the quaternion matrix ``q0 + q1 i + q2 j + q3 k``."""
    a = np.asarray(q0, dtype=float) + 1j * np.asarray(q1, dtype=float)
    b = np.asarray(q2, dtype=float) + 1j * np.asarray(q3, dtype=float)
    return np.block([[a, b], [-b.conj(), a.conj()]])


def sym_eigenvalues(Z, beta: BetaLike) -> np.ndarray:
    """Real eigenvalues (descending) of a Hermitian matrix over the algebra.

    For ``beta = 4`` pass the complex ``2m x 2m`` representation (see
    :func:`quaternion_to_complex`); each eigenvalue appears twice there and is
    reported once.
    """
    d = AlgebraDim.of(beta)
    if d.beta == 8:
        raise DomainError("octonion matrices are not supported; pass the spectrum directly")
    Z = np.asarray(Z)
    if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {Z.shape}")
    if d.beta == 1 and np.iscomplexobj(Z):
        if np.any(np.abs(Z.imag) > 0):
            raise DomainError("beta=1 requires a real matrix")
        Z = Z.real
    scale = max(float(np.max(np.abs(Z))), 1e-300)
    if np.max(np.abs(Z - Z.conj().T)) > 1e-12 * scale:
        raise DomainError("matrix is not Hermitian")
    if d.beta == 4:
        m2 = Z.shape[0]
        if m2 % 2:
            raise DomainError("beta=4 expects the 2m x 2m complex representation")
        m = m2 // 2
        A, B = Z[:m, :m], Z[:m, m:]
        if (np.max(np.abs(Z[m:, m:] - A.conj())) > 1e-12 * scale
                or np.max(np.abs(Z[m:, :m] + B.conj())) > 1e-12 * scale):
            raise DomainError("matrix is not the complex image of a quaternion matrix")
    H = (Z + Z.conj().T) / 2
    w, V = np.linalg.eigh(H)
    resid = np.max(np.abs(V @ np.diag(w) @ V.conj().T - H)) if H.size else 0.0
    if resid > 1e-10 * max(np.max(np.abs(w)), 1e-300):
        raise ArithmeticError(f"eigendecomposition residual {resid} too large")
    w = np.sort(w)[::-1]
    if d.beta == 4:
        w = w[::2]
    return np.ascontiguousarray(w)


# -- series engines ---------------------------------------------------------


def _partition_coeffs(spec: SeriesSpec, table: JackTable) -> np.ndarray:
    out = np.empty(len(table.partitions))
    for i, kappa in enumerate(table.partitions):
        num = math.prod(gen_pochhammer(spec.beta, a, kappa) for a in spec.a_params)
        den = math.prod(gen_pochhammer(spec.beta, b, kappa) for b in spec.b_params)
        if den == 0.0:
            raise ConfigurationError(
                f"denominator Pochhammer vanishes at partition {kappa} for b={spec.b_params}"
            )
        out[i] = num / den
    return out


def _partition_coeffs_ext(spec: SeriesSpec, table: JackTable) -> np.ndarray:
    half = mpfr(spec.beta) / 2
    a_ext = [mpfr(a) for a in spec.a_params]
    b_ext = [mpfr(b) for b in spec.b_params]

    def poch(a, kappa):
        out = mpfr(1)
        for i, k_i in enumerate(kappa):
            shift = a - i * half
            for j in range(k_i):
                out *= shift + j
        return out

    out = np.empty(len(table.partitions), dtype=object)
    for i, kappa in enumerate(table.partitions):
        num = mpfr(1)
        for a in a_ext:
            num *= poch(a, kappa)
        den = mpfr(1)
        for b in b_ext:
            den *= poch(b, kappa)
        out[i] = num / den
    return out


def _resolve_table(spec: SeriesSpec, m: int, table: JackTable | None) -> JackTable:
    if table is None:
        return get_table(spec.beta, spec.max_degree, m)
    if table.beta != spec.beta:
        raise ConfigurationError(f"table built for beta={table.beta}, spec has beta={spec.beta}")
    if table.max_degree < spec.max_degree or table.max_parts < m:
        raise ConfigurationError(
            f"table (degree {table.max_degree}, parts {table.max_parts}) too small for "
            f"degree {spec.max_degree} with {m} variables"
        )
    return table


def _wynn_limit(partials: Sequence, dps: int) -> tuple[float, float]:
    """Wynn epsilon estimate of the limit and a difference-based error bound."""
    if len(partials) < 3:
        return float(partials[-1]), math.inf
    with mpmath.workdps(dps):
        seq = [mpmath.mpf(str(p)) if not isinstance(p, float) else mpmath.mpf(p) for p in partials]
        # an exactly zero difference would truncate the table; the randomized
        # variant (deterministically seeded) perturbs it by a few ulps instead
        table = mpmath.shanks(seq, randomized=True)
        if len(table) < 2 or len(table[-1]) < 2:
            return float(partials[-1]), math.inf
        # odd columns hold the extrapolates; the last one of the last row is
        # the best estimate, compared against its predecessors for an error bound
        last = table[-1]
        best = last[-1]
        err = abs(best - last[-3]) if len(last) >= 3 else mpmath.inf
        odd_prev = [v for i, v in enumerate(table[-2]) if i % 2 == 1]
        if odd_prev:
            err = max(err, abs(best - odd_prev[-1]))
        return float(best), float(err)


def _sum_degrees(spec: SeriesSpec, terms_by_degree: list[np.ndarray], extended: bool) -> SeriesResult:
    if extended:
        fsum = gmpy2.fsum

        def weight(k):
            return spec.weight_ext(k) / mpfr(math.factorial(k))
    else:
        def fsum(vals):
            return math.fsum(vals)

        def weight(k):
            return spec.weight(k) / math.factorial(k)

    degree_sums: list = []
    partials: list = []
    abs_sums: list = []
    converged = False
    k_used = 0
    for k, terms in enumerate(terms_by_degree):
        vals = weight(k) * terms
        degree_sums.append(fsum(vals.tolist()))
        abs_sums.append(fsum(np.abs(vals).tolist()))
        partials.append(fsum(degree_sums))
        k_used = k
        if k >= 2:
            bound = spec.tol * abs(partials[-1])
            if abs_sums[-1] <= bound and abs_sums[-2] <= bound:
                converged = True
                break
    total_abs = float(fsum(abs_sums))
    value = float(partials[-1])
    condition = total_abs / abs(value) if value != 0 else (0.0 if total_abs == 0 else math.inf)
    tail = float(max(abs_sums[-2:])) if len(abs_sums) > 1 else 0.0
    if converged and len(terms_by_degree) == 1:
        tail = 0.0
    method = "direct"
    if not converged and spec.accelerate:
        est, err = _wynn_limit(partials, 60 if extended else 20)
        if math.isfinite(est) and err < tail:
            value, tail, method = est, err, "wynn-epsilon"
            converged = err <= spec.tol * abs(est)
    return SeriesResult(value, k_used, tail, converged, method,
                        "extended" if extended else "double", condition,
                        [float(v) for v in degree_sums])


def _rounding_suspect(res: SeriesResult, tol: float) -> bool:
    # the float64 path carries about eps * condition of relative error
    return res.condition * 1e-15 > 1e-2 * tol


def _by_degree(spec: SeriesSpec, table: JackTable, vals: np.ndarray) -> list[np.ndarray]:
    weights = table.weights
    return [vals[weights == k] for k in range(spec.max_degree + 1)]


def _run(spec: SeriesSpec, table: JackTable, jack_double, jack_ext) -> SeriesResult:
    res = None
    if spec.precision in ("auto", "double"):
        res = _sum_degrees(spec, _by_degree(spec, table, _partition_coeffs(spec, table) * jack_double()), False)
        if spec.precision == "double" or (res.converged and not _rounding_suspect(res, spec.tol)):
            return res
    with gmpy2.context(gmpy2.get_context(), precision=EXTENDED_PRECISION):
        vals = _partition_coeffs_ext(spec, table) * jack_ext()
        return _sum_degrees(spec, _by_degree(spec, table, vals), True)


def p_series_1(spec: SeriesSpec, x: Sequence[float], table: JackTable | None = None) -> SeriesResult:
    """Single-argument series at the spectrum ``x``.

    Degree levels are summed in ascending order with exact (``fsum``)
    accumulation; summation stops after two consecutive degree levels whose
    absolute term sums fall below ``tol * |partial sum|``. If that never
    happens within ``max_degree`` the partial sum comes back with
    ``converged=False``, or with ``spec.accelerate`` a Wynn-epsilon
    extrapolation of the partial sums, flagged converged only when its own
    error estimate meets ``tol``.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    table = _resolve_table(spec, len(x), table)
    return _run(spec, table, lambda: table.c_all(x), lambda: table.c_all_extended(x.tolist()))


def p_series_2(
    spec: SeriesSpec, x: Sequence[float], y: Sequence[float], table: JackTable | None = None
) -> SeriesResult:
    """Two-argument series with ``C_kappa(x) C_kappa(y) / C_kappa(I_m)``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise DomainError(f"x and y must have equal length, got {x.size} and {y.size}")
    m = x.size
    table = _resolve_table(spec, m, table)
    fits = [len(kappa) <= m for kappa in table.partitions]

    def double():
        ci = np.array([jack_c_identity(spec.beta, kappa, m) if ok else np.inf
                       for kappa, ok in zip(table.partitions, fits)])
        return table.c_all(x) * table.c_all(y) / ci

    def ext():
        cx = table.c_all_extended(x.tolist())
        cy = table.c_all_extended(y.tolist())
        ones = table.c_all_extended([1.0] * m)
        out = np.empty(len(fits), dtype=object)
        for i, ok in enumerate(fits):
            out[i] = cx[i] * cy[i] / ones[i] if ok else mpfr(0)
        return out

    return _run(spec, table, double, ext)


def hypergeometric_pfq(beta: BetaLike, a_params, b_params, x, max_degree: int = 40,
                       tol: float = 1e-12, table: JackTable | None = None) -> SeriesResult:
    """Classical ``pFq`` of matrix argument (all weights one)."""
    spec = SeriesSpec(AlgebraDim.of(beta).beta, tuple(a_params), tuple(b_params), None, max_degree, tol)
    return p_series_1(spec, x, table)


# -- elliptical binomial series ---------------------------------------------


def elliptical_binomial_coeffs(
    g: gen.Generator, beta: BetaLike, m: int, a: float, K: int, method: str = "closed"
) -> np.ndarray:
    """Self-normalized weights ``[D_k(ma) / Gamma(ma + k)] / [D_0(ma) / Gamma(ma)]``.

    Dividing by the k = 0 weight removes the generator's normalization
    constant, so the binomial identity holds for any scaling of ``h``.
    ``method`` picks how the ``D_k`` are evaluated: ``"closed"`` and
    ``"quad"`` give a float array, ``"mp"`` an object array of ``mpmath.mpf``
    computed at 50 significant digits.
    """
    d = AlgebraDim.of(beta)
    if not a > (m - 1) * d.half:
        raise DomainError(f"need a > (m-1)beta/2 = {(m - 1) * d.half}, got a={a}")
    g.check_admissible(m, a, K)
    s = m * a
    if method == "mp":
        with mpmath.workdps(50):
            sm = mpmath.mpf(s)
            w = [g.deriv_moment_mp(k, sm) / mpmath.gamma(sm + k) for k in range(K + 1)]
            out = np.array([v / w[0] for v in w], dtype=object)
        out[0] = mpmath.mpf(1)
        return out
    logs = []
    signs = []
    for k in range(K + 1):
        dk = gen.deriv_moment(g, k, s, method=method)
        if dk == 0.0:
            raise ArithmeticError(f"D_{k}({s}) evaluated to zero for {g.describe()}")
        logs.append(math.log(abs(dk)) - math.lgamma(s + k))
        signs.append(math.copysign(1.0, dk))
    out = np.array([sg * math.exp(lg - logs[0]) for sg, lg in zip(signs, logs)]) * signs[0]
    out[0] = 1.0
    return out


@dataclass
class Theorem1Record:
    """Outcome of one determinant-versus-series comparison."""

    beta: int
    m: int
    a: float
    x: list[float]
    generator: dict
    K: int
    tol: float
    lhs: float
    rhs: float
    rel_error: float
    passed: bool
    converged: bool
    terms_used: int
    tail_estimate: float
    series_method: str
    series_precision: str
    max_coeff_deviation: float
    raw_weight_0: float
    pi_prefactor_k0: float
    mvgamma_prefactor_k0: float

    def to_dict(self) -> dict:
        return asdict(self)


def verify_theorem1(
    g: gen.Generator,
    beta: BetaLike,
    a: float,
    x: Sequence[float],
    K: int = 40,
    tol: float = 1e-8,
    table: JackTable | None = None,
    coeff_method: str = "closed",
    accelerate: bool = True,
) -> Theorem1Record:
    """Compare ``prod (1 - x_i)**(-a)`` with the generator-weighted series at ``-x``.

    The series uses self-normalized weights, so the result does not depend on
    the scaling of ``h``. For reference the record also carries two unnormalized
    k = 0 constants: ``pi**(ma) D_0(ma)/Gamma(ma)``, which is one only when
    ``h`` is scaled so that ``pi**(ma) M(ma) = Gamma(ma)``, and ``1/Gamma_m(a)``.
    """
    d = AlgebraDim.of(beta)
    x = np.asarray(x, dtype=float).reshape(-1)
    m = x.size
    if np.max(np.abs(x)) >= 1:
        raise DomainError(f"need ||x|| < 1, got max |x_i| = {np.max(np.abs(x))}")
    if coeff_method == "closed":
        series_coeffs = elliptical_binomial_coeffs(g, d, m, a, K, method="mp")
        coeffs = np.array([float(c) for c in series_coeffs])
    else:
        coeffs = elliptical_binomial_coeffs(g, d, m, a, K, method=coeff_method)
        series_coeffs = coeffs
    lhs = math.exp(-a * math.fsum(np.log1p(-x).tolist()))
    spec = SeriesSpec(d.beta, (a,), (), tuple(series_coeffs.tolist()), K, tol / 100, accelerate)
    res = p_series_1(spec, -x, table)
    rel = abs(lhs - res.value) / abs(lhs)
    dev = float(np.max(np.abs(coeffs - (-1.0) ** np.arange(K + 1))))
    with mpmath.workdps(30):
        sm = mpmath.mpf(m * a)
        raw0_mp = g.deriv_moment_mp(0, sm) / mpmath.gamma(sm)
        raw0 = float(raw0_mp)
        literal = float(mpmath.pi**sm * raw0_mp)
    return Theorem1Record(
        beta=d.beta,
        m=m,
        a=float(a),
        x=x.tolist(),
        generator=g.to_dict(),
        K=K,
        tol=tol,
        lhs=lhs,
        rhs=res.value,
        rel_error=rel,
        passed=bool(rel <= tol),
        converged=res.converged,
        terms_used=res.terms_used,
        tail_estimate=res.tail_estimate,
        series_method=res.method,
        series_precision=res.precision,
        max_coeff_deviation=dev,
        raw_weight_0=raw0,
        pi_prefactor_k0=literal,
        mvgamma_prefactor_k0=math.exp(-ln_mv_gamma(d, m, a)),
    )
