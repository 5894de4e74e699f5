"""Monte Carlo checks of the generator-free matrix beta law.

Samples come from the stochastic representation

    X = mu + Theta^{1/2} (r U) Sigma^{1/2},

``U`` uniform on the unit sphere of the ``beta*n*m`` real coordinates and ``r``
with density proportional to ``h(r**2) r**(beta*n*m - 1)``. A Wishart pair is
always cut out of one joint ``(n1 + n2) x m`` draw: for any generator other
than the Gaussian the two row blocks are dependent, so drawing them
separately would sample the wrong model.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.stats.sampling import NumericalInversePolynomial

from . import generators as gen
from .errors import DomainError
from .special_fns import AlgebraDim, BetaLike, ln_mv_gamma

log = logging.getLogger(__name__)

__all__ = [
    "EllipticalModel",
    "WishartPair",
    "BetaStats",
    "McReport",
    "Theorem2Config",
    "radial_sampler",
    "sample_elliptical",
    "haar_sample",
    "wishart_pair",
    "wishart_pairs",
    "beta_statistics",
    "beta_moment_reference",
    "collect_u_statistics",
    "verify_theorem2",
    "random_sigma",
]

COND_LIMIT = 1e12
_SAMPLING_BETAS = (1, 2)


def _dtype(beta: int):
    return np.float64 if beta == 1 else np.complex128


def _herm(A: np.ndarray) -> np.ndarray:
    return np.swapaxes(A, -1, -2).conj()


def _check_pd(name: str, A: np.ndarray, size: int) -> np.ndarray:
    A = np.asarray(A)
    if A.shape != (size, size):
        raise DomainError(f"{name} must be {size}x{size}, got {A.shape}")
    if np.max(np.abs(A - A.conj().T)) > 1e-12 * max(1.0, float(np.max(np.abs(A)))):
        raise DomainError(f"{name} must be Hermitian")
    if np.linalg.eigvalsh(A).min() <= 0:
        raise DomainError(f"{name} must be positive definite")
    return A


def _psd_sqrt(A: np.ndarray) -> np.ndarray:
    """Hermitian positive square root (batched)."""
    w, V = np.linalg.eigh(A)
    return (V * np.sqrt(w)[..., None, :]) @ _herm(V)


def _inv_sqrt(A: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(A)
    return (V * (1.0 / np.sqrt(w))[..., None, :]) @ _herm(V)


@dataclass(frozen=True, eq=False)
class EllipticalModel:
    """Matrix variate elliptical law ``E_{n x m}(mu, Theta (x) Sigma, h)``.

    ``mu``, ``Theta`` and ``Sigma`` default to zero and identities.
    """

    n: int
    m: int
    beta: int
    generator: gen.Generator
    mu: np.ndarray | None = None
    Theta: np.ndarray | None = None
    Sigma: np.ndarray | None = None

    def __post_init__(self):
        b = AlgebraDim.of(self.beta).beta
        object.__setattr__(self, "beta", b)
        if b not in _SAMPLING_BETAS:
            raise DomainError(
                f"sampling supports beta in {_SAMPLING_BETAS}; beta={b} is available only "
                "in the special-function layer"
            )
        if self.n < 1 or self.m < 1:
            raise DomainError(f"n and m must be positive, got n={self.n}, m={self.m}")
        dt = _dtype(b)
        mu = np.zeros((self.n, self.m), dtype=dt) if self.mu is None else np.asarray(self.mu, dtype=dt)
        if mu.shape != (self.n, self.m):
            raise DomainError(f"mu must be {self.n}x{self.m}, got {mu.shape}")
        theta = np.eye(self.n, dtype=dt) if self.Theta is None else _check_pd("Theta", np.asarray(self.Theta, dtype=dt), self.n)
        sigma = np.eye(self.m, dtype=dt) if self.Sigma is None else _check_pd("Sigma", np.asarray(self.Sigma, dtype=dt), self.m)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "Theta", theta)
        object.__setattr__(self, "Sigma", sigma)
        # the radial density h(r^2) r^(dim-1) must be integrable
        self.generator.check_moment(self.dim / 2)

    @property
    def dim(self) -> int:
        return self.beta * self.n * self.m


@dataclass
class WishartPair:
    W1: np.ndarray
    W2: np.ndarray
    n1: int
    n2: int
    seed: object = None


@dataclass
class BetaStats:
    F: np.ndarray
    U: np.ndarray
    G: np.ndarray
    ill_conditioned: np.ndarray


@dataclass
class McReport:
    """One Monte Carlo decision."""

    statistic: str
    generator: str
    N: int
    estimate: float
    reference: float | None
    std_error: float | None
    passed: bool
    seed: int
    kind: str = "moment"
    p_value: float | None = None
    threshold: float | None = None
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


# -- samplers ---------------------------------------------------------------


class _RadialSquaredDensity:
    """Density of ``y = r**2``: proportional to ``h(y) y**(dim/2 - 1)``."""

    def __init__(self, g: gen.Generator, dim: int):
        self.g = g
        self.s = dim / 2.0

    def pdf(self, y):
        if y <= 0:
            return 0.0
        return float(self.g.h(y)) / self.g.c * y ** (self.s - 1)

    def support(self):
        return (0.0, math.inf)


def radial_sampler(g: gen.Generator, dim: int, rng: np.random.Generator, size=None,
                   method: str = "exact") -> np.ndarray:
    """Draw ``r`` with density proportional to ``h(r**2) r**(dim - 1)``.

    ``method="exact"`` uses the gamma (Gaussian, Kotz) or gamma-ratio
    (Pearson VII) representation of ``r**2``; ``method="inverse_cdf"`` uses
    numerical inversion of the radial CDF for any generator.
    """
    if dim < 1:
        raise DomainError(f"dim must be positive, got {dim}")
    s = dim / 2.0
    g.check_moment(s)
    if method == "inverse_cdf":
        sampler = NumericalInversePolynomial(
            _RadialSquaredDensity(g, dim), mode=max(g.mode(0, s), 1e-8), domain=(0.0, np.inf),
            random_state=rng,
        )
        y = sampler.rvs(size)
    elif method != "exact":
        raise ValueError(f"unknown radial sampling method {method!r}")
    elif isinstance(g, gen.Gaussian):
        y = rng.gamma(s, g.s, size)
    elif isinstance(g, gen.Kotz):
        y = rng.gamma(s + g.T - 1, 1.0 / g.r, size)
    elif isinstance(g, gen.PearsonVII):
        y = g.nu * rng.gamma(s, 1.0, size) / rng.gamma(g.p - s, 1.0, size)
    else:
        return radial_sampler(g, dim, rng, size, method="inverse_cdf")
    return np.sqrt(y)


def sample_elliptical(model: EllipticalModel, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw ``X`` (shape ``(n, m)``, or ``(size, n, m)``) from the model."""
    k = 1 if size is None else int(size)
    d = model.dim
    z = rng.standard_normal((k, d))
    u = z / np.linalg.norm(z, axis=1, keepdims=True)
    r = radial_sampler(model.generator, d, rng, k)
    v = r[:, None] * u
    nm = model.n * model.m
    if model.beta == 1:
        core = v.reshape(k, model.n, model.m)
    else:
        core = (v[:, :nm] + 1j * v[:, nm:]).reshape(k, model.n, model.m)
    th = _psd_sqrt(model.Theta)
    sg = _psd_sqrt(model.Sigma)
    X = model.mu + th @ core @ sg
    return X[0] if size is None else X


def haar_sample(beta: BetaLike, m: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-distributed orthogonal (beta=1) or unitary (beta=2) matrices.

    QR of a Gaussian matrix with the columns of ``Q`` rescaled by the phases
    of ``diag(R)``, which makes the law exactly invariant.
    """
    b = AlgebraDim.of(beta).beta
    if b not in _SAMPLING_BETAS:
        raise DomainError(f"haar_sample supports beta in {_SAMPLING_BETAS}, got {b}")
    k = 1 if size is None else int(size)
    if b == 1:
        Z = rng.standard_normal((k, m, m))
    else:
        Z = (rng.standard_normal((k, m, m)) + 1j * rng.standard_normal((k, m, m))) / math.sqrt(2)
    Q, R = np.linalg.qr(Z)
    dg = np.diagonal(R, axis1=-2, axis2=-1)
    ph = dg / np.abs(dg)
    H = Q * ph[..., None, :]
    return H[0] if size is None else H


def wishart_pairs(model: EllipticalModel, n1: int, rng: np.random.Generator, size: int,
                  max_resample: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Batched ``(X1* X1, X2* X2)`` from joint draws split after row ``n1``."""
    n2 = model.n - n1
    m = model.m
    if n1 < m or n2 < m:
        raise DomainError(f"need n1, n2 >= m for full rank; got n1={n1}, n2={n2}, m={m}")
    X = sample_elliptical(model, rng, size)
    W1, W2 = _gram(X[:, :n1]), _gram(X[:, n1:])
    for attempt in range(max_resample):
        bad = ~(_is_pd(W1) & _is_pd(W2))
        if not bad.any():
            break
        log.warning("resampling %d rank-deficient Wishart pair(s), attempt %d", int(bad.sum()), attempt + 1)
        Xr = sample_elliptical(model, rng, int(bad.sum()))
        W1[bad], W2[bad] = _gram(Xr[:, :n1]), _gram(Xr[:, n1:])
    else:
        raise ArithmeticError("could not draw positive definite Wishart pairs")
    return W1, W2


def wishart_pair(model: EllipticalModel, n1: int, rng: np.random.Generator) -> WishartPair:
    """One generalized elliptical Wishart pair."""
    W1, W2 = wishart_pairs(model, n1, rng, 1)
    return WishartPair(W1[0], W2[0], n1, model.n - n1)


def _gram(X: np.ndarray) -> np.ndarray:
    W = _herm(X) @ X
    return (W + _herm(W)) / 2


def _is_pd(W: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(W)
    return w[..., 0] > 1e-12 * np.maximum(w[..., -1], 1e-300)


def beta_statistics(W1: np.ndarray, W2: np.ndarray) -> BetaStats:
    """``F = W2^{-1/2} W1 W2^{-1/2}``, ``U = (I + F^{-1})^{-1}`` and ``G = W1 W2^{-1}``.

    Works on single matrices or stacks. ``U`` is formed from the spectral
    decomposition of ``F`` so it is exactly Hermitian with eigenvalues
    ``f / (1 + f)`` in (0, 1).
    """
    W1 = np.asarray(W1)
    W2 = np.asarray(W2)
    w2 = np.linalg.eigvalsh(W2)
    cond = w2[..., -1] / w2[..., 0]
    ill = ~(cond <= COND_LIMIT)
    if np.any(ill):
        log.warning("%d W2 matrices with condition number > %.0e", int(np.sum(ill)), COND_LIMIT)
    R = _inv_sqrt(W2)
    F = R @ W1 @ R
    F = (F + _herm(F)) / 2
    f, V = np.linalg.eigh(F)
    U = (V * (f / (1.0 + f))[..., None, :]) @ _herm(V)
    U = (U + _herm(U)) / 2
    # W1 W2^{-1} = (W2^{-1} W1)^* because both are Hermitian
    G = _herm(np.linalg.solve(W2, W1))
    return BetaStats(F, U, G, ill)


def beta_moment_reference(beta: BetaLike, m: int, n1: int, n2: int, h_exp: float) -> float:
    """``E|U|**h`` from the beta type I normalizing constant.

    ``Gamma_m(b n1/2 + h) Gamma_m(b (n1 + n2)/2) / [Gamma_m(b n1/2) Gamma_m(b (n1 + n2)/2 + h)]``.
    """
    d = AlgebraDim.of(beta)
    lim = (m - 1) * d.half
    a1 = d.beta * n1 / 2.0
    a2 = d.beta * n2 / 2.0
    if not (a1 > lim and a2 > lim):
        raise DomainError(f"need beta*n_i/2 > (m-1)beta/2 = {lim}; got {a1}, {a2}")
    if not a1 + h_exp > lim:
        raise DomainError(f"moment order h={h_exp} puts Gamma_m(beta n1/2 + h) on a pole")
    return math.exp(
        ln_mv_gamma(d, m, a1 + h_exp) + ln_mv_gamma(d, m, a1 + a2)
        - ln_mv_gamma(d, m, a1) - ln_mv_gamma(d, m, a1 + a2 + h_exp)
    )


# -- beta law harness ------------------------------------------------------


def random_sigma(beta: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """A deliberately anisotropic positive definite scale matrix."""
    A = rng.standard_normal((m, m))
    if beta == 2:
        A = A + 1j * rng.standard_normal((m, m))
    S = A @ A.conj().T + 0.1 * np.eye(m)
    S = S * np.linspace(1.0, 4.0, m)[:, None] * np.linspace(1.0, 4.0, m)[None, :]
    return (S + S.conj().T) / 2


@dataclass(frozen=True)
class Theorem2Config:
    beta: int = 1
    m: int = 2
    n1: int = 6
    n2: int = 8
    N: int = 100_000
    seed: int = 42
    chunk: int = 10_000
    threads: int = 1
    ks_alpha: float = 0.01
    se_mult: float = 3.0
    sigma_check: bool = True
    eig_draws: int = 1000
    eig_rtol: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "beta", AlgebraDim.of(self.beta).beta)
        if self.beta not in _SAMPLING_BETAS:
            raise DomainError(f"Monte Carlo supports beta in {_SAMPLING_BETAS}, got {self.beta}")
        if self.N < 10_000:
            raise DomainError(f"need N >= 10^4 draws, got {self.N}")
        lim = (self.m - 1) * self.beta / 2
        if not (self.n1 > lim and self.n2 > lim):
            raise DomainError(f"need n1, n2 > (m-1)beta/2 = {lim}")
        if self.n1 < self.m or self.n2 < self.m:
            raise DomainError("need n1, n2 >= m so that W1, W2 are invertible")


def _chunk_stats(model: EllipticalModel, n1: int, size: int, rng: np.random.Generator,
                 eig_check: int) -> dict[str, np.ndarray]:
    W1, W2 = wishart_pairs(model, n1, rng, size)
    bs = beta_statistics(W1, W2)
    u = np.linalg.eigvalsh(bs.U)
    H = haar_sample(model.beta, model.m, rng, size)
    rot = H @ bs.U @ _herm(H)
    out = {
        "det": np.prod(u, axis=-1),
        "trace": np.sum(u, axis=-1),
        "lmax": u[..., -1],
        "u11": bs.U[..., 0, 0].real,
        "rot_u11": rot[..., 0, 0].real,
    }
    if eig_check:
        k = min(eig_check, size)
        ef = np.linalg.eigvalsh(bs.F[:k])
        eg = np.sort(np.linalg.eigvals(bs.G[:k]).real, axis=-1)
        out["eig_rel_gap"] = np.max(np.abs(ef - eg) / np.abs(ef), axis=-1)
    return out


def collect_u_statistics(cfg: Theorem2Config, g: gen.Generator, sigma: np.ndarray | None,
                         stream: Sequence[int]) -> dict[str, np.ndarray]:
    """Scalar functionals of ``U`` over ``cfg.N`` draws.

    Chunk ``c`` draws from ``SeedSequence(cfg.seed, spawn_key=(*stream, c))``
    so results do not depend on ``cfg.threads``.
    """
    model = EllipticalModel(cfg.n1 + cfg.n2, cfg.m, cfg.beta, g, Sigma=sigma)
    sizes = [cfg.chunk] * (cfg.N // cfg.chunk)
    if cfg.N % cfg.chunk:
        sizes.append(cfg.N % cfg.chunk)
    eig_left = cfg.eig_draws
    jobs = []
    for c, size in enumerate(sizes):
        ss = np.random.SeedSequence(cfg.seed, spawn_key=tuple(stream) + (c,))
        k = min(eig_left, size)
        eig_left -= k
        jobs.append((size, np.random.default_rng(ss), k))

    def run(job):
        size, rng, k = job
        return _chunk_stats(model, cfg.n1, size, rng, k)

    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as ex:
            parts = list(ex.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    keys = parts[0].keys()
    out = {}
    for key in keys:
        pieces = [p[key] for p in parts if key in p]
        out[key] = np.concatenate(pieces)
    return out


def _mean_se(v: np.ndarray) -> tuple[float, float]:
    return float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(v.size))


def _z_report(name, label, v, ref, cfg, kind="moment") -> McReport:
    est, se = _mean_se(v)
    z = abs(est - ref) / se
    return McReport(name, label, int(v.size), est, ref, se, bool(z <= cfg.se_mult), cfg.seed,
                    kind, threshold=cfg.se_mult, detail={"z": z})


def _two_mean_report(name, label, a, b, cfg, kind) -> McReport:
    ea, sa = _mean_se(a)
    eb, sb = _mean_se(b)
    se = math.hypot(sa, sb)
    z = abs(ea - eb) / se
    return McReport(name, label, int(a.size), ea, eb, se, bool(z <= cfg.se_mult), cfg.seed,
                    kind, threshold=cfg.se_mult, detail={"z": z})


def _paired_report(name, label, a, b, cfg, kind) -> McReport:
    """Mean difference of two statistics computed on the same draws."""
    est, _ = _mean_se(a)
    ref, _ = _mean_se(b)
    diff = a - b
    _, se = _mean_se(diff)
    # m = 1: H is a scalar phase and the two statistics agree up to rounding
    z = 0.0 if np.max(np.abs(diff)) <= 1e-12 else abs(est - ref) / se
    return McReport(name, label, int(a.size), est, ref, se, bool(z <= cfg.se_mult), cfg.seed,
                    kind, threshold=cfg.se_mult, detail={"z": z})


def _labels(generators: Sequence[gen.Generator]) -> list[str]:
    return [f"{i}:{g.describe()}" for i, g in enumerate(generators)]


def verify_theorem2(cfg: Theorem2Config, generators: Sequence[gen.Generator],
                    raw: dict | None = None) -> list[McReport]:
    """Monte Carlo check that ``U`` follows the generator-free beta type I law.

    Per generator: ``E|U|`` and ``E|U|^2`` against the exact moments; for
    ``m = 1`` a KS test against ``Beta(beta n1/2, beta n2/2)``; the Haar
    symmetrization ``(H U H*)_11`` against ``U_11``; ``eig(F) = eig(G)``;
    and (with ``cfg.sigma_check``) the same statistics under an anisotropic
    ``Sigma``. Across generators: two-sample KS on ``tr U``, ``|U|`` and the
    largest eigenvalue, plus agreement of ``E|U|``.

    Failures are report entries, never exceptions. Pass a dict as ``raw``
    to receive the per-draw statistics.
    """
    labels = _labels(generators)
    reports: list[McReport] = []
    samples: dict[str, dict[str, np.ndarray]] = {}
    sigma_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1_000_000,)))
    sigma = random_sigma(cfg.beta, cfg.m, sigma_rng) if cfg.sigma_check else None
    e1 = beta_moment_reference(cfg.beta, cfg.m, cfg.n1, cfg.n2, 1.0)
    e2 = beta_moment_reference(cfg.beta, cfg.m, cfg.n1, cfg.n2, 2.0)
    a_shape = cfg.beta * cfg.n1 / 2
    b_shape = cfg.beta * cfg.n2 / 2

    for gi, (g, label) in enumerate(zip(generators, labels)):
        st = collect_u_statistics(cfg, g, None, (0, gi))
        samples[label] = st
        reports.append(_z_report("E|U|", label, st["det"], e1, cfg))
        reports.append(_z_report("E|U|^2", label, st["det"] ** 2, e2, cfg))
        if cfg.m == 1:
            res = stats.kstest(st["det"], stats.beta(a_shape, b_shape).cdf)
            reports.append(McReport(
                f"KS U ~ Beta({a_shape:g},{b_shape:g})", label, int(st["det"].size),
                float(res.statistic), None, None, bool(res.pvalue > cfg.ks_alpha), cfg.seed,
                "ks", p_value=float(res.pvalue), threshold=cfg.ks_alpha))
        reports.append(_paired_report("E(HUH*)_11 vs E U_11", label, st["rot_u11"], st["u11"],
                                        cfg, "symmetrization"))
        if "eig_rel_gap" in st:
            gap = float(np.max(st["eig_rel_gap"]))
            reports.append(McReport("max rel |eig F - eig G|", label, int(st["eig_rel_gap"].size),
                                    gap, 0.0, None, bool(gap <= cfg.eig_rtol), cfg.seed,
                                    "spectral", threshold=cfg.eig_rtol))
        if sigma is not None:
            ss = collect_u_statistics(cfg, g, sigma, (1, gi))
            samples[label + "|sigma"] = ss
            for key, name in (("det", "E|U|"), ("trace", "E tr U")):
                reports.append(_two_mean_report(f"{name} Sigma vs I", label, ss[key], st[key],
                                                cfg, "sigma-invariance"))

    funcs = [("det", "|U|")] if cfg.m == 1 else [("trace", "tr U"), ("det", "|U|"), ("lmax", "lambda_max U")]
    for la, lb in itertools.combinations(labels, 2):
        pair = f"{la} vs {lb}"
        for key, name in funcs:
            res = stats.ks_2samp(samples[la][key], samples[lb][key])
            reports.append(McReport(f"KS2 {name}", pair, int(samples[la][key].size),
                                    float(res.statistic), None, None,
                                    bool(res.pvalue > cfg.ks_alpha), cfg.seed, "cross-generator",
                                    p_value=float(res.pvalue), threshold=cfg.ks_alpha))
        reports.append(_two_mean_report("E|U| across generators", pair, samples[la]["det"],
                                        samples[lb]["det"], cfg, "cross-generator"))
    if raw is not None:
        raw.update(samples)
    return reports
