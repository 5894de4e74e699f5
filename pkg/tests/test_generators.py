import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate
from scipy.special import poch

from ellbinom import generators as gen
from ellbinom.errors import DivergenceError, DomainError

FAMILY_SAMPLES = [
    gen.Gaussian(s=2.0),
    gen.Gaussian(s=0.7, c=3.0),
    gen.Kotz(T=1.0, r=1.0),
    gen.Kotz(T=2.0, r=1.0),
    gen.Kotz(T=3.5, r=0.6, c=0.2),
    gen.PearsonVII(p=60.0, nu=1.0),
    gen.PearsonVII(p=45.0, nu=2.5),
]


def test_h_deriv_examples():
    g = gen.Gaussian(s=2.0)
    assert gen.h_deriv(g, 0, 1.0) == pytest.approx(math.exp(-0.5), rel=1e-15)
    assert gen.h_deriv(g, 1, 1e-12) == pytest.approx(-0.5, rel=1e-10)
    assert gen.h_deriv(gen.PearsonVII(p=5.0, nu=1.0), 2, 1.0) == pytest.approx(30 / 128, rel=1e-14)


@pytest.mark.parametrize("g", FAMILY_SAMPLES, ids=lambda g: g.describe())
def test_h_deriv_matches_numeric_differentiation(g):
    w = 1.3
    for k in range(1, 5):
        num = float(mpmath.diff(lambda t: _h_mp(g, t), w, k))
        assert gen.h_deriv(g, k, w) == pytest.approx(num, rel=1e-8)


def _h_mp(g, t):
    if isinstance(g, gen.Gaussian):
        return g.c * mpmath.exp(-t / g.s)
    if isinstance(g, gen.Kotz):
        return g.c * t ** (g.T - 1) * mpmath.exp(-g.r * t)
    return g.c * (1 + t / g.nu) ** (-g.p)


def test_mellin_examples():
    assert gen.mellin_moment(gen.Gaussian(s=1.0), 2.5) == pytest.approx(1.329340388179137, rel=1e-14)
    assert gen.mellin_moment(gen.PearsonVII(p=5.0, nu=1.0), 2.0) == pytest.approx(1 / 12, rel=1e-14)
    assert gen.mellin_moment(gen.Kotz(T=1.0, r=1.0), 3.0) == pytest.approx(2.0, rel=1e-14)


def test_deriv_moment_examples():
    assert gen.deriv_moment(gen.Gaussian(s=2.0), 1, 2.0) == pytest.approx(-8.0, rel=1e-14)
    assert gen.deriv_moment(gen.PearsonVII(p=6.0, nu=1.0), 1, 2.0) == pytest.approx(-0.1, rel=1e-14)
    for g in FAMILY_SAMPLES:
        assert gen.deriv_moment(g, 0, 3.0) == gen.mellin_moment(g, 3.0)


@pytest.mark.parametrize("g", FAMILY_SAMPLES, ids=lambda g: g.describe())
def test_closed_mellin_against_direct_quadrature(g):
    # independent of the package's own quadrature layout
    s = 2.7
    val, _ = integrate.quad(lambda y: g.h(y) * y ** (s - 1), 0, np.inf, epsrel=1e-12, limit=500)
    assert gen.mellin_moment(g, s) == pytest.approx(val, rel=1e-8)


@pytest.mark.parametrize("g", FAMILY_SAMPLES, ids=lambda g: g.describe())
@pytest.mark.parametrize("method", ["closed", "quad", "mp"])
def test_integration_by_parts_identity(g, method):
    tol = {"closed": 1e-9, "quad": 1e-7, "mp": 1e-9}[method]
    for s in (1.0, 2.5, 6.0):
        M = gen.mellin_moment(g, s)
        for k in range(0, 26):
            expect = (-1) ** k * poch(s, k) * M
            got = float(gen.deriv_moment(g, k, s, method=method))
            assert got == pytest.approx(expect, rel=tol)


def test_closed_vs_quadrature_random():
    rng = np.random.default_rng(11)
    for _ in range(30):
        fam = rng.integers(3)
        if fam == 0:
            g = gen.Gaussian(s=float(rng.uniform(0.3, 4)), c=float(rng.uniform(0.1, 5)))
        elif fam == 1:
            g = gen.Kotz(T=float(rng.uniform(1, 4)), r=float(rng.uniform(0.3, 3)))
        else:
            g = gen.PearsonVII(p=float(rng.uniform(12, 60)), nu=float(rng.uniform(0.5, 4)))
        s = float(rng.uniform(0.5, 10))
        k = int(rng.integers(0, 6))
        assert gen.deriv_moment(g, k, s, "quad") == pytest.approx(gen.deriv_moment(g, k, s), rel=1e-8)
        gen.deriv_moment(g, k, s, "checked")


@given(st.floats(0.2, 5.0), st.floats(0.5, 8.0))
def test_scale_coherence(lam, s):
    # h(lam*y) for each family stays in the family with rescaled parameters
    pairs = [
        (gen.Gaussian(s=2.0), gen.Gaussian(s=2.0 / lam)),
        (gen.PearsonVII(p=20.0, nu=1.5), gen.PearsonVII(p=20.0, nu=1.5 / lam)),
        (gen.Kotz(T=2.5, r=1.0), gen.Kotz(T=2.5, r=lam, c=lam ** 1.5)),
    ]
    for g, g_scaled in pairs:
        assert gen.mellin_moment(g_scaled, s) == pytest.approx(lam ** (-s) * gen.mellin_moment(g, s), rel=1e-12)


def test_divergence_and_domain_errors():
    with pytest.raises(DivergenceError):
        gen.mellin_moment(gen.PearsonVII(p=5.0, nu=1.0), 5.0)
    with pytest.raises(DivergenceError):
        gen.PearsonVII(p=30.0).check_admissible(2, 3.0, 40)
    with pytest.raises(DivergenceError):
        gen.mellin_moment(gen.Gaussian(), 0.0)
    with pytest.raises(DomainError):
        gen.Kotz(T=0.5)
    with pytest.raises(DomainError):
        gen.Gaussian(s=-1.0)
    with pytest.raises(DomainError):
        gen.Gaussian(c=0.0)
    with pytest.raises(DomainError):
        gen.h_deriv(gen.Gaussian(), -1, 1.0)


def test_parse_generator():
    g = gen.parse_generator("pearson7:p=40,nu=2")
    assert g == gen.PearsonVII(p=40.0, nu=2.0)
    assert gen.parse_generator("gaussian") == gen.Gaussian()
    assert gen.parse_generator("kotz:T=2,r=1").describe() == "kotz:T=2.0,r=1.0,c=1.0"
    gs = gen.parse_generator_list("gaussian:s=2,pearson7:p=40,nu=2,kotz:T=2")
    assert gs == [gen.Gaussian(s=2.0), gen.PearsonVII(p=40.0, nu=2.0), gen.Kotz(T=2.0)]


@pytest.mark.parametrize("text", ["cauchy:x=1", "gaussian:s", "gaussian:q=1", "pearson7:p=abc"])
def test_parse_generator_errors(text):
    with pytest.raises(ValueError):
        gen.parse_generator(text)


def test_round_trip_dict():
    for g in FAMILY_SAMPLES:
        d = g.to_dict()
        assert gen.parse_generator(g.describe()) == g
        assert d["family"] == g.family
