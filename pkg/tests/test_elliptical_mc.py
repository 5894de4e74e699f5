import math

import numpy as np
import pytest
from scipy import integrate, stats

from ellbinom import generators as gen
from ellbinom.elliptical_mc import (EllipticalModel, Theorem2Config, beta_moment_reference,
                                    beta_statistics, haar_sample, radial_sampler, sample_elliptical,
                                    verify_theorem2, wishart_pair, wishart_pairs)
from ellbinom.errors import DivergenceError, DomainError


def rng(seed=0):
    return np.random.default_rng(seed)


def radial_r2_moment_oracle(g, dim):
    """E r^2 = M(dim/2 + 1) / M(dim/2) by direct quadrature of h."""
    num, _ = integrate.quad(lambda y: g.h(y) * y ** (dim / 2), 0, np.inf, limit=400)
    den, _ = integrate.quad(lambda y: g.h(y) * y ** (dim / 2 - 1), 0, np.inf, limit=400)
    return num / den


# -- radial law and model ---------------------------------------------------


def test_radial_chi3_mean():
    r = radial_sampler(gen.Gaussian(s=2.0), 3, rng(1), 200_000)
    ref = math.sqrt(2) * math.gamma(2) / math.gamma(1.5)
    assert abs(r.mean() - ref) < 3 * r.std() / math.sqrt(r.size)


def test_radial_dim1_is_half_normal():
    r = radial_sampler(gen.Gaussian(s=2.0), 1, rng(2), 20_000)
    assert stats.kstest(r, stats.halfnorm.cdf).pvalue > 0.01


@pytest.mark.parametrize("g,dim", [(gen.PearsonVII(p=20.0, nu=2.0), 12), (gen.Kotz(T=2.0, r=0.5), 6)],
                         ids=["pearson", "kotz"])
def test_radial_second_moment(g, dim):
    r2 = radial_sampler(g, dim, rng(3), 200_000) ** 2
    ref = radial_r2_moment_oracle(g, dim)
    assert abs(r2.mean() - ref) < 3 * r2.std() / math.sqrt(r2.size)


def test_inverse_cdf_radial_matches_exact():
    g = gen.PearsonVII(p=15.0, nu=1.0)
    a = radial_sampler(g, 8, rng(4), 20_000, method="exact")
    b = radial_sampler(g, 8, rng(5), 20_000, method="inverse_cdf")
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_radial_rejects_non_integrable():
    with pytest.raises(DivergenceError):
        radial_sampler(gen.PearsonVII(p=3.0), 6, rng())


def test_gaussian_model_moments():
    model = EllipticalModel(5, 3, 1, gen.Gaussian(s=2.0))
    X = sample_elliptical(model, rng(6), 40_000)
    assert X.shape == (40_000, 5, 3)
    se = X.std(axis=0) / math.sqrt(X.shape[0])
    assert np.all(np.abs(X.mean(axis=0)) < 4 * se)
    fro2 = np.sum(X**2, axis=(1, 2))
    ref = radial_r2_moment_oracle(gen.Gaussian(s=2.0), 15)
    assert abs(fro2.mean() - ref) < 3 * fro2.std() / math.sqrt(fro2.size)
    # standard matrix normal: entries N(0, 1)
    assert stats.kstest(X[:, 0, 0], "norm").pvalue > 0.01


def test_scalar_pearson_is_student_type():
    g = gen.PearsonVII(p=3.0, nu=2.0)
    x = sample_elliptical(EllipticalModel(1, 1, 1, g), rng(7), 4000)[:, 0, 0]
    Z, _ = integrate.quad(lambda t: g.h(t * t), -np.inf, np.inf)

    def cdf(v):
        val, _ = integrate.quad(lambda t: g.h(t * t), -np.inf, v)
        return val / Z

    assert stats.kstest(x, np.vectorize(cdf)).pvalue > 0.01


def test_location_shift():
    mu = np.array([[1.0, -2.0], [0.5, 3.0], [0.0, 0.2]])
    model = EllipticalModel(3, 2, 2, gen.Kotz(T=2.0), mu=mu)
    X = sample_elliptical(model, rng(8), 30_000)
    se_re = X.real.std(axis=0) / math.sqrt(X.shape[0])
    se_im = X.imag.std(axis=0) / math.sqrt(X.shape[0])
    assert np.all(np.abs(X.mean(axis=0).real - mu) < 4 * se_re)
    assert np.all(np.abs(X.mean(axis=0).imag) < 4 * se_im)
    assert np.iscomplexobj(X)


@pytest.mark.parametrize("kw", [
    dict(beta=4), dict(beta=8),
    dict(Sigma=np.array([[1.0, 2.0], [2.0, 1.0]])),
    dict(Sigma=np.array([[1.0, 0.5], [0.0, 1.0]])),
    dict(Theta=np.eye(2)),
    dict(mu=np.zeros((2, 2))),
    dict(generator=gen.PearsonVII(p=2.5)),
])
def test_model_validation(kw):
    base = dict(n=3, m=2, beta=1, generator=gen.Gaussian())
    base.update(kw)
    with pytest.raises(DomainError):
        EllipticalModel(**base)


# -- Haar -------------------------------------------------------------------


@pytest.mark.parametrize("beta", [1, 2])
def test_haar_is_unitary(beta):
    H = haar_sample(beta, 4, rng(9), 500)
    eye = np.eye(4)
    assert np.max(np.abs(np.conj(np.swapaxes(H, -1, -2)) @ H - eye)) < 1e-12


def test_haar_first_entry_arcsine():
    h11 = haar_sample(1, 2, rng(10), 20_000)[:, 0, 0]
    brute = np.cos(rng(11).uniform(0, 2 * np.pi, 20_000))
    assert stats.ks_2samp(h11, brute).pvalue > 0.01


@pytest.mark.parametrize("beta", [1, 2])
def test_haar_trace_mean_zero(beta):
    A = np.arange(9.0).reshape(3, 3) / 4
    t = np.trace(A @ haar_sample(beta, 3, rng(12), 40_000), axis1=-2, axis2=-1).real
    assert abs(t.mean()) < 3 * t.std() / math.sqrt(t.size)


# -- Wishart pairs and beta statistics ------------------------------------


def test_gaussian_wishart_mean():
    S = np.array([[2.0, 0.6], [0.6, 1.0]])
    model = EllipticalModel(9, 2, 1, gen.Gaussian(s=2.0), Sigma=S)
    W1, W2 = wishart_pairs(model, 4, rng(13), 40_000)
    for W, n in ((W1, 4), (W2, 5)):
        se = W.std(axis=0) / math.sqrt(W.shape[0])
        assert np.all(np.abs(W.mean(axis=0) - n * S) < 3 * se)
    assert np.all(np.linalg.eigvalsh(W1)[:, 0] > 0) and np.all(np.linalg.eigvalsh(W2)[:, 0] > 0)


def test_wishart_blocks_are_dependent_for_non_gaussian():
    # the blocks share one radial draw, so tr W1 and tr W2 correlate
    model = EllipticalModel(8, 1, 1, gen.PearsonVII(p=6.0, nu=1.0))
    W1, W2 = wishart_pairs(model, 4, rng(14), 50_000)
    rho = stats.spearmanr(W1[:, 0, 0], W2[:, 0, 0]).statistic
    assert rho > 0.1


def test_m1_ratio_is_beta():
    model = EllipticalModel(10, 1, 1, gen.PearsonVII(p=15.0, nu=2.0))
    W1, W2 = wishart_pairs(model, 4, rng(15), 20_000)
    u = (W1 / (W1 + W2))[:, 0, 0]
    assert stats.kstest(u, stats.beta(2, 3).cdf).pvalue > 0.01


def test_wishart_pair_single_and_rank_check():
    model = EllipticalModel(5, 2, 2, gen.Gaussian())
    p = wishart_pair(model, 2, rng(16))
    assert p.W1.shape == (2, 2) and p.n2 == 3
    np.testing.assert_allclose(p.W1, p.W1.conj().T)
    with pytest.raises(DomainError):
        wishart_pair(model, 1, rng())


def test_beta_statistics_identities():
    W = np.array([[2.0, 0.3], [0.3, 1.0]])
    bs = beta_statistics(W, W)
    np.testing.assert_allclose(bs.F, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(bs.U, np.eye(2) / 2, atol=1e-14)
    model = EllipticalModel(9, 3, 2, gen.Kotz(T=2.0))
    W1, W2 = wishart_pairs(model, 4, rng(17), 1000)
    bs = beta_statistics(W1, W2)
    u = np.linalg.eigvalsh(bs.U)
    assert np.all((u > 0) & (u < 1))
    ef = np.linalg.eigvalsh(bs.F)
    eg = np.sort(np.linalg.eigvals(bs.G).real, axis=-1)
    assert np.max(np.abs(ef - eg) / ef) < 1e-10
    np.testing.assert_allclose(bs.U, np.conj(np.swapaxes(bs.U, -1, -2)))


def test_ill_conditioned_flag():
    W2 = np.diag([1.0, 1e-13])
    assert beta_statistics(np.eye(2), W2).ill_conditioned


def test_u_spectrum_is_sigma_invariant_per_draw():
    S = np.array([[3.0, 1.0], [1.0, 0.5]])
    root = np.linalg.cholesky(S).T
    X = sample_elliptical(EllipticalModel(7, 2, 1, gen.Gaussian()), rng(18), 200)
    u0 = np.linalg.eigvalsh(beta_statistics(*_split(X, 3)).U)
    u1 = np.linalg.eigvalsh(beta_statistics(*_split(X @ root, 3)).U)
    np.testing.assert_allclose(u0, u1, atol=1e-10)


def _split(X, n1):
    A, B = X[:, :n1], X[:, n1:]
    return np.swapaxes(A, -1, -2) @ A, np.swapaxes(B, -1, -2) @ B


def test_beta_moment_reference_examples():
    assert beta_moment_reference(1, 1, 4, 6, 1.0) == pytest.approx(0.4, rel=1e-13)
    assert beta_moment_reference(2, 2, 6, 8, 0.0) == pytest.approx(1.0, rel=1e-13)
    # real m = 2: |U| is a product of independent Beta(3, 4) and Beta(2.5, 4)
    assert beta_moment_reference(1, 2, 6, 8, 1.0) == pytest.approx(3 / 7 * 2.5 / 6.5, rel=1e-13)
    with pytest.raises(DomainError):
        beta_moment_reference(2, 3, 2, 8, 1.0)


# -- Theorem 2 harness -------------------------------------------------------


def test_verify_theorem2_spec_example_m1():
    cfg = Theorem2Config(beta=1, m=1, n1=4, n2=6, N=100_000, seed=42, sigma_check=False)
    reps = verify_theorem2(cfg, [gen.Gaussian(s=2.0), gen.PearsonVII(p=40.0, nu=2.0)])
    ks = [r for r in reps if r.kind == "ks"]
    assert len(ks) == 2 and all(r.passed for r in ks)
    assert all(r.seed == 42 for r in reps)
    assert all(r.N == 100_000 for r in reps if r.kind != "spectral")


def test_verify_theorem2_m2_beta2_moment():
    cfg = Theorem2Config(beta=2, m=2, n1=6, n2=8, N=50_000, seed=42, sigma_check=False)
    reps = verify_theorem2(cfg, [gen.Gaussian(s=2.0)])
    r = next(r for r in reps if r.statistic == "E|U|")
    assert r.reference == pytest.approx(beta_moment_reference(2, 2, 6, 8, 1.0))
    assert r.passed


def test_reports_reproducible_and_thread_independent():
    gs = [gen.Gaussian(), gen.Kotz(T=2.0)]
    a = verify_theorem2(Theorem2Config(beta=2, m=2, N=20_000, seed=5, chunk=3000, threads=1), gs)
    b = verify_theorem2(Theorem2Config(beta=2, m=2, N=20_000, seed=5, chunk=3000, threads=3), gs)
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]
    c = verify_theorem2(Theorem2Config(beta=2, m=2, N=20_000, seed=6, chunk=3000), gs)
    assert [r.estimate for r in a] != [r.estimate for r in c]


def test_report_contents():
    raw = {}
    reps = verify_theorem2(Theorem2Config(beta=1, m=2, N=10_000, seed=1), [gen.Gaussian(), gen.Kotz(T=2.0)], raw)
    kinds = {r.kind for r in reps}
    assert kinds == {"moment", "symmetrization", "spectral", "sigma-invariance", "cross-generator"}
    assert sum(r.kind == "cross-generator" for r in reps) == 4
    assert set(raw) == {"0:gaussian:s=2.0,c=1.0", "1:kotz:T=2.0,r=1.0,c=1.0",
                        "0:gaussian:s=2.0,c=1.0|sigma", "1:kotz:T=2.0,r=1.0,c=1.0|sigma"}
    assert all(v["det"].size == 10_000 for v in raw.values())


def test_ks_pvalues_are_calibrated_across_seeds():
    # under the invariance claim the cross-generator KS p-values are uniform
    gs = [gen.Gaussian(s=2.0), gen.PearsonVII(p=24.0, nu=2.0)]
    pv = []
    for seed in range(40):
        cfg = Theorem2Config(beta=1, m=2, n1=6, n2=8, N=10_000, seed=1000 + seed, sigma_check=False,
                             eig_draws=0)
        pv += [r.p_value for r in verify_theorem2(cfg, gs) if r.kind == "cross-generator" and r.p_value]
    assert len(pv) == 120
    assert stats.kstest(pv, "uniform").pvalue > 0.001


@pytest.mark.parametrize("kw", [dict(N=100), dict(beta=4), dict(m=3, n1=2, n2=8), dict(m=2, n1=1, n2=3)])
def test_config_validation(kw):
    with pytest.raises(DomainError):
        Theorem2Config(**kw)
