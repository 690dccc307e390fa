import numpy as np
import pytest
from scipy import stats

from mullkit.data import Task
from mullkit.simulate import (SUPPORT_SIZE, SchemeKind, SchemeSpec, add_noise,
                              ar_covariance, cholesky, gen_scheme,
                              replicate_rng, scheme1_covariance, t2_cdf,
                              t2_quantile, true_coefficients)


def test_cholesky_identity_and_diagonal():
    assert np.array_equal(cholesky(np.eye(3)), np.eye(3))
    assert np.allclose(cholesky(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


def test_cholesky_ar_multiplies_back():
    sigma = ar_covariance(5, 0.4)
    L = cholesky(sigma)
    assert np.max(np.abs(L @ L.T - sigma)) <= 1e-12
    assert np.allclose(np.triu(L, 1), 0.0)


def test_cholesky_rejects_non_spd():
    with pytest.raises(ValueError, match="positive definite"):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValueError, match="symmetric"):
        cholesky(np.array([[1.0, 0.5], [0.2, 1.0]]))


def test_scheme1_bayes_error():
    spec = SchemeSpec(SchemeKind.S1, n=100_000, p=10, sigma_u=0.0, seed=7)
    rep = gen_scheme(spec)
    pred = (rep.x @ rep.truth.beta > 0).astype(float)
    err = float(np.mean(pred != rep.y))
    assert err == pytest.approx(0.063, abs=0.005)


def test_scheme1_closed_form_bayes_error():
    # Phi(-mu'beta / sqrt(beta' Sigma beta)) should sit at 6.3%
    sigma5 = scheme1_covariance(10)[:5, :5]
    beta5 = true_coefficients(SchemeSpec(SchemeKind.S1, n=10, p=10)).beta[:5]
    mu5 = np.array([0.1, 0.2, 0.3, 0.4, 0.5])
    margin = mu5 @ beta5 / np.sqrt(beta5 @ sigma5 @ beta5)
    assert stats.norm.cdf(-margin) == pytest.approx(0.063, abs=0.0005)


def test_scheme1_label_balance():
    spec = SchemeSpec(SchemeKind.S1, n=100_000, p=8, seed=11)
    rep = gen_scheme(spec)
    assert float(np.mean(rep.y)) == pytest.approx(0.5, abs=0.01)


def test_scheme2_covariance_corner():
    spec = SchemeSpec(SchemeKind.S2, n=100_000, p=10, seed=13)
    rep = gen_scheme(spec)
    emp = np.cov(rep.x, rowvar=False)
    assert np.max(np.abs(emp - ar_covariance(10, 0.4))) <= 0.02


def test_scheme2_link_is_t2_cdf():
    grid = np.linspace(-10, 10, 101)
    assert np.max(np.abs(t2_cdf(grid) - stats.t.cdf(grid, df=2))) <= 1e-12


def test_t2_quantile_matches_scipy():
    for tau in (0.05, 0.1, 0.5, 0.9, 0.95):
        assert t2_quantile(tau) == pytest.approx(stats.t.ppf(tau, df=2), rel=1e-12)


def test_scheme3_link_at_zero():
    spec = SchemeSpec(SchemeKind.S3, n=200_000, p=10, seed=17)
    rep = gen_scheme(spec)
    t = rep.x @ rep.truth.beta
    near = np.abs(t) < 0.1
    assert near.sum() > 2000
    assert float(np.mean(rep.y[near])) == pytest.approx(0.5, abs=0.03)


def test_quantile_scheme_conditional_quantile():
    # at the tau-quantile the residual y - 1.5 - x'beta has quantile 0
    # (exactly, at the x1 = 0 slice where the heteroscedastic factor is 1)
    spec = SchemeSpec(SchemeKind.QUANTILE_HET, n=300_000, p=8, tau=0.5,
                      noise_dist="normal", seed=19)
    rep = gen_scheme(spec)
    resid = rep.y - 1.5 - rep.x @ rep.truth.beta
    near = np.abs(rep.x[:, 0]) < 0.25
    assert near.sum() > 30_000
    assert float(np.median(resid[near])) == pytest.approx(0.0, abs=0.02)


def test_quantile_scheme_tau_quantile_t2():
    spec = SchemeSpec(SchemeKind.QUANTILE_HET, n=300_000, p=8, tau=0.1,
                      noise_dist="t2", seed=23)
    rep = gen_scheme(spec)
    resid = rep.y - 1.5 - rep.x @ rep.truth.beta
    near = np.abs(rep.x[:, 0]) < 0.25
    q10 = float(np.quantile(resid[near], 0.1))
    assert q10 == pytest.approx(0.0, abs=0.04)


def test_quantile_truth_has_intercept():
    spec = SchemeSpec(SchemeKind.QUANTILE_HET, n=10, p=6, tau=0.3, seed=1)
    rep = gen_scheme(spec)
    assert rep.truth.intercept == 1.5
    assert np.allclose(rep.truth.beta[:5], 1.5)
    assert rep.dataset().task == Task.QUANTILE
    assert gen_scheme(SchemeSpec(SchemeKind.S2, n=10, p=6)).truth.intercept is None


def test_true_support_is_first_five():
    for kind in SchemeKind:
        spec = SchemeSpec(kind, n=10, p=9, tau=0.5)
        beta = true_coefficients(spec).beta
        assert np.all(beta[:SUPPORT_SIZE] != 0)
        assert np.all(beta[SUPPORT_SIZE:] == 0)


def test_add_noise_zero_sigma_is_exact():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(20, 4))
    w = add_noise(x, 0.0, 99)
    assert np.array_equal(w, x)


def test_add_noise_variance():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(1000, 100))
    w = add_noise(x, 0.5, 42)
    u = (w - x).ravel()
    assert float(np.var(u)) == pytest.approx(0.25, abs=0.01)
    assert abs(float(np.mean(u))) <= 0.01


def test_noise_column_variance_within_3se():
    spec = SchemeSpec(SchemeKind.S3, n=4000, p=6, sigma_u=0.3, seed=5)
    rep = gen_scheme(spec)
    u = rep.w - rep.x
    var = np.var(u, axis=0)
    se = 0.09 * np.sqrt(2.0 / (spec.n - 1))
    assert np.all(np.abs(var - 0.09) <= 3 * se)


def test_determinism_and_stream_separation():
    spec = SchemeSpec(SchemeKind.S2, n=50, p=8, sigma_u=0.3, seed=123)
    a = gen_scheme(spec, stream_key=(4, 0))
    b = gen_scheme(spec, stream_key=(4, 0))
    c = gen_scheme(spec, stream_key=(4, 1))
    assert np.array_equal(a.w, b.w) and np.array_equal(a.y, b.y)
    assert not np.array_equal(a.w, c.w)
    r1 = replicate_rng(0, (1,)).standard_normal(4)
    r2 = replicate_rng(0, (2,)).standard_normal(4)
    assert not np.array_equal(r1, r2)


def test_spec_validation():
    with pytest.raises(ValueError):
        SchemeSpec(SchemeKind.S1, n=1, p=10)
    with pytest.raises(ValueError):
        SchemeSpec(SchemeKind.S1, n=10, p=3)
    with pytest.raises(ValueError):
        SchemeSpec(SchemeKind.S1, n=10, p=10, sigma_u=-0.1)
    with pytest.raises(ValueError):
        SchemeSpec(SchemeKind.QUANTILE_HET, n=10, p=10)   # tau missing
    with pytest.raises(ValueError):
        SchemeSpec(SchemeKind.QUANTILE_HET, n=10, p=10, tau=0.5,
                   noise_dist="cauchy")
