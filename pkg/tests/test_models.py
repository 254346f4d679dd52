import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from sheref import MODEL_1, MODEL_2, History, IidMeanShift, LogNormalLaw, ModelSpec, PointMassLaw, SharedFactor
from sheref.errors import ConfigError, MissingHistory, SupportViolation
from sheref.models import EmpiricalLaw, WithinSensorAR, banded_noise, law_from_params


def gaussian_llr(x, m0, m1, var):
    # independent oracle: difference of scipy log densities
    sd = np.sqrt(var)
    return stats.norm.logpdf(x, m1, sd) - stats.norm.logpdf(x, m0, sd)


def test_symmetry_point_gives_unit_lr():
    m = IidMeanShift(3.0, 1.0)
    assert m.log_likelihood_ratio(1, 1, 1.5, History.empty(1)) == pytest.approx(0.0, abs=1e-15)


def test_llr_at_zero():
    m = IidMeanShift(3.0, 1.0)
    got = m.log_likelihood_ratio(1, 1, 0.0, History.empty(1))
    assert got == pytest.approx(-4.5, abs=1e-12)
    assert got == pytest.approx(gaussian_llr(0.0, 0.0, 3.0, 1.0), abs=1e-12)


@given(st.floats(-20, 20), st.floats(-5, 5), st.floats(0.1, 5), st.floats(0.0, 0.99))
def test_shared_factor_llr_matches_density_ratio(x, mu, sigma, a):
    m = SharedFactor([a], mu, 1.0, sigma)
    got = m.log_likelihood_ratio(1, 1, x, History.empty(1))
    assert got == pytest.approx(gaussian_llr(x, 0.0, mu, a * a + sigma * sigma), rel=1e-9, abs=1e-9)


def test_nonfinite_observation():
    with pytest.raises(SupportViolation):
        IidMeanShift(3.0, 1.0).log_likelihood_ratio(1, 1, np.nan, History.empty(1))


def test_ar_newly_active_sensor_has_unit_lr():
    m = WithinSensorAR(-0.8, 0.8, 5, noise_rho=-0.8)
    h = History.from_tick(5, 1, [1, 2], [0.3, -1.0])
    # sensor 3 was not active at t=1
    for x in (-4.0, 0.0, 2.5):
        assert m.log_likelihood_ratio(3, 2, x, h) == 0.0
    assert m.null_lr_law(3, 2, h) == PointMassLaw(1.0)


def test_ar_conditional_uses_lag():
    m = WithinSensorAR(-0.8, 0.8, 5)
    h = History.from_tick(5, 1, [1], [2.0])
    assert m.log_likelihood_ratio(1, 2, 0.7, h) == pytest.approx(gaussian_llr(0.7, -1.6, 1.6, 1.0))


def test_missing_history_observation():
    h = History.from_tick(3, 1, [1], [1.0])
    h.obs[1] = np.nan
    with pytest.raises(MissingHistory):
        h.lagged(np.array([1]))


def test_degenerate_noise_limit():
    m = IidMeanShift(3.0, 1e-8)
    rng = np.random.default_rng(0)
    h = History.empty(1)
    assert m.sample_observation(1, 1, "pre", h, rng) == pytest.approx(0.0, abs=1e-4)
    assert m.sample_observation(1, 1, "post", h, rng) == pytest.approx(3.0, abs=1e-4)
    with pytest.raises(ValueError):
        m.sample_observation(1, 1, "during", h, rng)


def test_model1_marginal_variance():
    a = 0.4
    m = SharedFactor(np.full(1, a), 3.0)
    rng = np.random.default_rng(1)
    h = History.empty(1)
    x = np.array([m.sample(np.array([1]), t, np.array([False]), h, rng)[0] for t in range(100_000)])
    se = x.var() * np.sqrt(2 / x.size)
    assert abs(x.var() - (a * a + 1)) < 4 * se


def test_sample_determinism():
    m = MODEL_2.build(50)
    h = History.from_tick(50, 1, np.arange(1, 11), np.linspace(-1, 1, 10))
    ids = np.arange(1, 21)
    post = ids % 2 == 0
    a = m.sample(ids, 2, post, h, np.random.default_rng(5))
    b = m.sample(ids, 2, post, h, np.random.default_rng(5))
    assert np.array_equal(a, b)


N_MC = 1_000_000


def _check_law_by_sampling(model, law, rng):
    # draw x under f0, evaluate log L with the scipy oracle, match moments to 3 SE
    m0, m1, var = model.conditional(np.array([1]), 1, History.empty(1))
    x = m0[0] + np.sqrt(var[0]) * rng.standard_normal(N_MC)
    llr = gaussian_llr(x, m0[0], m1[0], var[0])
    assert abs(llr.mean() - law.m) < 3 * np.sqrt(law.v / N_MC)
    assert abs(llr.var() - law.v) < 3 * law.v * np.sqrt(2 / N_MC)


def test_null_law_iid():
    m = IidMeanShift(3.0, 1.0)
    law = m.null_lr_law(1, 1, History.empty(1))
    assert law.m == pytest.approx(-4.5) and law.v == pytest.approx(9.0)
    _check_law_by_sampling(m, law, np.random.default_rng(2))


def test_null_law_model1_loading_half():
    m = SharedFactor([0.5], 3.0)
    law = m.null_lr_law(1, 1, History.empty(1))
    assert law.m == pytest.approx(-3.6) and law.v == pytest.approx(7.2)
    _check_law_by_sampling(m, law, np.random.default_rng(3))


def test_lognormal_law_unit_mean():
    with pytest.raises(ValueError):
        LogNormalLaw(m=0.0, v=1.0)
    assert law_from_params(-0.5, 1.0) == LogNormalLaw(-0.5, 1.0)
    assert law_from_params(0.0, 0.0) == PointMassLaw(1.0)


def test_empirical_law():
    law = EmpiricalLaw.from_sampler(lambda r, n: np.exp(r.normal(-0.5, 1.0, n)), np.random.default_rng(0), 1000)
    assert law.budget == 1000
    with pytest.raises(ValueError):
        EmpiricalLaw(np.array([1.0, -1.0]))


def test_banded_noise_covariance():
    rng = np.random.default_rng(4)
    draws = np.array([banded_noise(6, -0.8, rng) for _ in range(40_000)])
    cov = np.cov(draws.T)
    i, j = np.indices((6, 6))
    target = (-0.8) ** np.abs(i - j)
    assert np.max(np.abs(cov - target)) < 0.05


def test_model_spec_validation():
    with pytest.raises(ConfigError) as e:
        ModelSpec("unknown")
    assert e.value.key == "model.variant"
    with pytest.raises(ConfigError):
        ModelSpec("shared_factor", loadings=(0.1, 0.2)).build(3)


def test_model1_loadings_in_range():
    m = MODEL_1.build(1000, np.random.default_rng(0))
    assert m.loadings.min() >= 0 and m.loadings.max() <= 0.5
    assert m.loadings.shape == (1000,)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_null_params_consistent_with_conditional(seed):
    rng = np.random.default_rng(seed)
    m = MODEL_2.build(20)
    ids = np.arange(1, 21)
    h = History.from_tick(20, 1, ids[:10], rng.normal(size=10))
    mm, v = m.null_params(ids, 2, h)
    assert np.allclose(mm, -v / 2)
    assert np.all(v[10:] == 0)
