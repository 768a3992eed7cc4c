import numpy as np
import pytest
from scipy import stats as sps

from gfiam.fiducial import FiducialSample, ModelProbability, PenaltyConfig, model_probabilities, sample_fiducial
from gfiam.inference import (
    Interval,
    default_grid,
    function_band,
    intervals_from_draws,
    mean_ci,
    mean_draws,
    model_summary,
    prediction_draws,
    prediction_interval,
    sigma2_interval,
    sigma_summary,
)
from gfiam.linmodel import Model, fit_ols, fitted_values
from gfiam.splines import eval_basis_matrix
from gfiam.stats import RngStream

from conftest import make_dataset


def fixed_sample(model, beta, sigma, count=20):
    return FiducialSample([model], np.zeros(count, dtype=int), np.full(count, sigma), [np.asarray(beta)] * count)


def test_interval_basics():
    iv = Interval(1.0, 3.0, 0.9)
    assert iv.width == 2.0 and 2.0 in iv and 4.0 not in iv
    with pytest.raises(ValueError):
        Interval(2.0, 1.0, 0.9)


def test_sigma_summary_constant_draws():
    s = fixed_sample(Model((), 4), np.zeros(0), 1.7)
    point, iv = sigma_summary(s, 0.95)
    assert point == 1.7 and (iv.lower, iv.upper) == (1.7, 1.7)


def test_sigma2_interval_matches_analytic_quantiles():
    rss, df = 30.0, 25
    m = Model((), 4)
    chi = RngStream(1).generator.chisquare(df, 200000)
    s = FiducialSample([m], np.zeros(chi.size, dtype=int), np.sqrt(rss / chi), [np.zeros(0)] * chi.size)
    iv = sigma2_interval(s, 0.95)
    assert iv.lower == pytest.approx(rss / sps.chi2.ppf(0.975, df), rel=0.01)
    assert iv.upper == pytest.approx(rss / sps.chi2.ppf(0.025, df), rel=0.01)
    with pytest.raises(ValueError):
        sigma2_interval(s, 1.0)


def test_band_zero_for_unselected_predictor(small_design):
    d = small_design
    s = fixed_sample(Model((0,), 4), np.ones(4), 1.0)
    band = function_band(s, 2, default_grid(d.bases[2], 30), d.bases, d.column_means, 0.95)
    assert not band.lower.any() and not band.upper.any()


def test_band_collapses_for_single_draw(small_design):
    d = small_design
    beta = np.array([1.0, -2.0, 0.5, 3.0])
    s = fixed_sample(Model((1,), 4), beta, 1.0, count=1)
    grid = default_grid(d.bases[1], 25)
    band = function_band(s, 1, grid, d.bases, d.column_means, 0.9)
    curve = (eval_basis_matrix(d.bases[1], grid)[:, 1:] - d.column_means[4:8]) @ beta
    assert np.allclose(band.lower, curve) and np.allclose(band.upper, curve) and np.allclose(band.median, curve)


def test_mean_ci_degenerate_and_matches_ols(small_design):
    d = small_design
    f = fit_ols(d, d.y_centered, Model((0, 1), 4))
    s = fixed_sample(f.model, f.beta_hat, 0.5)
    iv = mean_ci(s, [0.3, 0.6, 0.2, 0.9], d.bases, d.column_means, d.response_mean, 0.95)
    assert iv.lower == iv.upper
    md = mean_draws(s, np.linspace(0.1, 0.9, 8).reshape(2, 4), d.bases, d.column_means, d.response_mean)
    assert md.shape == (20, 2) and np.all(md == md[0])


def test_mean_at_training_row_near_dominant_fit(small_design):
    data = make_dataset()
    d = small_design
    fits = {f.model: f for f in (fit_ols(d, d.y_centered, Model(s, 4)) for s in [(), (0,), (0, 1), (0, 1, 2)])}
    probs = model_probabilities(fits, PenaltyConfig(0.05))
    s = sample_fiducial(probs, fits, 20000, RngStream(5))
    top = probs[0].model
    ols = d.response_mean + fitted_values(d, fits[top])
    for i in (0, 10, 33):
        iv = mean_ci(s, data.X[i], d.bases, d.column_means, d.response_mean, 0.95)
        assert ols[i] in iv
        assert abs(0.5 * (iv.lower + iv.upper) - ols[i]) <= 0.25 * iv.width


def test_prediction_equals_mean_when_sigma_zero(small_design):
    d = small_design
    s = FiducialSample([Model((0,), 4)], np.zeros(50, dtype=int), np.zeros(50),
                       [np.random.default_rng(k).standard_normal(4) for k in range(50)])
    x = np.array([0.4, 0.5, 0.6, 0.7])
    a = mean_ci(s, x, d.bases, d.column_means, d.response_mean, 0.9)
    b = prediction_interval(s, x, d.bases, d.column_means, d.response_mean, 0.9, RngStream(0))
    assert (a.lower, a.upper) == (b.lower, b.upper)


def test_prediction_wider_than_mean(small_design):
    d = small_design
    fits = {f.model: f for f in (fit_ols(d, d.y_centered, Model(s, 4)) for s in [(0,), (0, 1)])}
    probs = model_probabilities(fits, PenaltyConfig(0.05))
    s = sample_fiducial(probs, fits, 5000, RngStream(6))
    X = np.random.default_rng(0).uniform(size=(20, 4))
    mu = mean_draws(s, X, d.bases, d.column_means, d.response_mean)
    pr = prediction_draws(s, X, d.bases, d.column_means, d.response_mean, RngStream(7))
    wm = np.array([iv.width for iv in intervals_from_draws(mu, 0.95)])
    wp = np.array([iv.width for iv in intervals_from_draws(pr, 0.95)])
    assert np.all(wp > wm)


def test_model_summary_order_and_ties():
    probs = [ModelProbability(Model((2,), 4), -1.0, 0.25), ModelProbability(Model((1,), 4), -1.0, 0.25),
             ModelProbability(Model((0, 1), 4), 0.0, 0.5)]
    rows = model_summary(probs, top_k=2, names=["a", "b", "c"])
    assert [r.predictors for r in rows] == [(0, 1), (1,)]
    assert rows[0].names == ("a", "b") and rows[0].rank == 1
    single = model_summary([ModelProbability(Model((), 4), 0.0, 1.0)])
    assert len(single) == 1 and single[0].prob == 1.0
