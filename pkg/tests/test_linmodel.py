import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gfiam.errors import AdmissibilityError, RankDeficiencyError
from gfiam.linmodel import Model, ModelFit, fit_ols, fitted_values, projection_rss


def test_model_normalizes_and_counts():
    m = Model((3, 0, 2), 4)
    assert m.predictors == (0, 2, 3) and m.m == 3 and m.p_star == 12
    assert 2 in m and 1 not in m
    assert m.label() == "{1,3,4}" and m.label(list("abcd")) == "{a,c,d}"
    with pytest.raises(ValueError):
        Model((1, 1), 4)
    with pytest.raises(ValueError):
        Model((-1,), 4)


def test_empty_model(small_design):
    y = small_design.y_centered
    f = fit_ols(small_design, y, Model((), 4))
    assert f.rss == pytest.approx(y @ y) and f.beta_hat.size == 0
    assert projection_rss(f) == pytest.approx(y @ y)
    assert not fitted_values(small_design, f).any()


def test_exact_fit(small_design):
    Z = small_design.values[:, :8]
    y = Z @ np.arange(1.0, 9.0)
    f = fit_ols(small_design, y, Model((0, 1), 4))
    assert f.rss <= 1e-10 * (y @ y)
    assert np.allclose(f.beta_hat, np.arange(1.0, 9.0))


def test_beta_matches_normal_equations():
    rng = np.random.default_rng(0)
    Z = rng.standard_normal((20, 6))
    y = rng.standard_normal(20)
    f = fit_ols(Z, y, Model((0, 1, 2), 2))
    oracle = np.linalg.solve(Z.T @ Z, Z.T @ y)
    assert np.abs(f.beta_hat - oracle).max() <= 1e-8


def test_rss_matches_explicit_hat_matrix():
    rng = np.random.default_rng(1)
    Z = rng.standard_normal((15, 6))
    y = rng.standard_normal(15)
    f = fit_ols(Z, y, Model((0, 2), 2))
    Zm = Z[:, [0, 1, 4, 5]]
    H = Zm @ np.linalg.inv(Zm.T @ Zm) @ Zm.T
    r = y - H @ y
    assert abs(projection_rss(f) - r @ r) <= 1e-9


def test_gram_factor(small_design):
    f = fit_ols(small_design, small_design.y_centered, Model((1, 3), 4))
    Zm = small_design.values[:, small_design.columns((1, 3))]
    assert np.allclose(f.gram_factor.T @ f.gram_factor, Zm.T @ Zm)
    assert np.allclose(np.tril(f.gram_factor, -1), 0)


def test_inadmissible_and_rank_deficient():
    rng = np.random.default_rng(2)
    with pytest.raises(AdmissibilityError):
        fit_ols(rng.standard_normal((10, 8)), rng.standard_normal(10), Model((0, 1), 4))
    Z = rng.standard_normal((30, 4))
    Z[:, 3] = Z[:, 0] + Z[:, 1]
    with pytest.raises(RankDeficiencyError):
        fit_ols(Z, rng.standard_normal(30), Model((0, 1), 2))


def test_fit_dict_round_trip(small_design):
    f = fit_ols(small_design, small_design.y_centered, Model((0, 2), 4))
    g = ModelFit.from_dict(f.to_dict(), 4)
    assert g.model == f.model and g.rss == f.rss
    assert np.array_equal(g.beta_hat, f.beta_hat) and np.array_equal(g.gram_factor, f.gram_factor)


@given(st.integers(0, 10**6))
@settings(max_examples=100, deadline=None)
def test_rss_monotone_under_nesting(seed):
    rng = np.random.default_rng(seed)
    p, h = 6, 3
    Z = rng.standard_normal((40, p * h))
    y = rng.standard_normal(40)
    big = tuple(sorted(rng.choice(p, size=rng.integers(1, p + 1), replace=False)))
    small = tuple(j for j in big if rng.uniform() < 0.5)
    r_small = fit_ols(Z, y, Model(small, h)).rss
    r_big = fit_ols(Z, y, Model(big, h)).rss
    assert r_big <= r_small * (1 + 1e-12) + 1e-12
