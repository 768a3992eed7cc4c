import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.interpolate import BSpline

from gfiam.errors import CapacityError, DataError, DegenerateCovariateError
from gfiam.splines import (
    CovariateBasis,
    Dataset,
    SplineConfig,
    build_basis,
    build_design,
    eval_basis,
    eval_basis_matrix,
    eval_design_row,
)


def scipy_basis(basis, x):
    """Independent B-spline evaluation through scipy's design matrix."""
    x = np.clip(np.asarray(x, dtype=float), basis.lower, basis.upper)
    return BSpline.design_matrix(x, basis.knots, basis.degree).toarray()


def test_knots_single_midpoint():
    b = build_basis(np.linspace(0, 1, 11), SplineConfig(3, 1))
    assert np.allclose(b.knots, [0, 0, 0, 0, 0.5, 1, 1, 1, 1])
    assert b.h_n == 4


def test_h_n_for_eight_knots():
    b = build_basis(np.linspace(0, 1, 11), SplineConfig(3, 8))
    assert b.h_n == 11 and SplineConfig(3, 8).h_n == 11


def test_interior_knots_equally_spaced():
    b = build_basis(np.array([2.0, 3.3, 6.0]), SplineConfig(2, 3))
    assert np.allclose(b.interior_knots, [3, 4, 5])


def test_config_preconditions():
    with pytest.raises(ValueError):
        SplineConfig(1, 3)
    with pytest.raises(ValueError):
        SplineConfig(3, 0)


def test_constant_covariate_rejected():
    with pytest.raises(DegenerateCovariateError):
        build_basis(np.ones(5), SplineConfig())


@given(st.floats(0, 1))
@settings(max_examples=200, deadline=None)
def test_partition_of_unity(x):
    b = build_basis(np.array([0.0, 1.0]), SplineConfig(3, 6))
    assert abs(eval_basis(b, x).sum() - 1) <= 1e-10


def test_clamped_left_end():
    b = build_basis(np.array([0.0, 1.0]), SplineConfig(3, 4))
    v = eval_basis(b, 0.0)
    assert v[0] == 1.0 and not v[1:].any()
    w = eval_basis(b, 1.0)
    assert w[-1] == pytest.approx(1.0) and np.allclose(w[:-1], 0)


def test_linear_hat_functions_by_hand():
    b = CovariateBasis(np.array([0, 0, 0.5, 1, 1.0]), 1, 0.0, 1.0)
    assert np.allclose(eval_basis(b, 0.25), [0.5, 0.5, 0.0], atol=1e-15)


@pytest.mark.parametrize("degree,K", [(2, 1), (3, 6), (3, 8), (4, 3)])
def test_basis_matches_scipy(degree, K):
    b = build_basis(np.array([-1.0, 2.5]), SplineConfig(degree, K))
    x = np.concatenate([np.random.default_rng(K).uniform(-1, 2.5, 200), [-1.0, 2.5]])
    assert np.allclose(eval_basis_matrix(b, x), scipy_basis(b, x), atol=1e-12)


def test_out_of_range_points_are_clamped():
    b = build_basis(np.array([0.0, 1.0]), SplineConfig())
    assert np.array_equal(eval_basis_matrix(b, [-3.0, 5.0]), eval_basis_matrix(b, [0.0, 1.0]))


def test_design_shape_and_groups():
    rng = np.random.default_rng(0)
    d = build_design(Dataset(rng.standard_normal(5), rng.uniform(size=(5, 2))), SplineConfig(3, 1))
    assert d.values.shape == (5, 8)
    assert list(d.group_index) == [0] * 4 + [1] * 4


def test_design_centered_and_response_mean():
    rng = np.random.default_rng(1)
    d = build_design(Dataset([1.0, 2.0, 3.0], rng.uniform(size=(3, 2))), SplineConfig(2, 1))
    assert d.response_mean == 2.0
    assert np.allclose(d.y_centered, [-1, 0, 1])
    big = build_design(Dataset(rng.standard_normal(300), rng.uniform(size=(300, 7))), SplineConfig())
    assert np.abs(big.values.mean(axis=0)).max() <= 1e-10


def test_design_blocks_full_rank():
    rng = np.random.default_rng(2)
    d = build_design(Dataset(rng.standard_normal(200), rng.uniform(size=(200, 3))), SplineConfig())
    assert np.linalg.matrix_rank(d.values) == d.values.shape[1]


def test_design_row_matches_training_row():
    rng = np.random.default_rng(3)
    data = Dataset(rng.standard_normal(40), rng.uniform(size=(40, 3)))
    d = build_design(data, SplineConfig())
    assert np.array_equal(eval_design_row(d.bases, data.X[7], d.column_means), d.values[7])


def test_design_row_boundary_and_reevaluation():
    rng = np.random.default_rng(4)
    data = Dataset(rng.standard_normal(40), rng.uniform(size=(40, 3)))
    d = build_design(data, SplineConfig(3, 6))
    lows = np.array([b.lower for b in d.bases])
    assert np.all(np.isfinite(eval_design_row(d.bases, lows, d.column_means)))
    x = rng.uniform(size=3)
    oracle = np.concatenate([scipy_basis(b, [x[j]])[0, 1:] for j, b in enumerate(d.bases)]) - d.column_means
    assert np.allclose(eval_design_row(d.bases, x, d.column_means), oracle, atol=1e-12)


def test_design_errors():
    rng = np.random.default_rng(5)
    with pytest.raises(DataError):
        eval_design_row([build_basis(np.array([0.0, 1.0]), SplineConfig())], [0.1, 0.2], np.zeros(9))
    with pytest.raises(CapacityError):
        build_design(Dataset(rng.standard_normal(10), rng.uniform(size=(10, 3))), SplineConfig(), memory_budget=100)
    X = rng.uniform(size=(10, 2))
    X[:, 1] = 0.3
    with pytest.raises(DegenerateCovariateError, match="x2"):
        build_design(Dataset(rng.standard_normal(10), X), SplineConfig())
    with pytest.raises(DataError):
        Dataset(np.zeros(3), np.zeros((4, 2)))


def test_basis_dict_round_trip():
    b = build_basis(np.random.default_rng(6).uniform(size=30), SplineConfig(3, 5))
    c = CovariateBasis.from_dict(b.to_dict())
    assert np.array_equal(b.knots, c.knots) and (b.degree, b.lower, b.upper) == (c.degree, c.lower, c.upper)
