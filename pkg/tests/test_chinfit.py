import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bodycomp.chinfit import ChinFitError, denormalize_points, fit_polynomial, normalize_points
from bodycomp.preprocess import BBox


def normal_equation_oracle(u, v, degree):
    X = np.vander(u, degree + 1, increasing=True)
    return np.linalg.inv(X.T @ X) @ X.T @ v


def test_bbox_centre_maps_to_zero_half():
    uv = normalize_points([(150.0, 200.0)], BBox(100, 100, 100, 200))
    assert uv.tolist() == [[0.0, 0.5]]


def test_bbox_corner_maps_to_minus_one_zero():
    uv = normalize_points([(100.0, 100.0)], (100, 100, 100, 200))
    assert uv.tolist() == [[-1.0, 0.0]]


def test_degenerate_bbox():
    with pytest.raises(ChinFitError):
        normalize_points([(0, 0)] * 3, (0, 0, 0, 10))


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=3, max_size=20),
    st.integers(-500, 500),
    st.integers(-500, 500),
    st.integers(1, 400),
    st.integers(1, 400),
)
def test_normalize_inverse(points, x, y, w, h):
    box = (x, y, w, h)
    back = denormalize_points(normalize_points(points, box), box)
    assert np.allclose(back, np.asarray(points), rtol=0, atol=1e-12 * (1 + np.abs(points).max()))


def test_exact_line():
    u = np.linspace(-1, 1, 5)
    fit = fit_polynomial(np.column_stack([u, 3 + 2 * u]), 1)
    assert np.allclose(fit.coefficients, [3, 2], atol=1e-12)
    assert fit.rmse <= 1e-10


def test_exact_parabola_seven_points():
    u = np.linspace(-0.9, 0.9, 7)
    fit = fit_polynomial(np.column_stack([u, 1 - 0.5 * u**2]), 2)
    assert np.max(np.abs(np.array(fit.coefficients) - [1, 0, -0.5])) <= 1e-10


def test_noisy_fit_matches_normal_equations():
    rng = np.random.default_rng(0)
    u = rng.uniform(-1, 1, 50)
    v = 0.9 - 0.4 * u**2 + 0.05 * u + rng.normal(0, 0.02, 50)
    fit = fit_polynomial(np.column_stack([u, v]), 2)
    assert np.max(np.abs(np.array(fit.coefficients) - normal_equation_oracle(u, v, 2))) <= 1e-8


def test_rank_deficient_raises():
    with pytest.raises(ChinFitError):
        fit_polynomial([(0.5, 1.0), (0.5, 2.0), (0.5, 3.0)], 2)


def test_too_few_points_and_bad_degree():
    with pytest.raises(ChinFitError):
        fit_polynomial([(0, 0), (1, 1)], 2)
    with pytest.raises(ChinFitError):
        fit_polynomial([(i, i) for i in range(10)], 5)
    with pytest.raises(ChinFitError):
        fit_polynomial([(i, i) for i in range(10)], 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 4), st.integers(0, 10**6))
def test_exact_recovery_when_degree_suffices(true_degree, extra, seed):
    degree = min(true_degree + extra, 4)
    rng = np.random.default_rng(seed)
    coef = rng.uniform(-2, 2, true_degree + 1)
    u = np.linspace(-1, 1, 15)
    v = np.polynomial.polynomial.polyval(u, coef)
    fit = fit_polynomial(np.column_stack([u, v]), degree)
    want = np.concatenate([coef, np.zeros(degree - true_degree)])
    assert np.max(np.abs(np.array(fit.coefficients) - want)) <= 1e-9
    assert fit.rmse <= 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    pts = np.column_stack([rng.uniform(-1, 1, 12), rng.uniform(0, 1, 12)])
    a = fit_polynomial(pts, 2)
    b = fit_polynomial(pts[rng.permutation(12)], 2)
    assert np.max(np.abs(np.array(a.coefficients) - b.coefficients)) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_rmse_non_increasing_in_degree(seed):
    rng = np.random.default_rng(seed)
    pts = np.column_stack([rng.uniform(-1, 1, 20), rng.uniform(0, 1, 20)])
    rmses = [fit_polynomial(pts, d).rmse for d in range(1, 5)]
    assert all(b <= a + 1e-12 for a, b in zip(rmses, rmses[1:]))


def test_coefficient_count():
    pts = np.column_stack([np.linspace(-1, 1, 9), np.linspace(0, 1, 9)])
    for d in range(1, 5):
        fit = fit_polynomial(pts, d)
        assert len(fit.coefficients) == d + 1
        assert fit.rmse >= 0
