import numpy as np
import pytest

from sflr.estimate import FitResult
from sflr.krige import (
    KrigingSystem,
    PredictionPair,
    krige_curve,
    predict_pair,
    separation_diagnostic,
    solve_kriging,
)
from sflr.simulate import CASE_A, CASE_B, generate_covariates
from sflr.spatial import CovarianceSpec, SiteGrid, make_grid


def two_sites():
    return SiteGrid(n=2, d=2, sites=np.array([[1, 1], [1, 2]]))


def test_single_site():
    ks = solve_kriging(make_grid(1, 2), (13.5, 5))
    np.testing.assert_allclose(ks.weights, [1.0])


def test_symmetric_pair():
    ks = solve_kriging(two_sites(), (1, 1.5))
    np.testing.assert_allclose(ks.weights, [0.5, 0.5], atol=1e-10)


@pytest.mark.parametrize("n,target", [(10, (13.5, 5)), (15, (13.5, 5)), (25, (13.5, 5)), (5, (100, -40)),
                                      (6, (3.2, 3.7))])
def test_weights_sum_to_one(n, target):
    ks = solve_kriging(make_grid(n, 2), target)
    assert abs(ks.weights.sum() - 1) < 1e-10
    assert np.all(np.isfinite(ks.weights))


def test_exact_at_observed_site():
    grid = make_grid(8, 2)
    X = generate_covariates(grid, 30, 0)
    ell = 27
    ks = solve_kriging(grid, grid.sites[ell])
    expected = np.zeros(len(grid))
    expected[ell] = 1.0
    np.testing.assert_allclose(ks.weights, expected, atol=1e-8)
    np.testing.assert_allclose(krige_curve(ks, X), X.values[ell], atol=1e-8)


@pytest.mark.parametrize("c", [0.01, 3.0, 250.0])
def test_weights_invariant_to_covariance_scale(c):
    grid = make_grid(7, 2)
    w1 = solve_kriging(grid, (3.3, 8.1), CovarianceSpec.exponential(3.0)).weights
    w2 = solve_kriging(grid, (3.3, 8.1), CovarianceSpec.exponential(3.0, sill=c)).weights
    np.testing.assert_allclose(w2, w1, atol=1e-10)


def test_duplicate_sites_rejected():
    grid = SiteGrid(n=2, d=2, sites=np.array([[1, 1], [1, 1], [2, 2]]))
    with pytest.raises(np.linalg.LinAlgError):
        solve_kriging(grid, (1.5, 1.5))


def test_target_dimension_checked():
    with pytest.raises(ValueError):
        solve_kriging(make_grid(3, 2), (1.0, 2.0, 3.0))


def test_krige_curve_constant_and_mean():
    grid = make_grid(4, 2)
    c = np.sin(np.linspace(0, 3, 30))
    ks = solve_kriging(grid, (2.2, 9.0))
    np.testing.assert_allclose(krige_curve(ks, np.tile(c, (16, 1))), c, atol=1e-12)
    half = KrigingSystem(np.zeros(2), np.array([0.5, 0.5]), 0.0, CovarianceSpec())
    rows = np.array([[1.0, 2.0, 3.0], [3.0, 6.0, 1.0]])
    np.testing.assert_array_equal(krige_curve(half, rows), rows.mean(axis=0))
    with pytest.raises(ValueError):
        krige_curve(half, np.ones((3, 3)))


def _fit_from(beta_vec, beta0):
    return FitResult(beta_vec=np.asarray(beta_vec, dtype=float), beta_fn=None, beta0=beta0, rho=1.0)


def test_predict_pair_exact_fit():
    p = 50
    t = np.arange(1, p + 1) / p
    x0 = np.cos(t)
    pair = predict_pair(_fit_from(CASE_A(t), 0.0), CASE_A, x0)
    assert pair.squared_error == 0.0


def test_predict_pair_zero_curve():
    pair = predict_pair(_fit_from(np.ones(20), 0.7), CASE_B, np.zeros(20))
    assert pair.y_hat - pair.y_star == pytest.approx(0.7)


def test_predict_pair_shifted_slope():
    p = 101
    t = np.arange(1, p + 1) / p
    pair = predict_pair(_fit_from(CASE_B(t) + 0.1, 0.0), CASE_B, np.ones(p))
    assert pair.y_hat - pair.y_star == pytest.approx(0.1, abs=1e-15)
    assert pair.squared_error == (pair.y_hat - pair.y_star) ** 2


def test_prediction_pair_squared_error():
    pair = PredictionPair(1.25, -0.5)
    assert pair.squared_error == (1.25 + 0.5) ** 2 >= 0


def test_separation_diagnostic():
    assert separation_diagnostic(make_grid(15, 2), (13.5, 5), np.inf) == (0.5, 1, False)
    dist, thr, ok = separation_diagnostic(make_grid(10, 2), (10, 110), 40)
    assert dist == pytest.approx(100) and thr == 1 and ok
    assert separation_diagnostic(make_grid(1, 2), (5, 5), 3.0)[1] == 1
    assert separation_diagnostic(make_grid(10, 2), (13.5, 5), 2.0)[1] == 100
    with pytest.raises(ValueError):
        separation_diagnostic(make_grid(3, 2), (1, 1), 0)
