"""Ordinary kriging of curves at an unobserved site and prediction errors."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .spatial import CovarianceSpec, SiteGrid, covariance_matrix, min_site_distance

DEFAULT_TARGET = (13.5, 5.0)


@dataclass(frozen=True, eq=False)
class KrigingSystem:
    target: np.ndarray
    weights: np.ndarray
    lagrange: float
    cov_spec: CovarianceSpec


@dataclass(frozen=True)
class PredictionPair:
    y_hat: float
    y_star: float

    @property
    def squared_error(self) -> float:
        return (self.y_hat - self.y_star) ** 2


def solve_kriging(grid: SiteGrid, target, cov: CovarianceSpec | None = None) -> KrigingSystem:
    """Ordinary-kriging weights for predicting at ``target``.

    Solves the bordered system ``[[S, 1], [1^T, 0]] [w; mu] = [s0; 1]`` where
    ``S`` is the site covariance and ``s0`` the covariance between each site
    and the target.

    Raises
    ------
    numpy.linalg.LinAlgError
        If the bordered system is singular (e.g. duplicated sites).
    """
    cov = CovarianceSpec.exponential(3.0) if cov is None else cov
    target = np.asarray(target, dtype=float).reshape(-1)
    if len(grid) == 0:
        raise ValueError("grid must be nonempty")
    if target.size != grid.d:
        raise ValueError(f"target must have {grid.d} coordinates")
    k = len(grid)
    lhs = np.zeros((k + 1, k + 1))
    lhs[:k, :k] = covariance_matrix(cov, grid)
    lhs[:k, k] = lhs[k, :k] = 1.0
    rhs = np.append(covariance_matrix(cov, grid, target[None, :])[:, 0], 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(lhs, check_finite=False)
    if np.min(np.abs(np.diag(lu))) <= 1e-13 * np.abs(lhs).max():
        raise np.linalg.LinAlgError("singular kriging system (duplicate sites?)")
    sol = scipy.linalg.lu_solve((lu, piv), rhs)
    return KrigingSystem(target=target, weights=sol[:k], lagrange=float(sol[k]), cov_spec=cov)


def krige_curve(system: KrigingSystem, X) -> np.ndarray:
    """Kriged curve ``sum_l w_l X_l(t_j)``; one weight vector for all ``t_j``."""
    values = np.asarray(getattr(X, "values", X), dtype=float)
    if values.shape[0] != system.weights.size:
        raise ValueError(f"X has {values.shape[0]} sites, kriging system has {system.weights.size}")
    return system.weights @ values


def predict_pair(fit, truth, x0) -> PredictionPair:
    """Fitted and oracle predictions from the same curve ``x0`` on the grid.

    Both inner products use the ``1/p`` grid weight at ``t_j = j/p``.
    """
    x0 = np.asarray(x0, dtype=float)
    p = x0.size
    if fit.beta_vec.size != p:
        raise ValueError(f"x0 has length {p}, fitted slope has {fit.beta_vec.size}")
    t = np.arange(1, p + 1) / p
    y_hat = fit.beta0 + float(fit.beta_vec @ x0) / p
    y_star = truth.beta0 + float(np.asarray(truth(t), dtype=float) @ x0) / p
    return PredictionPair(y_hat=y_hat, y_star=y_star)


def separation_diagnostic(grid: SiteGrid, target, theta: float):
    """Check ``dist(target, sites) >= floor(n^(2d/theta))``.

    Returns ``(distance, threshold, satisfied)``.  Advisory only.
    """
    if not theta > 0:
        raise ValueError("theta must be positive")
    dist = min_site_distance(np.atleast_2d(np.asarray(target, dtype=float)), grid.sites)
    threshold = 1 if math.isinf(theta) else math.floor(grid.n ** (2 * grid.d / theta))
    return dist, threshold, dist >= threshold
