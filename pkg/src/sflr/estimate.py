"""Smoothing-spline slope estimator, GCV selection and diagnostics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .spline import SplineSystem, reconstruct_function


class RankDeficiencyError(np.linalg.LinAlgError):
    """The penalised normal equations are singular."""


@dataclass(frozen=True, eq=False)
class DesignData:
    Xc: np.ndarray
    Yc: np.ndarray
    xbar: np.ndarray
    ybar: float

    @property
    def n_obs(self) -> int:
        return self.Xc.shape[0]

    @property
    def p(self) -> int:
        return self.Xc.shape[1]

    def gram(self) -> np.ndarray:
        """Empirical covariance ``Xc^T Xc / (N p)`` on the grid."""
        return self.Xc.T @ self.Xc / (self.n_obs * self.p)


@dataclass(frozen=True, eq=False)
class FitResult:
    """Fitted slope.

    ``beta_vec`` are the fitted values at the grid points, ``beta_fn`` the
    natural-spline function through them and ``beta0`` the intercept.
    ``selection`` maps each candidate smoothing parameter to its GCV score
    when the fit came from :func:`fit_gcv`.
    """

    beta_vec: np.ndarray
    beta_fn: Callable
    beta0: float
    rho: float
    selection: Optional[dict] = None


@dataclass(frozen=True, eq=False)
class EmpiricalCovariance:
    gamma_hat: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def p(self) -> int:
        return self.gamma_hat.shape[0]


def center(X, y) -> DesignData:
    """Center curves columnwise and responses around their means.

    ``X`` may be a :class:`~sflr.simulate.FunctionalSample` or an array of
    shape ``(N, p)``; ``y`` a :class:`~sflr.simulate.ResponseSample` or a
    vector of length ``N``.
    """
    Xv = np.asarray(getattr(X, "values", X), dtype=float)
    yv = np.asarray(getattr(y, "y", y), dtype=float)
    if Xv.ndim != 2 or yv.shape != (Xv.shape[0],):
        raise ValueError(f"row mismatch: X is {Xv.shape}, y is {yv.shape}")
    xbar = Xv.mean(axis=0)
    ybar = float(yv.mean())
    return DesignData(Xc=Xv - xbar, Yc=yv - ybar, xbar=xbar, ybar=ybar)


def empirical_covariance(design: DesignData) -> EmpiricalCovariance:
    G = design.gram()
    G = 0.5 * (G + G.T)
    w, V = np.linalg.eigh(G)
    order = np.argsort(w)[::-1]
    return EmpiricalCovariance(gamma_hat=G, eigenvalues=w[order], eigenvectors=V[:, order])


def _solve_spd(K, rhs):
    """Solve ``K x = rhs`` for symmetric ``K``: Cholesky, then pivoted LDL^T."""
    try:
        c = scipy.linalg.cho_factor(K, check_finite=False)
        return scipy.linalg.cho_solve(c, rhs, check_finite=False)
    except np.linalg.LinAlgError:
        pass
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            return scipy.linalg.solve(K, rhs, assume_a="sym", check_finite=False)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
            raise RankDeficiencyError(
                "penalised system is singular: the penalty null space meets the null "
                "space of the design; use more sites or a different penalty order"
            ) from exc


def _penalty(system: SplineSystem, penalty):
    if penalty is not None:
        return np.asarray(penalty, dtype=float)
    if system is None:
        raise ValueError("either a spline system or an explicit penalty is required")
    return system.A


def _check_identifiable(design: DesignData, system: SplineSystem, penalty) -> None:
    """Reject designs that leave part of the penalty null space undetermined.

    ``G + rho A`` is singular exactly when some sampled polynomial of degree
    ``< m`` (the null space of ``A``) is also annihilated by ``G``.
    """
    if penalty is not None:
        return
    t = system.grid.points
    basis, _ = np.linalg.qr(np.vander(t, system.m, increasing=True))
    G = design.gram()
    scale = np.trace(G)
    if scale == 0 or np.linalg.eigvalsh(basis.T @ G @ basis)[0] <= 1e-12 * scale:
        raise RankDeficiencyError(
            "penalised system is singular: the design does not determine the polynomial "
            f"part (degree < {system.m}) of the slope; use more sites or a lower penalty order"
        )


def fit(design: DesignData, system: SplineSystem, rho: float, penalty=None) -> FitResult:
    """Penalised least-squares slope for a fixed smoothing parameter.

    Solves ``(Xc^T Xc / (N p) + rho A) b = Xc^T Yc / N`` and sets the
    intercept to ``ybar - (1/p) sum_j b_j xbar_j``.

    Parameters
    ----------
    design : DesignData
    system : SplineSystem or None
        Supplies the penalty ``A`` and the natural-spline reconstruction.
        May be ``None`` when ``penalty`` is given; ``beta_fn`` is then
        ``None`` as well.
    rho : float
        Smoothing parameter, ``> 0``.
    penalty : array_like, optional
        Replaces ``system.A``; mainly for checking against plain ridge.

    Raises
    ------
    RankDeficiencyError
        If the penalised system is singular.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if system is not None and design.p != system.p:
        raise ValueError(f"design has p={design.p}, spline system has p={system.p}")
    N, p = design.n_obs, design.p
    _check_identifiable(design, system, penalty)
    K = design.gram() + rho * _penalty(system, penalty)
    beta_vec = _solve_spd(K, design.Xc.T @ design.Yc / N)
    beta0 = design.ybar - float(beta_vec @ design.xbar) / p
    return FitResult(
        beta_vec=beta_vec,
        beta_fn=None if system is None else reconstruct_function(system, beta_vec),
        beta0=beta0,
        rho=float(rho),
    )


def gcv_score(rss: float, trace: float, n_obs: int) -> float:
    """``N * RSS / (N - tr H)^2``; infinite when ``tr H >= N``."""
    denom = n_obs - trace
    if denom <= 0:
        return np.inf
    return n_obs * rss / denom**2


def hat_trace_and_rss(design: DesignData, system: SplineSystem, rho: float, penalty=None):
    """Trace of the hat matrix and residual sum of squares at ``rho``.

    The hat matrix maps ``Yc`` to ``Xc b / p``; its trace equals
    ``tr((G + rho A)^-1 G)`` with ``G`` the empirical covariance.
    """
    N, p = design.n_obs, design.p
    Qf = _design_block_of_q(design, system, rho, penalty)
    trace = float(np.sum(Qf * Qf))
    K = design.gram() + rho * _penalty(system, penalty)
    b = _solve_spd(K, design.Xc.T @ design.Yc / N)
    resid = design.Yc - design.Xc @ b / p
    return trace, float(resid @ resid)


def hat_matrix(design: DesignData, system: SplineSystem, rho: float, penalty=None) -> np.ndarray:
    """``H`` with ``H @ Yc`` equal to the fitted signals ``Xc b / p``."""
    N, p = design.n_obs, design.p
    _check_identifiable(design, system, penalty)
    K = design.gram() + rho * _penalty(system, penalty)
    return design.Xc @ _solve_spd(K, design.Xc.T) / (N * p)


def default_rho_grid(lo: float = 1e-8, hi: float = 1e2, count: int = 25) -> np.ndarray:
    return np.logspace(np.log10(lo), np.log10(hi), count)


def select_from_scores(rhos, scores) -> float:
    """Grid minimiser of ``scores``; ties go to the larger ``rho``."""
    rhos = np.asarray(rhos, dtype=float)
    scores = np.asarray(scores, dtype=float)
    if not np.any(np.isfinite(scores)):
        raise RankDeficiencyError("degenerate fit: tr(H) >= N for every candidate rho")
    best = np.nanmin(np.where(np.isfinite(scores), scores, np.nan))
    tied = rhos[scores == best]
    return float(tied.max())


def select_rho(design: DesignData, system: SplineSystem, rho_grid=None, penalty=None):
    """Choose ``rho`` on a grid by generalized cross-validation.

    Returns
    -------
    rho : float
    scores : dict
        GCV score per candidate ``rho``.
    """
    rho_grid = default_rho_grid() if rho_grid is None else np.asarray(rho_grid, dtype=float).ravel()
    if rho_grid.size == 0 or np.any(rho_grid <= 0):
        raise ValueError("rho_grid must be a nonempty set of positive values")
    if rho_grid.size == 1:
        return float(rho_grid[0]), {float(rho_grid[0]): np.nan}
    _check_identifiable(design, system, penalty)
    scores = []
    for rho in rho_grid:
        try:
            tr, rss = hat_trace_and_rss(design, system, rho, penalty)
            scores.append(gcv_score(rss, tr, design.n_obs))
        except RankDeficiencyError:
            scores.append(np.inf)
    rho = select_from_scores(rho_grid, scores)
    return rho, {float(r): float(s) for r, s in zip(rho_grid, scores)}


def fit_gcv(design: DesignData, system: SplineSystem, rho_grid=None) -> FitResult:
    rho, scores = select_rho(design, system, rho_grid)
    res = fit(design, system, rho)
    return FitResult(res.beta_vec, res.beta_fn, res.beta0, res.rho, selection=scores)


def gamma_seminorm(u, cov: EmpiricalCovariance) -> float:
    """Empirical semi-norm ``sqrt((1/p) u^T Gamma_hat u)``.

    ``u`` is a length-``p`` vector of grid values or a callable evaluated at
    ``t_j = j/p``.
    """
    p = cov.p
    if callable(u):
        u = np.asarray(u(np.arange(1, p + 1) / p), dtype=float)
    u = np.asarray(u, dtype=float)
    q = float(u @ cov.gamma_hat @ u) / p
    return float(np.sqrt(max(q, 0.0)))


def estimation_error(fit_result: FitResult, beta: Callable, cov: EmpiricalCovariance) -> float:
    """Squared semi-norm distance between the fitted and true slope on the grid."""
    t = np.arange(1, cov.p + 1) / cov.p
    return gamma_seminorm(fit_result.beta_vec - beta(t), cov) ** 2


def smoother_matrix(design: DesignData, system: SplineSystem, rho: float, penalty=None) -> np.ndarray:
    """``M = (G + rho A)^-1 G`` with ``G`` the empirical covariance.

    Returns the zero matrix when ``G`` vanishes.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    G = design.gram()
    if not np.any(G):
        return np.zeros_like(G)
    _check_identifiable(design, system, penalty)
    return _solve_spd(G + rho * _penalty(system, penalty), G)


def _penalty_root(system: SplineSystem, penalty) -> np.ndarray:
    if penalty is None:
        return system.root
    w, V = np.linalg.eigh(np.asarray(penalty, dtype=float))
    return np.sqrt(np.clip(w, 0, None))[:, None] * V.T


def _design_block_of_q(design: DesignData, system: SplineSystem, rho: float, penalty=None) -> np.ndarray:
    """Rows of ``Q`` belonging to the design in ``QR([F; sqrt(rho) R])``.

    With ``G = F^T F`` and ``A = R^T R`` the eigenvalues of
    ``M = (G + rho A)^-1 G`` are the squared singular values of this block,
    so traces of ``M`` and ``M^2`` follow without inverting an
    ill-conditioned matrix.
    """
    F = design.Xc / np.sqrt(design.n_obs * design.p)
    C = np.vstack([F, np.sqrt(rho) * _penalty_root(system, penalty)])
    Q = np.linalg.qr(C, mode="reduced")[0]
    return Q[: design.n_obs]


def trace_inequality_check(design: DesignData, system: SplineSystem, rho: float, penalty=None, tol: float = 1e-8):
    """Return ``(tr M, tr M^2, tr M^2 <= tr M + tol)``.

    ``M = (G + rho A)^-1 G`` is never formed; see :func:`_design_block_of_q`.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if not np.any(design.Xc):
        return 0.0, 0.0, True
    _check_identifiable(design, system, penalty)
    Qf = _design_block_of_q(design, system, rho, penalty)
    tr_m = float(np.sum(Qf * Qf))
    tr_m2 = float(np.sum((Qf.T @ Qf) ** 2))
    return tr_m, tr_m2, tr_m2 <= tr_m + tol


def eigen_decay_diagnostic(cov, q: float, C: float) -> list[tuple[int, float, float, bool]]:
    """Tail-sum condition ``sum_{j>r} lambda_j <= C r^(-2q)`` for ``r = 1..p-1``.

    ``cov`` is an :class:`EmpiricalCovariance` or a descending sequence of
    eigenvalues.  Rows are ``(r, tail, bound, satisfied)``.
    """
    lam = np.asarray(getattr(cov, "eigenvalues", cov), dtype=float)
    tails = np.cumsum(lam[::-1])[::-1]
    rows = []
    for r in range(1, lam.size):
        tail = float(tails[r])
        bound = C * r ** (-2.0 * q)
        rows.append((r, tail, bound, tail <= bound))
    return rows
