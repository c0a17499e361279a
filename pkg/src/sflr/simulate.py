"""Synthetic spatial functional data: covariate curves, slopes and responses."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal, Optional

import numpy as np
from scipy.interpolate import BSpline

from .spatial import CovarianceSpec, SiteGrid, as_generator, covariance_matrix, gaussian_factor, sample_gaussian
from .spline import SplineSystem, TimeGrid, build_spline_system, reconstruction_matrix

N_COVARIATE_BASIS = 15
LAMBDA_LEVEL = 0.09
QUADRATURE_POINTS = 1001


@dataclass(frozen=True)
class SlopeCase:
    tag: str
    beta: Callable
    beta0: float = 0.0

    def __call__(self, t):
        return self.beta(np.asarray(t, dtype=float))


def _case_a(t):
    return np.sin(2 * np.pi * t**3) ** 3


def _case_b(t):
    return (0.4 - t) ** 2


CASE_A = SlopeCase("A", _case_a)
CASE_B = SlopeCase("B", _case_b)
CASES = {"A": CASE_A, "B": CASE_B}


def slope_case(tag: str) -> SlopeCase:
    try:
        return CASES[tag.upper()]
    except KeyError:
        raise ValueError(f"unknown slope case {tag!r}; expected one of {sorted(CASES)}") from None


def eval_slope(case: SlopeCase, t):
    """Evaluate the slope function of ``case`` at ``t`` in ``[0, 1]``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > 1):
        raise ValueError("t must lie in [0, 1]")
    out = case(t_arr)
    return float(out) if t_arr.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """Curves ``X_i(t_j)`` observed at every site; ``values`` is ``(n_sites, p)``."""

    grid: SiteGrid
    time: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.grid), self.time.p):
            raise ValueError(
                f"values has shape {self.values.shape}, expected {(len(self.grid), self.time.p)}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("covariate values must be finite")


@dataclass(frozen=True, eq=False)
class ResponseSample:
    """Responses plus the quantities used to set the noise level.

    ``signal`` holds the noiseless integrals (without intercept), ``noise``
    the added error, and ``signal_second_moment`` the empirical mean of
    ``signal**2``.
    """

    y: np.ndarray
    sigma2_eps: float
    signal_second_moment: float
    signal: np.ndarray
    noise: np.ndarray

    @property
    def snr(self) -> float:
        s = self.signal_second_moment
        return s / (s + self.sigma2_eps)


@lru_cache(maxsize=32)
def covariate_basis(p: int, n_basis: int = N_COVARIATE_BASIS) -> np.ndarray:
    """Cubic B-splines with equispaced interior knots, evaluated at ``j/p``.

    Returns a read-only ``(p, n_basis)`` array.
    """
    n_interior = n_basis - 4
    knots = np.concatenate([np.zeros(4), np.arange(1, n_interior + 1) / (n_interior + 1), np.ones(4)])
    t = TimeGrid(p).points
    B = BSpline.design_matrix(t, knots, 3).toarray()
    B.setflags(write=False)
    return B


@lru_cache(maxsize=16)
def _spline_system(p: int, m: int) -> SplineSystem:
    return build_spline_system(p, m)


@lru_cache(maxsize=16)
def _quadrature_map(p: int, m: int, n_points: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n_points)
    R = reconstruction_matrix(_spline_system(p, m), t)
    R.setflags(write=False)
    return R


def generate_covariates(
    grid: SiteGrid,
    p: int,
    seed,
    xi_cov: Optional[CovarianceSpec] = None,
    lambda_level: float = LAMBDA_LEVEL,
    lambda_mode: Literal["per-point", "per-replicate"] = "per-point",
    n_basis: int = N_COVARIATE_BASIS,
) -> FunctionalSample:
    """Draw ``X_i(t) = sum_k xi_{i,k} B_k(t) + Lambda_i(t)`` at every site.

    Each coefficient field ``xi_{., k}`` is an independent draw from
    ``N(0, Sigma1)`` across sites, with ``Sigma1`` given by ``xi_cov``
    (rate-3 exponential by default).  ``Lambda`` has constant covariance
    ``lambda_level`` between all sites; in ``per-point`` mode a fresh field
    is drawn for every ``t_j``, in ``per-replicate`` mode one field is shared
    by all time points.

    Draws from ``seed`` in a fixed order (``xi`` first, then ``Lambda``), so a
    generator passed in is left ready for the response noise.
    """
    if p < 30:
        raise ValueError(f"p must be >= 30, got {p}")
    if lambda_mode not in ("per-point", "per-replicate"):
        raise ValueError(f"unknown lambda_mode {lambda_mode!r}")
    rng = as_generator(seed)
    xi_cov = CovarianceSpec.exponential(3.0) if xi_cov is None else xi_cov
    B = covariate_basis(p, n_basis)

    xi = sample_gaussian(covariance_matrix(xi_cov, grid), rng, size=n_basis).T
    lam_cov = covariance_matrix(CovarianceSpec.constant(lambda_level), grid)
    if lambda_mode == "per-point":
        lam = sample_gaussian(lam_cov, rng, size=p).T
    else:
        lam = sample_gaussian(lam_cov, rng)[:, None]
    values = xi @ B.T + lam
    values.setflags(write=False)
    return FunctionalSample(grid=grid, time=TimeGrid(p), values=values)


def integrate_against(X: FunctionalSample, case: SlopeCase, m: int = 2, n_points: int = QUADRATURE_POINTS):
    """Rectangular-rule integrals ``(1/(N-1)) sum_j beta(s_j) X_i(s_j)``.

    ``s_j = (j-1)/(N-1)``, ``j = 1..N``.  Curves are evaluated between grid
    points through their natural-spline interpolant.
    """
    s = np.linspace(0.0, 1.0, n_points)
    weights = _quadrature_map(X.time.p, m, n_points).T @ case(s) / (n_points - 1)
    return X.values @ weights


def generate_responses(
    X: FunctionalSample,
    case: SlopeCase,
    snr: Optional[float],
    seed,
    noise_cov: Optional[CovarianceSpec] = None,
    sigma2_eps: Optional[float] = None,
    m: int = 2,
    n_points: int = QUADRATURE_POINTS,
) -> ResponseSample:
    """Responses ``Y_i = beta0 + int beta X_i + eps_i``.

    The noise vector is ``N(0, sigma2_eps * Sigma1)`` across sites.  With
    ``sigma2_eps`` omitted it is set from the requested ``snr`` as
    ``S (1 - snr) / snr``, ``S`` being the mean squared signal over sites.
    Passing ``sigma2_eps`` directly disables snr control (``snr`` is then
    ignored and may be ``None``).
    """
    noise_cov = CovarianceSpec.exponential(3.0) if noise_cov is None else noise_cov
    signal = integrate_against(X, case, m=m, n_points=n_points)
    S = float(np.mean(signal**2))
    if sigma2_eps is None:
        if snr is None or not 0.0 < snr < 1.0:
            raise ValueError(f"snr must lie in (0, 1), got {snr!r}")
        if S == 0.0:
            raise ValueError("zero signal: snr control is undefined for a null slope")
        sigma2_eps = S * (1.0 - snr) / snr
    elif sigma2_eps < 0:
        raise ValueError("sigma2_eps must be nonnegative")

    rng = as_generator(seed)
    if sigma2_eps > 0:
        L = gaussian_factor(covariance_matrix(noise_cov, X.grid))
        noise = np.sqrt(sigma2_eps) * sample_gaussian(None, rng, factor=L)
    else:
        noise = np.zeros(len(X.grid))
    y = case.beta0 + signal + noise
    return ResponseSample(
        y=y, sigma2_eps=float(sigma2_eps), signal_second_moment=S, signal=signal, noise=noise
    )


def write_sample_csv(sample: FunctionalSample, path) -> None:
    """Write one row per site: ``coord_1..coord_d`` then ``x_1..x_p``.

    Column ``x_j`` holds the curve value at ``t_j = j/p``.
    """
    d = sample.grid.d
    header = [f"coord_{k}" for k in range(1, d + 1)] + [f"x_{j}" for j in range(1, sample.time.p + 1)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for site, row in zip(sample.grid.sites, sample.values):
            w.writerow([int(c) for c in site] + [repr(float(v)) for v in row])


def read_sample_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a file written by :func:`write_sample_csv` into ``(coords, values)``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
    d = sum(h.startswith("coord_") for h in header)
    return body[:, :d], body[:, d:]
