"""Natural-spline basis, evaluation matrix and roughness penalty.

The estimator works with slope functions represented by their values on an
equispaced grid ``t_j = j / p``.  The penalty matrix acts on such value
vectors: ``b @ A @ b`` is the integrated squared ``m``-th derivative of the
natural spline of order ``2m`` interpolating ``(t_j, b_j)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable

import numpy as np
import scipy.linalg
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import BSpline


@dataclass(frozen=True)
class TimeGrid:
    """Equispaced observation points ``t_j = j / p``, ``j = 1..p``."""

    p: int

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"p must be a positive integer, got {self.p!r}")

    @property
    def points(self) -> np.ndarray:
        return np.arange(1, self.p + 1) / self.p


@dataclass(frozen=True, eq=False)
class SplineSystem:
    """Natural-spline basis of ``NS^m(t_1, ..., t_p)`` and derived matrices.

    Attributes
    ----------
    m : int
        Order of the penalised derivative.
    grid : TimeGrid
        Observation grid, also the knot sequence.
    knots : ndarray
        Full B-spline knot vector (boundary knots repeated ``2m`` times).
    coef : ndarray, shape (p + 2m - 2, p)
        Maps B-spline coefficients to the natural basis: column ``i`` holds
        the B-spline coefficients of ``D_i``.
    D : ndarray, shape (p, p)
        ``D[j, i] = D_i(t_j)``.
    Omega : ndarray, shape (p, p)
        Gram matrix of ``m``-th derivatives of the natural basis.
    A : ndarray, shape (p, p)
        Penalty on value vectors, ``D^-T Omega D^-1``.
    root : ndarray, shape (q, p)
        Weighted ``m``-th derivatives of the cardinal functions at the
        quadrature nodes; ``A = root.T @ root``.
    """

    m: int
    grid: TimeGrid
    knots: np.ndarray
    coef: np.ndarray
    D: np.ndarray
    Omega: np.ndarray
    A: np.ndarray
    root: np.ndarray
    _D_lu: tuple

    @property
    def p(self) -> int:
        return self.grid.p

    @property
    def degree(self) -> int:
        return 2 * self.m - 1

    def penalty(self, values) -> float:
        """Roughness ``b @ A @ b`` of a value vector.

        Evaluated as ``||root @ b||^2``, which avoids the cancellation of the
        explicit quadratic form when ``A`` has a large norm.
        """
        b = np.asarray(values, dtype=float)
        r = self.root @ b
        return float(r @ r)

    def interpolation_coefficients(self, values) -> np.ndarray:
        """Coefficients ``c`` in the natural basis with ``D c = values``."""
        values = np.asarray(values, dtype=float)
        if values.shape[0] != self.p:
            raise ValueError(f"expected {self.p} values, got {values.shape[0]}")
        return scipy.linalg.lu_solve(self._D_lu, values)


def _bspline_eval(knots, k, x, nu=0):
    """Values of every B-spline (or its ``nu``-th derivative) at ``x``.

    Returns an array of shape ``(len(x), n_basis)``.
    """
    n_basis = len(knots) - k - 1
    spl = BSpline(knots, np.eye(n_basis), k, extrapolate=True)
    return spl(np.atleast_1d(np.asarray(x, dtype=float)), nu=nu)


def build_spline_system(p: int, m: int = 2) -> SplineSystem:
    """Build the natural-spline system on the grid ``t_j = j / p``.

    B-splines of order ``2m`` with knots at the grid points are restricted to
    the subspace whose derivatives of orders ``m..2m-2`` vanish at ``t_1`` and
    ``t_p = 1``; this leaves exactly ``p`` basis functions.  Left of ``t_1``
    each basis function continues as its Taylor polynomial of degree ``m-1``,
    so the ``m``-th derivative vanishes there.

    Parameters
    ----------
    p : int
        Number of grid points; must satisfy ``p >= 2m + 2``.
    m : int, default 2
        Penalised derivative order (``m = 2`` gives cubic smoothing splines).

    Returns
    -------
    SplineSystem

    Raises
    ------
    ValueError
        If ``m < 1`` or ``p`` is too small for the basis.
    numpy.linalg.LinAlgError
        If the evaluation matrix ``D`` turns out singular.
    """
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    if int(p) != p or p < 2 * m + 2:
        raise ValueError(f"p must be an integer >= 2m + 2 = {2 * m + 2}, got {p!r}")
    p, m = int(p), int(m)
    grid = TimeGrid(p)
    t = grid.points
    k = 2 * m - 1
    knots = np.concatenate([np.repeat(t[0], k + 1), t[1:-1], np.repeat(t[-1], k + 1)])

    # natural boundary conditions: derivatives m..2m-2 vanish at both ends
    rows = []
    for nu in range(m, 2 * m - 1):
        rows.append(_bspline_eval(knots, k, t[0], nu)[0])
        rows.append(_bspline_eval(knots, k, t[-1], nu)[0])
    n_basis = len(knots) - k - 1
    if rows:
        coef = scipy.linalg.null_space(np.array(rows))
    else:
        coef = np.eye(n_basis)
    if coef.shape[1] != p:
        raise np.linalg.LinAlgError(
            f"natural-spline space has dimension {coef.shape[1]}, expected {p}"
        )

    D = _bspline_eval(knots, k, t) @ coef
    lu = scipy.linalg.lu_factor(D)
    if not np.all(np.isfinite(lu[0])) or np.min(np.abs(np.diag(lu[0]))) <= 1e-14 * np.abs(D).max():
        raise np.linalg.LinAlgError("evaluation matrix D is singular")

    # m+1 Gauss-Legendre nodes per knot interval integrate degree 2m-2 exactly
    gx, gw = leggauss(m + 1)
    left, right = t[:-1], t[1:]
    half = 0.5 * (right - left)
    nodes = (0.5 * (left + right))[:, None] + half[:, None] * gx[None, :]
    weights = half[:, None] * gw[None, :]
    sqrt_w = np.sqrt(weights.ravel())[:, None]
    deriv = sqrt_w * (_bspline_eval(knots, k, nodes.ravel(), m) @ coef)
    Omega = deriv.T @ deriv
    Omega = 0.5 * (Omega + Omega.T)

    # A = D^-T Omega D^-1 = root^T root, root = weighted derivatives of D^-1-transformed basis
    root = scipy.linalg.lu_solve(lu, deriv.T, trans=1).T
    A = root.T @ root
    A = 0.5 * (A + A.T)

    for arr in (knots, coef, D, Omega, A, root):
        arr.setflags(write=False)
    return SplineSystem(
        m=m, grid=grid, knots=knots, coef=coef, D=D, Omega=Omega, A=A, root=root, _D_lu=lu
    )


def basis_matrix(system: SplineSystem, t) -> np.ndarray:
    """Evaluate the natural basis at many points.

    Returns an array of shape ``(len(t), p)`` whose row ``r`` is
    ``(D_1(t_r), ..., D_p(t_r))``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0.0) or np.any(t > 1.0) or np.any(~np.isfinite(t)):
        raise ValueError("evaluation points must lie in [0, 1]")
    k = system.degree
    t1 = system.grid.points[0]
    out = np.empty((t.size, system.p))
    inside = t >= t1
    if inside.any():
        out[inside] = _bspline_eval(system.knots, k, t[inside]) @ system.coef
    if (~inside).any():
        # degree m-1 continuation to the left of the first knot
        dt = t[~inside] - t1
        acc = np.zeros((dt.size, system.p))
        for nu in range(system.m):
            dnu = _bspline_eval(system.knots, k, t1, nu)[0] @ system.coef
            acc += np.outer(dt**nu / factorial(nu), dnu)
        out[~inside] = acc
    return out


def eval_basis(system: SplineSystem, t: float) -> np.ndarray:
    """Return ``(D_1(t), ..., D_p(t))`` for a single ``t`` in ``[0, 1]``."""
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return basis_matrix(system, t)[0]


def reconstruction_matrix(system: SplineSystem, t) -> np.ndarray:
    """Linear map from grid values to function values at ``t``.

    Row ``r`` equals ``D(t_r)^T (D^T D)^-1 D^T``; since ``D`` is square and
    invertible this is ``D(t_r)^T D^-1``.
    """
    B = basis_matrix(system, t)
    return scipy.linalg.lu_solve(system._D_lu, B.T, trans=1).T


def reconstruct_function(system: SplineSystem, values) -> Callable:
    """Natural-spline function through ``(t_j, values_j)``.

    The returned callable accepts a scalar or an array of points in ``[0, 1]``
    and returns values of the same shape.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (system.p,):
        raise ValueError(f"values must have shape ({system.p},), got {values.shape}")
    c = system.interpolation_coefficients(values)

    def beta_fn(t):
        t_arr = np.asarray(t, dtype=float)
        vals = basis_matrix(system, t_arr.ravel()) @ c
        return vals.reshape(t_arr.shape) if t_arr.ndim else float(vals[0])

    return beta_fn
