import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import polynomial as P
from scipy.interpolate import BSpline, CubicSpline, PPoly

from sflr.spline import (
    TimeGrid,
    basis_matrix,
    build_spline_system,
    eval_basis,
    reconstruct_function,
    reconstruction_matrix,
)


def natural_cubic_energy(t, b):
    """Exact integral of s''^2 for the natural cubic interpolant (s'' is piecewise linear)."""
    d2 = CubicSpline(t, b, bc_type="natural")(t, 2)
    h = np.diff(t)
    return float(np.sum(h / 3 * (d2[:-1] ** 2 + d2[:-1] * d2[1:] + d2[1:] ** 2)))


def natural_cubic_eval(t, b, x):
    """Natural cubic interpolant, continued linearly left of t[0]."""
    cs = CubicSpline(t, b, bc_type="natural")
    x = np.asarray(x, dtype=float)
    return np.where(x >= t[0], cs(np.clip(x, t[0], None)), cs(t[0]) + cs(t[0], 1) * (x - t[0]))


def exact_omega(system):
    """Gram matrix of m-th derivatives by exact piecewise polynomial products."""
    k, m, p = system.degree, system.m, system.p
    pps = [PPoly.from_spline(BSpline(system.knots, system.coef[:, i], k)).derivative(m) for i in range(p)]
    x = pps[0].x
    out = np.zeros((p, p))
    for seg in range(len(x) - 1):
        h = x[seg + 1] - x[seg]
        if h <= 0:
            continue
        # PPoly stores highest power first
        polys = [pp.c[::-1, seg] for pp in pps]
        for i in range(p):
            for j in range(i, p):
                antideriv = P.polyint(P.polymul(polys[i], polys[j]))
                out[i, j] += P.polyval(h, antideriv)
    return np.triu(out) + np.triu(out, 1).T


def test_time_grid_points():
    g = TimeGrid(5)
    np.testing.assert_allclose(g.points, [0.2, 0.4, 0.6, 0.8, 1.0])
    assert np.all(np.diff(g.points) > 0)


@pytest.mark.parametrize("p,m", [(5, 2), (3, 1), (7, 3), (10, 0)])
def test_rejects_small_p_or_bad_m(p, m):
    with pytest.raises(ValueError):
        build_spline_system(p, m)


@pytest.mark.parametrize("p,m", [(6, 2), (10, 2), (31, 2), (4, 1), (12, 1), (8, 3), (20, 3)])
def test_shapes_and_symmetry(p, m):
    s = build_spline_system(p, m)
    assert s.D.shape == s.Omega.shape == s.A.shape == (p, p)
    assert np.array_equal(s.A, s.A.T)
    assert np.array_equal(s.Omega, s.Omega.T)
    assert np.isfinite(np.linalg.cond(s.D))


@pytest.mark.parametrize("p,m", [(6, 2), (10, 2), (12, 2), (8, 1), (12, 1)])
def test_penalty_eigenvalues_nonnegative(p, m):
    ev = np.linalg.eigvalsh(build_spline_system(p, m).A)
    assert ev.min() >= -1e-10


@pytest.mark.parametrize("p,m", [(31, 2), (101, 2), (8, 3), (20, 3)])
def test_penalty_eigenvalues_nonnegative_relative(p, m):
    # eigvalsh error is ~eps * ||A||, and ||A|| grows like p^(2m)
    A = build_spline_system(p, m).A
    ev = np.linalg.eigvalsh(A)
    assert ev.min() >= -1e-10 * max(1.0, ev.max())


@pytest.mark.parametrize("p,m", [(10, 1), (10, 2), (101, 2), (20, 3), (40, 3)])
def test_rank_deficiency_equals_m(p, m):
    sv = np.linalg.svd(build_spline_system(p, m).root, compute_uv=False)
    rank = int(np.sum(sv > 1e-8 * sv.max()))
    assert p - rank == m


@pytest.mark.parametrize("m", [1, 2, 3])
@given(coefs=st.lists(st.floats(-10, 10), min_size=3, max_size=3), p=st.integers(8, 60))
@settings(max_examples=30, deadline=None)
def test_polynomials_below_order_m_are_unpenalised(m, coefs, p):
    s = build_spline_system(p, m)
    b = P.polyval(s.grid.points, coefs[:m])
    assert s.penalty(b) <= 1e-8 * max(b @ b, 1.0)


@pytest.mark.parametrize("p", [6, 7, 10, 25, 101])
def test_quadratic_energy_matches_natural_cubic_oracle(p):
    s = build_spline_system(p, 2)
    t = s.grid.points
    expected = natural_cubic_energy(t, t**2)
    assert s.penalty(t**2) == pytest.approx(expected, rel=1e-9, abs=1e-8)
    # natural end conditions force s'' = 0 at both ends, so energy sits below int 2^2 = 4
    assert s.penalty(t**2) < 4.0


def test_constant_and_linear_energy_zero():
    s = build_spline_system(20, 2)
    assert s.penalty(np.ones(20)) <= 1e-8 * 20
    assert s.penalty(s.grid.points) <= 1e-8 * 20


@given(b=st.lists(st.floats(-5, 5), min_size=12, max_size=12))
@settings(max_examples=40, deadline=None)
def test_penalty_is_natural_spline_energy(b):
    s = build_spline_system(12, 2)
    b = np.asarray(b)
    assert s.penalty(b) == pytest.approx(natural_cubic_energy(s.grid.points, b), rel=1e-8, abs=1e-8)
    assert s.penalty(b) == pytest.approx(b @ s.A @ b, rel=1e-6, abs=1e-6)


def test_omega_matches_exact_integration():
    s = build_spline_system(10, 2)
    np.testing.assert_allclose(s.Omega, exact_omega(s), rtol=0, atol=1e-10)


def test_omega_matches_exact_integration_m3():
    s = build_spline_system(12, 3)
    ref = exact_omega(s)
    np.testing.assert_allclose(s.Omega, ref, rtol=0, atol=1e-10 * np.abs(ref).max())


def test_eval_basis_at_grid_is_row_of_D():
    s = build_spline_system(15, 2)
    for j, tj in enumerate(s.grid.points):
        np.testing.assert_allclose(eval_basis(s, tj), s.D[j], rtol=0, atol=1e-13)


@pytest.mark.parametrize("t", [-0.01, 1.0001, np.nan])
def test_eval_basis_rejects_outside(t):
    s = build_spline_system(8, 2)
    with pytest.raises(ValueError):
        eval_basis(s, t)


@pytest.mark.parametrize("p,m", [(9, 2), (30, 2), (9, 1), (14, 3)])
def test_reproduces_constants(p, m):
    s = build_spline_system(p, m)
    c = np.linalg.solve(s.D, np.ones(p))
    t = np.random.default_rng(3).uniform(0, 1, 50)
    np.testing.assert_allclose(basis_matrix(s, t) @ c, 1.0, atol=1e-10)


def test_sine_interpolant_matches_tridiagonal_oracle():
    s = build_spline_system(8, 2)
    b = np.sin(2 * np.pi * s.grid.points)
    c = np.linalg.solve(s.D, b)
    assert eval_basis(s, 0.5) @ c == pytest.approx(float(natural_cubic_eval(s.grid.points, b, 0.5)), abs=1e-9)


def test_reconstruct_zero():
    s = build_spline_system(10, 2)
    f = reconstruct_function(s, np.zeros(10))
    np.testing.assert_array_equal(f(np.linspace(0, 1, 11)), 0.0)


def test_reconstruct_natural_spline_off_grid():
    s = build_spline_system(16, 2)
    b = np.random.default_rng(7).normal(size=16)
    x = np.random.default_rng(8).uniform(0, 1, 20)
    np.testing.assert_allclose(reconstruct_function(s, b)(x), natural_cubic_eval(s.grid.points, b, x), atol=1e-9)


def test_reconstruct_case_b_vertex():
    s = build_spline_system(101, 2)
    f = reconstruct_function(s, (0.4 - s.grid.points) ** 2)
    assert abs(f(0.4)) < 1e-6


def test_reconstruct_scalar_and_array_shapes():
    s = build_spline_system(10, 2)
    f = reconstruct_function(s, s.grid.points)
    assert isinstance(f(0.3), float)
    assert f(np.zeros((2, 3))).shape == (2, 3)
    with pytest.raises(ValueError):
        reconstruct_function(s, np.ones(9))


@given(values=st.lists(st.floats(-1e3, 1e3), min_size=20, max_size=20))
@settings(max_examples=30, deadline=None)
def test_reconstruct_at_grid_returns_values(values):
    s = build_spline_system(20, 2)
    f = reconstruct_function(s, values)
    np.testing.assert_allclose(f(s.grid.points), values, atol=1e-9 * max(1.0, np.abs(values).max()))


def test_reconstruction_matrix_is_identity_on_grid():
    s = build_spline_system(25, 2)
    np.testing.assert_allclose(reconstruction_matrix(s, s.grid.points), np.eye(25), atol=1e-10)
