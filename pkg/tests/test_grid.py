"""Grid calculus: derivatives, Helmholtz inversion, arc quadrature."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from hoch.grid import (Grid, GridFunction, derivative, fourier_shift,
                       helmholtz_inverse, integrate_arc, integrate_segment,
                       momentum_density, refine_argmax, second_derivative,
                       trapezoid, wrap_displacement)
from hoch.peakon import PeakonParams, eval_peakon, eval_peakon_dx


@pytest.fixture
def grid():
    return Grid(L=40.0, N=2048)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(L=-1.0, N=64)
    with pytest.raises(ValueError):
        Grid(L=10.0, N=63)


def test_gridfunction_validation(grid):
    with pytest.raises(ValueError):
        GridFunction(grid, np.zeros(3))
    with pytest.raises(ValueError):
        GridFunction(grid, np.full(grid.N, np.nan))
    u = GridFunction(grid, np.ones(grid.N))
    with pytest.raises(ValueError):
        u.values[0] = 2.0     # immutable


def test_derivative_constant(grid):
    u = GridFunction(grid, np.full(grid.N, 3.7))
    for scheme in ("spectral", "central2", "central4"):
        assert np.max(np.abs(derivative(u, scheme).values)) < 1e-12


def test_derivative_eigenfunction(grid):
    k = 2 * np.pi / grid.L
    u = GridFunction.sample(grid, lambda x: np.sin(k * x))
    exact = k * np.cos(k * grid.x)
    assert np.max(np.abs(derivative(u, "spectral").values - exact)) < 1e-12
    assert np.max(np.abs(derivative(u, "central2").values - exact)) < k ** 3 * grid.h ** 2
    assert np.max(np.abs(derivative(u, "central4").values - exact)) < k ** 5 * grid.h ** 4


def test_derivative_peakon_central2_away_from_crest(grid):
    """Second-order Taylor error bound away from the kink."""
    p = PeakonParams(n=1, a=1.0, x0=grid.h / 2)
    u = GridFunction(grid, eval_peakon(p, 0.0, grid.x))
    du = derivative(u, "central2").values
    exact = eval_peakon_dx(p, 0.0, grid.x)
    away = np.abs(grid.x - p.x0) > 5 * grid.h
    err = np.max(np.abs((du - exact)[away]))
    assert err <= 0.5 * grid.h ** 2    # |f'''|/6 <= 1/6 for the unit peakon


def test_unknown_scheme(grid):
    u = GridFunction(grid, np.zeros(grid.N))
    with pytest.raises(ValueError):
        derivative(u, "upwind")


def test_helmholtz_roundtrip(grid):
    v = np.cos(2 * np.pi * 3 * grid.x / grid.L) + 0.3 * np.sin(2 * np.pi * 11 * grid.x / grid.L)
    f = GridFunction(grid, v - second_derivative(GridFunction(grid, v)).values)
    assert np.max(np.abs(helmholtz_inverse(f).values - v)) < 1e-12


def test_helmholtz_eigenfunction(grid):
    k = 2 * np.pi / grid.L
    f = GridFunction.sample(grid, lambda x: np.sin(k * x))
    out = helmholtz_inverse(f)
    assert np.allclose(out.values, f.values / (1.0 + k * k), atol=1e-14)


def test_helmholtz_matches_line_kernel_quadrature():
    grid = Grid(L=40.0, N=4096)
    f = GridFunction.sample(grid, lambda x: np.exp(-4.0 * (x - 0.7) ** 2))
    out = helmholtz_inverse(f)
    for j in (1900, 2120, 2400):
        xq = float(grid.x[j])
        oracle = quad(lambda y: 0.5 * math.exp(-abs(xq - y)) * math.exp(-4.0 * (y - 0.7) ** 2),
                      -20.0, 20.0, points=[xq], limit=200)[0]
        assert out.values[j] == pytest.approx(oracle, abs=1e-8)


def test_momentum_density_of_exponential_pair(grid):
    # (1 - dxx) applied to a band-limited function recovers the construction
    v = np.sin(2 * np.pi * 5 * grid.x / grid.L)
    u = GridFunction(grid, v)
    m = momentum_density(u)
    k = 2 * np.pi * 5 / grid.L
    assert np.allclose(m.values, (1 + k * k) * v, atol=1e-10)


def test_trapezoid(grid):
    u = GridFunction.sample(grid, lambda x: np.exp(-x * x))
    assert trapezoid(u) == pytest.approx(math.sqrt(math.pi), rel=1e-12)


def test_fourier_shift_exact_for_bandlimited(grid):
    k = 2 * np.pi * 7 / grid.L
    v = np.sin(k * grid.x + 0.3)
    tau = 0.731
    shifted = fourier_shift(grid, v, tau)
    assert np.max(np.abs(shifted - np.sin(k * (grid.x + tau) + 0.3))) < 1e-12


def test_wrap_displacement(grid):
    assert wrap_displacement(grid, 21.0) == pytest.approx(-19.0)
    assert wrap_displacement(grid, -21.0) == pytest.approx(19.0)
    assert wrap_displacement(grid, 3.0) == pytest.approx(3.0)


def test_refine_argmax_smooth(grid):
    x0 = 0.317
    u = GridFunction.sample(grid, lambda x: np.exp(-(x - x0) ** 2))
    xi, M, ties = refine_argmax(u)
    assert not ties
    assert xi == pytest.approx(x0, abs=1e-4)
    assert M == pytest.approx(1.0, abs=1e-7)


def test_refine_argmax_kinked_and_ties(grid):
    p = PeakonParams(n=1, a=1.0, x0=grid.h / 2)
    u = GridFunction(grid, eval_peakon(p, 0.0, grid.x))
    xi, M, ties = refine_argmax(u, kinked=True)
    assert abs(xi - p.x0) <= grid.h
    two = np.zeros(grid.N)
    two[10] = two[200] = 1.0
    assert refine_argmax(GridFunction(grid, two))[2] is True


def test_integrate_segment_quartic_error():
    # exact for cubics, O(h^4) for exp
    h = 0.01
    xs = np.arange(0.0, 1.0 + h / 2, h)
    cubic = 1.0 + xs - 2 * xs ** 2 + 0.5 * xs ** 3
    exact = 1.0 + 0.5 - 2.0 / 3.0 + 0.5 / 4.0
    assert integrate_segment(cubic, h) == pytest.approx(exact, abs=1e-13)
    expdata = np.exp(xs)
    assert integrate_segment(expdata, h) == pytest.approx(math.e - 1.0, abs=1e-9)


def test_integrate_arc_partial_cells():
    grid = Grid(L=40.0, N=4096)
    vals = np.exp(np.sin(2 * np.pi * grid.x / grid.L))
    a, b = -3.217, 7.913
    oracle = quad(lambda x: math.exp(math.sin(2 * math.pi * x / grid.L)), a, b,
                  limit=200)[0]
    assert integrate_arc(vals, grid, a, b) == pytest.approx(oracle, abs=1e-9)
