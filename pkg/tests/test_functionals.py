"""Conserved functionals, split identities, and orbit distance.

The cone suite lives on an L=80 grid: the members decay like exp(-|x|), so a
shorter domain leaves enough tail at the seam to pollute the spectral
derivative beyond the 1e-10 cone margin.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from hoch.exact import build_coeff_table
from hoch.functionals import (H1, H2, H2_hat, cone_condition, exp_fit_crest,
                              functional_report, g_split, g_sq_integral,
                              h_branches, h_func, hg_sq_integral,
                              orbit_distance, periodic_peakon,
                              perturbation_continuity_probe,
                              stability_inequality_residual)
from hoch.grid import Grid, GridFunction, derivative, helmholtz_inverse, refine_argmax
from hoch.peakon import PeakonParams, eval_peakon, eval_peakon_dx
from hoch.solver import mollified_peakon

GRID = Grid(L=80.0, N=8192)


def _cone_suite():
    """Positive single-maximum profiles satisfying |u_x| <= u."""
    suite = {
        "sech_w1": GridFunction.sample(GRID, lambda x: 1.0 / np.cosh(x - 0.3)),
        "sech_w125": GridFunction.sample(GRID, lambda x: 0.8 / np.cosh((x + 1.1) / 1.25)),
        "moll_peakon": mollified_peakon(PeakonParams(n=1, a=1.0, x0=0.4), 0.2, GRID),
        "moll_peakon_wide": mollified_peakon(PeakonParams(n=2, a=1.3, x0=-0.7), 0.35, GRID),
        "pstar_gauss": helmholtz_inverse(
            GridFunction.sample(GRID, lambda x: np.exp(-((x - 0.9) / 1.5) ** 2))),
    }
    return suite


def _decaying_suite():
    """Adds plain Gaussians (cone-violating but decaying) for the g^2 identity."""
    suite = _cone_suite()
    for w in (0.5, 1.0, 2.0):
        suite[f"gauss_w{w}"] = GridFunction.sample(
            GRID, lambda x, w=w: np.exp(-((x - 0.37) / w) ** 2))
    return suite


def test_h1_zero_and_oracle():
    assert H1(GridFunction(GRID, np.zeros(GRID.N))) == 0.0
    u = GridFunction.sample(GRID, lambda x: np.exp(-x * x))
    oracle = quad(lambda x: math.exp(-2 * x * x) + 4 * x * x * math.exp(-2 * x * x),
                  -np.inf, np.inf)[0]
    assert H1(u) == pytest.approx(oracle, rel=1e-8)


def test_h2_peakon_and_zero():
    g = Grid(L=40.0, N=8192)
    p = PeakonParams(n=1, a=1.0, x0=g.h / 2)
    u = GridFunction(g, eval_peakon(p, 0.0, g.x))
    ux = GridFunction(g, eval_peakon_dx(p, 0.0, g.x))
    assert H2(u, build_coeff_table(1), ux) == pytest.approx(4.0 / 3.0, rel=2e-4)
    z = GridFunction(g, np.zeros(g.N))
    assert H2(z, build_coeff_table(2)) == 0.0


def test_h2_hat_equivalence():
    table = build_coeff_table(2)
    u = GridFunction.sample(GRID, lambda x: 0.8 * np.exp(-((x - 1.0) / 1.7) ** 2))
    assert 2 * table.n * H2_hat(u, table) == pytest.approx(H2(u, table), rel=1e-6)


def test_g_split_continuity_and_peakon():
    # symmetric Gaussian: g continuous at the crest since u_x(xi) = 0
    u = GridFunction.sample(GRID, lambda x: np.exp(-x * x))
    xi, _, _ = refine_argmax(u)
    gf = g_split(u, xi)
    j = np.argmin(np.abs(GRID.x - xi))
    assert abs(gf.values[j + 1] - gf.values[j - 1]) < 1e-3
    # sampled peakon saturates g = 0 up to discretization at the kink
    g = Grid(L=40.0, N=8192)
    p = PeakonParams(n=2, a=1.0, x0=g.h / 2)
    up = GridFunction(g, eval_peakon(p, 0.0, g.x))
    uxp = GridFunction(g, eval_peakon_dx(p, 0.0, g.x))
    gp = g_split(up, p.x0, ux=uxp)
    assert np.sqrt(np.sum(gp.values ** 2) * g.h) < 1e-2


def test_g_sq_identity_suite():
    for name, u in _decaying_suite().items():
        ux = derivative(u)
        xi, M, _ = refine_argmax(u)
        lhs = g_sq_integral(u, xi, ux)
        rhs = H1(u, ux) - 2.0 * M * M
        assert lhs == pytest.approx(rhs, rel=1e-6), name


def test_h_func_n1_is_u():
    u = GridFunction.sample(GRID, lambda x: 1.0 / np.cosh(x))
    xi, _, _ = refine_argmax(u)
    hf = h_func(u, xi, build_coeff_table(1))
    assert np.allclose(hf.values, u.values, atol=1e-14)


def test_h_func_rejects_nonpositive():
    u = GridFunction.sample(GRID, lambda x: np.cos(2 * np.pi * x / GRID.L))
    with pytest.raises(ValueError):
        h_func(u, 0.0, build_coeff_table(2))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_hg_sq_identity_cone_suite(n):
    table = build_coeff_table(n)
    tm = float(table.two_minus_c1)
    for name, u in _cone_suite().items():
        ux = derivative(u)
        xi, M, _ = refine_argmax(u)
        lhs = hg_sq_integral(u, xi, table, ux)
        rhs = H2(u, table, ux) - 2.0 * tm / (2 * n + 1) * M ** (2 * n + 1)
        assert lhs == pytest.approx(rhs, rel=1e-4), name


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_h_bound_pointwise(n):
    table = build_coeff_table(n)
    bound_coef = float(table.two_minus_c1) / 2.0
    for name, u in _cone_suite().items():
        ux = derivative(u)
        hl, hr = h_branches(u, table, ux)
        bound = bound_coef * u.values ** (2 * n - 1)
        on_cone = np.abs(ux.values) <= u.values
        margin = np.min((bound - np.maximum(hl, hr))[on_cone])
        assert margin >= -1e-12, name


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_stability_inequality_cone_suite(n):
    table = build_coeff_table(n)
    for name, u in _cone_suite().items():
        res, scale, cone_ok = stability_inequality_residual(u, table)
        assert cone_ok, name
        assert res <= 1e-3 * scale, name


def test_stability_inequality_peakon_saturates():
    g = Grid(L=40.0, N=8192)
    for n in (1, 2, 3):
        p = PeakonParams(n=n, a=1.0, x0=g.h / 2)
        u = GridFunction(g, eval_peakon(p, 0.0, g.x))
        ux = GridFunction(g, eval_peakon_dx(p, 0.0, g.x))
        res, scale, _ = stability_inequality_residual(u, build_coeff_table(n),
                                                      ux, kinked=True)
        assert abs(res) <= 5e-4 * scale


def test_stability_inequality_cone_flag():
    u = GridFunction.sample(GRID, lambda x: 0.1 + np.exp(-x * x))
    _, _, cone_ok = stability_inequality_residual(u, build_coeff_table(2))
    assert not cone_ok   # Gaussian tails violate |u_x| <= u over a pedestal


def test_cone_condition_suite():
    for name, u in _cone_suite().items():
        assert cone_condition(u), name
    bare = GridFunction.sample(GRID, lambda x: np.exp(-x * x))
    assert not cone_condition(bare)


def test_orbit_distance_self():
    g = Grid(L=40.0, N=8192)
    p = PeakonParams(n=2, a=1.0, x0=g.h / 2)
    u = GridFunction(g, eval_peakon(p, 0.0, g.x))
    ux = GridFunction(g, eval_peakon_dx(p, 0.0, g.x))
    od = orbit_distance(u, p, ux=ux, kinked=True)
    assert od.d <= 2e-3
    assert abs(od.xi_star - p.x0) <= g.h


def test_orbit_distance_shifted():
    g = Grid(L=40.0, N=8192)
    ref = PeakonParams(n=2, a=1.0, x0=g.h / 2)
    shifted = PeakonParams(n=2, a=1.0, x0=g.h / 2 + 1.0)
    u = GridFunction(g, eval_peakon(shifted, 0.0, g.x))
    ux = GridFunction(g, eval_peakon_dx(shifted, 0.0, g.x))
    od = orbit_distance(u, ref, ux=ux, kinked=True)
    assert od.d <= 2e-3
    assert abs(od.xi_star - shifted.x0) <= g.h


def test_orbit_distance_dual_path_smooth():
    g = Grid(L=40.0, N=8192)
    base = mollified_peakon(PeakonParams(n=2, a=1.0, x0=0.3), 0.2, g)
    u = GridFunction(g, base.values + 0.01 * np.exp(-((g.x - 3.0)) ** 2))
    od = orbit_distance(u, PeakonParams(n=2, a=1.0))
    assert od.agreement <= 1e-5
    assert abs(od.xi_star - od.xi_identity) <= g.h


def test_orbit_distance_dual_path_cone_suite():
    p = PeakonParams(n=1, a=1.0)
    for name, u in _cone_suite().items():
        od = orbit_distance(u, p)
        assert od.agreement <= 1e-5, name


def test_orbit_distance_kinked_plus_bump():
    """Kinked samples limit the identity path; the loose agreement is expected."""
    g = Grid(L=40.0, N=8192)
    p = PeakonParams(n=2, a=1.0, x0=g.h / 2)
    bump = 0.01 * np.exp(-((g.x - 3.0)) ** 2)
    u = GridFunction(g, eval_peakon(p, 0.0, g.x) + bump)
    ux = GridFunction(g, eval_peakon_dx(p, 0.0, g.x) + np.gradient(bump, g.h))
    od = orbit_distance(u, p, ux=ux, kinked=True)
    assert od.d == pytest.approx(0.0146, abs=5e-3)
    assert od.agreement <= 5e-2


def test_sup_bound_guo46():
    for name, u in _decaying_suite().items():
        M = float(np.max(u.values))
        assert M * M <= H1(u) / 2.0 + 1e-10, name


def test_periodic_peakon_energy():
    from hoch.functionals import periodic_peakon_energy
    from hoch.grid import wrap_displacement
    a, xi = 1.3, 0.7
    phi = periodic_peakon(GRID, a, xi)
    s = wrap_displacement(GRID, GRID.x - xi)
    dphi = GridFunction(GRID, -np.sign(s) * a
                        * np.sinh(0.5 * GRID.L - np.abs(s)) / np.sinh(0.5 * GRID.L))
    exact = periodic_peakon_energy(a, GRID.L)
    assert exact == pytest.approx(2.0 * a * a, rel=1e-12)
    assert H1(phi, dphi) == pytest.approx(exact, rel=1e-4)


def test_exp_fit_crest_exact_on_peakon():
    g = Grid(L=40.0, N=8192)
    p = PeakonParams(n=1, a=1.7, x0=0.3 * g.h)
    u = GridFunction(g, eval_peakon(p, 0.0, g.x))
    xi, A = exp_fit_crest(u)
    assert xi == pytest.approx(p.x0, abs=1e-12)
    assert A == pytest.approx(p.a, rel=1e-12)


def test_functional_report_roundtrip():
    u = _cone_suite()["sech_w1"]
    rep = functional_report(u, build_coeff_table(2))
    d = rep.as_dict()
    assert set(d) == {"H1", "H2", "H2_hat", "M", "argmax", "g_sq_integral",
                      "hg_sq_integral", "ineq33_residual", "cone_ok"}
    assert d["cone_ok"] is True
    assert d["M"] == pytest.approx(1.0, abs=1e-6)


def test_perturbation_probe():
    g = Grid(L=40.0, N=8192)
    a = 1.0
    p = PeakonParams(n=2, a=a, x0=g.h / 2)
    base = GridFunction(g, eval_peakon(p, 0.0, g.x))
    ux_base = GridFunction(g, eval_peakon_dx(p, 0.0, g.x))
    bump = GridFunction.sample(g, lambda x: np.exp(-((x + 2.0) / 1.5) ** 2))
    records = perturbation_continuity_probe(base, bump, p, build_coeff_table(2),
                                            [0.1, 0.05, 0.01], ux_base=ux_base)
    gamma = 4.0
    for r in records:
        assert r["h1_ratio"] <= gamma * a
        assert np.isfinite(r["h2_ratio"])
    ratios = [r["h2_ratio"] for r in records]
    assert max(ratios) / min(ratios) <= 1.5      # stable across the sweep
    # eps -> 0: differences vanish
    assert records[-1]["h1_ratio"] * records[-1]["eps_measured"] < 0.05


def test_sup_bound_random_bandlimited():
    """The sup bound M^2 <= H1/2 holds for arbitrary grid functions."""
    from hypothesis import given, settings
    from hypothesis import strategies as st

    g = Grid(L=40.0, N=512)

    @given(st.lists(st.floats(min_value=-2.0, max_value=2.0),
                    min_size=6, max_size=6),
           st.floats(min_value=0.0, max_value=40.0))
    @settings(max_examples=40, deadline=None)
    def check(coefs, shift):
        vals = sum(c * np.cos(2 * np.pi * (j + 1) * (g.x + shift) / g.L)
                   for j, c in enumerate(coefs))
        u = GridFunction(g, np.asarray(vals) + 0.0 * g.x)
        M = float(np.max(np.abs(u.values)))
        assert M * M <= H1(u) / 2.0 + 1e-10

    check()
