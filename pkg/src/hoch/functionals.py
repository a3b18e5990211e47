"""Conserved functionals, the split functionals g and h, and orbit distance.

Plain H1/H2 are periodic trapezoid quadratures.  The identities that involve
splitting at the crest (the g^2 and h g^2 integrals, and the direct-path orbit
distance) integrate each smooth branch over its half circle with a fourth-order
arc rule, so that the crest kink costs no accuracy.

The orbit distance to the peakon family uses the periodized peakon profile
a cosh(L/2 - |s|) / sinh(L/2), whose H1 pairing against any grid function is
exactly 2 a u(xi) on the circle; the line and periodized profiles differ by
O(exp(-L/2)), far below every tolerance used here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from .exact import CoeffTable
from .grid import (Grid, GridFunction, derivative, integrate_arc,
                   interp_periodic, refine_argmax, second_derivative,
                   trapezoid, wrap_displacement)
from .peakon import PeakonParams

CONE_TOL = 1e-10


# ----------------------------------------------------------------------------
# plain functionals


def H1(u: GridFunction, ux: Optional[GridFunction] = None,
       scheme: str = "spectral") -> float:
    """Trapezoid quadrature of u^2 + u_x^2.

    A closed-form derivative can be passed for kinked profiles, where any
    discrete differentiation of the samples is O(1) wrong at the crest.
    """
    if ux is None:
        ux = derivative(u, scheme)
    vals = u.values ** 2 + ux.values ** 2
    return trapezoid(GridFunction(u.grid, vals))


def _h2_weights(table: CoeffTable) -> np.ndarray:
    n = table.n
    from .exact import binomial
    return np.array([float(binomial(n, k)) * (-1) ** (k + 1) / (2 * k - 1)
                     for k in range(1, n + 1)])


def h2_integrand(uv: np.ndarray, uxv: np.ndarray, table: CoeffTable) -> np.ndarray:
    n = table.n
    w = _h2_weights(table)
    ux2 = uxv * uxv
    out = uv ** (2 * n + 1)
    pw = np.ones_like(uv)
    for k in range(1, n + 1):
        pw = pw * ux2
        out = out + w[k - 1] * uv ** (2 * n + 1 - 2 * k) * pw
    return out


def H2(u: GridFunction, table: CoeffTable, ux: Optional[GridFunction] = None,
       scheme: str = "spectral") -> float:
    """Trapezoid quadrature of u^(2n+1) + sum_k (-1)^(k+1)/(2k-1) C(n,k) u^(2n-2k+1) u_x^(2k)."""
    if ux is None:
        ux = derivative(u, scheme)
    return trapezoid(GridFunction(u.grid, h2_integrand(u.values, ux.values, table)))


def H2_hat(u: GridFunction, table: CoeffTable, scheme: str = "spectral") -> float:
    """Quadrature of (u^2 - u_x^2)^n m / (2n); 2n * H2_hat matches H2 in the continuum."""
    n = table.n
    ux = derivative(u, scheme)
    m = u.values - second_derivative(u, scheme).values
    vals = (u.values ** 2 - ux.values ** 2) ** n * m / (2.0 * n)
    return trapezoid(GridFunction(u.grid, vals))


# ----------------------------------------------------------------------------
# crest location and arc integration


def crest(u: GridFunction, kinked: bool = False):
    """(xi, M, ties): refined crest abscissa and height."""
    return refine_argmax(u, kinked=kinked)


def exp_fit_crest(u: GridFunction):
    """Crest of a peakon-like kinked profile by two-sided exponential fit.

    Near the crest the profile is A e^(-|x - xi|); matching log-values of the
    two samples bracketing the kink recovers (xi, A) exactly for that model.
    """
    v = u.values
    g = u.grid
    j = int(np.argmax(v))
    jl = (j - 1) % g.N
    jr = (j + 1) % g.N
    # the kink lies between j and its larger neighbor
    if v[jr] >= v[jl]:
        m0, m1 = j, jr
    else:
        m0, m1 = jl, j
    if v[m0] <= 0 or v[m1] <= 0:
        return refine_argmax(u, kinked=True)[:2]
    mid = g.x[m0] + 0.5 * g.h
    xi = mid + 0.5 * (math.log(v[m1]) - math.log(v[m0]))
    xi = float(np.clip(xi, g.x[m0], g.x[m0] + g.h))
    A = v[m0] * math.exp(xi - g.x[m0])
    return xi, float(A)


# ----------------------------------------------------------------------------
# split functionals


def g_branches(u: GridFunction, ux: Optional[GridFunction] = None,
               scheme: str = "spectral"):
    if ux is None:
        ux = derivative(u, scheme)
    return u.values - ux.values, u.values + ux.values


def g_split(u: GridFunction, xi: float, ux: Optional[GridFunction] = None,
            scheme: str = "spectral") -> GridFunction:
    """g = u - u_x left of the crest, u + u_x right of it (by wrapped displacement)."""
    gl, gr = g_branches(u, ux, scheme)
    _, _, ties = refine_argmax(u)
    if ties:
        warnings.warn("multiple global maxima within tie tolerance; crest split is ambiguous")
    s = wrap_displacement(u.grid, u.grid.x - xi)
    return GridFunction(u.grid, np.where(s < 0.0, gl, gr))


def _effectively_positive(u: GridFunction) -> bool:
    # tolerate roundoff-level negative samples in far tails of positive profiles
    scale = float(np.max(np.abs(u.values))) or 1.0
    return float(np.min(u.values)) > -1e-13 * scale


def h_branches(u: GridFunction, table: CoeffTable,
               ux: Optional[GridFunction] = None, scheme: str = "spectral"):
    if not _effectively_positive(u):
        raise ValueError("h requires a positive profile")
    if ux is None:
        ux = derivative(u, scheme)
    n = table.n
    uv, uxv = u.values, ux.values
    hl = uv ** (2 * n - 1)
    hr = hl.copy()
    pw = np.ones_like(uv)
    for k in range(1, 2 * n - 1):
        pw = pw * uxv
        base = uv ** (2 * n - 1 - k) * pw
        hl = hl + float(table.c[k]) * base
        hr = hr + float(table.d[k]) * base
    return hl, hr


def h_func(u: GridFunction, xi: float, table: CoeffTable,
           ux: Optional[GridFunction] = None, scheme: str = "spectral") -> GridFunction:
    """h with c-coefficients left of the crest and d-coefficients right of it."""
    hl, hr = h_branches(u, table, ux, scheme)
    s = wrap_displacement(u.grid, u.grid.x - xi)
    return GridFunction(u.grid, np.where(s < 0.0, hl, hr))


def _split_integral(left_vals: np.ndarray, right_vals: np.ndarray,
                    grid: Grid, xi: float) -> float:
    half = 0.5 * grid.L
    left = integrate_arc(left_vals, grid, xi - half, xi)
    right = integrate_arc(right_vals, grid, xi, xi + half)
    return left + right


def g_sq_integral(u: GridFunction, xi: float, ux: Optional[GridFunction] = None,
                  scheme: str = "spectral") -> float:
    gl, gr = g_branches(u, ux, scheme)
    return _split_integral(gl * gl, gr * gr, u.grid, xi)


def hg_sq_integral(u: GridFunction, xi: float, table: CoeffTable,
                   ux: Optional[GridFunction] = None, scheme: str = "spectral") -> float:
    gl, gr = g_branches(u, ux, scheme)
    hl, hr = h_branches(u, table, ux, scheme)
    return _split_integral(hl * gl * gl, hr * gr * gr, u.grid, xi)


def cone_condition(u: GridFunction, ux: Optional[GridFunction] = None,
                   scheme: str = "spectral", tol: float = CONE_TOL) -> bool:
    """u > 0 and u +- u_x >= -tol * scale everywhere (roundoff-tolerant)."""
    if ux is None:
        ux = derivative(u, scheme)
    scale = float(np.max(np.abs(u.values))) or 1.0
    return bool(_effectively_positive(u)
                and np.min(u.values - np.abs(ux.values)) >= -tol * scale)


def stability_inequality_residual(u: GridFunction, table: CoeffTable,
                                  ux: Optional[GridFunction] = None,
                                  scheme: str = "spectral", kinked: bool = False):
    """Residual of the sharp M-H1-H2 inequality; nonpositive on the cone.

    Returns (residual, scale, cone_ok); the inequality is only guaranteed when
    cone_ok is True.
    """
    if ux is None:
        ux = derivative(u, scheme)
    n = table.n
    tm = float(table.two_minus_c1)
    if kinked:
        _, M = exp_fit_crest(u)
    else:
        _, M, _ = refine_argmax(u)
    e = H1(u, ux)
    f = H2(u, table, ux)
    t1 = (2 * n - 1) * tm / (2 * n + 1) * M ** (2 * n + 1)
    t2 = tm / 2.0 * M ** (2 * n - 1) * e
    residual = t1 - t2 + f
    scale = abs(t1) + abs(t2) + abs(f)
    return residual, scale, cone_condition(u, ux)


# ----------------------------------------------------------------------------
# orbit distance


def periodic_peakon(grid: Grid, a: float, xi: float) -> GridFunction:
    """The periodized peakon 2 a p_L(x - xi) on the circle."""
    s = np.abs(wrap_displacement(grid, grid.x - xi))
    return GridFunction(grid, a * np.cosh(0.5 * grid.L - s) / np.sinh(0.5 * grid.L))


def periodic_peakon_energy(a: float, L: float) -> float:
    return 2.0 * a * a / np.tanh(0.5 * L)


def _orbit_branch_values(u: GridFunction, uxv: np.ndarray, a: float, xi: float):
    """Branch integrands of |u - peakon(. - xi)|_{H1}^2 on unwrapped displacements.

    The displacement wrap is pushed a few cells away from the crest so that
    the end-cell cubic stencils of the arc rule see the smooth continuation of
    their own branch across xi.
    """
    g = u.grid
    sh = np.sinh(0.5 * g.L)
    margin = 4.0 * g.h
    s_right = (g.x - xi + margin) % g.L - margin     # in [-margin, L - margin)
    s_left = (g.x - xi - margin) % g.L + margin - g.L  # in (margin - L, margin]
    phi_r = a * np.cosh(0.5 * g.L - s_right) / sh
    dphi_r = -a * np.sinh(0.5 * g.L - s_right) / sh
    phi_l = a * np.cosh(0.5 * g.L + s_left) / sh
    dphi_l = a * np.sinh(0.5 * g.L + s_left) / sh
    fr = (u.values - phi_r) ** 2 + (uxv - dphi_r) ** 2
    fl = (u.values - phi_l) ** 2 + (uxv - dphi_l) ** 2
    return fl, fr


def _orbit_direct_sq(u: GridFunction, uxv: np.ndarray, a: float, xi: float) -> float:
    fl, fr = _orbit_branch_values(u, uxv, a, xi)
    return _split_integral(fl, fr, u.grid, xi)


def _correlation_shift(u: GridFunction, uxv: np.ndarray, a: float) -> float:
    """Grid shift maximizing the H1 cross-correlation with the peakon profile."""
    g = u.grid
    s = wrap_displacement(g, g.x - g.x[0])
    sh = np.sinh(0.5 * g.L)
    phi0 = a * np.cosh(0.5 * g.L - np.abs(s)) / sh
    dphi0 = -np.sign(s) * a * np.sinh(0.5 * g.L - np.abs(s)) / sh
    num = (np.fft.rfft(u.values) * np.conj(np.fft.rfft(phi0))
           + np.fft.rfft(uxv) * np.conj(np.fft.rfft(dphi0)))
    corr = np.fft.irfft(num, n=g.N)
    return float(g.x[np.argmax(corr)])


@dataclass(frozen=True)
class OrbitDistance:
    d: float
    xi_star: float
    d_identity: float
    xi_identity: float

    @property
    def agreement(self) -> float:
        ref = max(self.d, self.d_identity, 1e-30)
        return abs(self.d - self.d_identity) / ref


def orbit_distance(u: GridFunction, p: PeakonParams,
                   ux: Optional[GridFunction] = None, scheme: str = "spectral",
                   kinked: bool = False, method: str = "both") -> OrbitDistance:
    """min over shifts xi of |u - peakon(. - xi)|_{H1}.

    Direct path: golden-section minimization of the quadrature of the
    squared-difference integrand.  Identity path: H1(u) + E(peakon)
    - 4 a u(xi) evaluated at the crest of u.  Both are reported.
    """
    a = p.a
    g = u.grid
    if ux is None:
        ux = derivative(u, scheme)
    uxv = ux.values

    e_u = H1(u, ux)
    e_phi = periodic_peakon_energy(a, g.L)

    if kinked:
        xi_id, M = exp_fit_crest(u)
    else:
        xi_id, M, _ = refine_argmax(u)
        M = interp_periodic(u, xi_id)
    d2_id = max(e_u + e_phi - 4.0 * a * M, 0.0)
    d_id = math.sqrt(d2_id)

    if method == "identity":
        return OrbitDistance(d_id, xi_id, d_id, xi_id)

    xi0 = _correlation_shift(u, uxv, a)
    lo, hi = xi0 - 1.5 * g.h, xi0 + 1.5 * g.h
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1 = _orbit_direct_sq(u, uxv, a, x1)
    f2 = _orbit_direct_sq(u, uxv, a, x2)
    for _ in range(60):
        if hi - lo < 1e-11 * max(1.0, abs(xi0)):
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = _orbit_direct_sq(u, uxv, a, x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = _orbit_direct_sq(u, uxv, a, x2)
    if f1 <= f2:
        xi_star, d2 = x1, f1
    else:
        xi_star, d2 = x2, f2
    d = math.sqrt(max(d2, 0.0))
    return OrbitDistance(d, float(xi_star), d_id, xi_id)


# ----------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class FunctionalReport:
    H1: float
    H2: float
    H2_hat: float
    M: float
    argmax: float
    g_sq_integral: float
    hg_sq_integral: float
    ineq33_residual: float
    cone_ok: bool

    def as_dict(self) -> dict:
        return asdict(self)


def functional_report(u: GridFunction, table: CoeffTable,
                      ux: Optional[GridFunction] = None,
                      scheme: str = "spectral") -> FunctionalReport:
    if ux is None:
        ux = derivative(u, scheme)
    xi, M, _ = refine_argmax(u)
    res, _, cone_ok = stability_inequality_residual(u, table, ux)
    return FunctionalReport(
        H1=H1(u, ux),
        H2=H2(u, table, ux),
        H2_hat=H2_hat(u, table, scheme),
        M=M,
        argmax=xi,
        g_sq_integral=g_sq_integral(u, xi, ux),
        hg_sq_integral=hg_sq_integral(u, xi, table, ux),
        ineq33_residual=res,
        cone_ok=cone_ok,
    )


def perturbation_continuity_probe(u_base: GridFunction, bump: GridFunction,
                                  p: PeakonParams, table: CoeffTable,
                                  eps_list, ux_base: Optional[GridFunction] = None):
    """H1/H2 response ratios along u = base + eps * (bump normalized in H1).

    Returns one record per eps with the measured grid distance and the
    difference quotients |H1(u)-H1(base)|/eps, |H2(u)-H2(base)|/eps.
    """
    g = u_base.grid
    norm = math.sqrt(H1(bump))
    w = bump.values / norm
    wx = derivative(GridFunction(g, w)).values
    if ux_base is None:
        ux_base = derivative(u_base)
    h1_0, h2_0 = H1(u_base, ux_base), H2(u_base, table, ux_base)
    records = []
    for eps in eps_list:
        uv = u_base.values + eps * w
        uxv = ux_base.values + eps * wx
        u = GridFunction(g, uv)
        ux = GridFunction(g, uxv)
        eps_measured = math.sqrt(max(trapezoid(GridFunction(
            g, (uv - u_base.values) ** 2 + (uxv - ux_base.values) ** 2)), 0.0))
        dh1 = abs(H1(u, ux) - h1_0)
        dh2 = abs(H2(u, table, ux) - h2_0)
        records.append({
            "eps": float(eps),
            "eps_measured": eps_measured,
            "h1_ratio": dh1 / eps_measured,
            "h2_ratio": dh2 / eps_measured,
        })
    return records
