"""Quadrature-based residual of the weak-solution integral identity.

A candidate peaked traveling wave u = a exp(-|x - x0 - c t|) is paired with a
smooth compactly supported bump phi(t, x); the five integral terms of the weak
form plus the initial-data term are evaluated with composite Gauss-Legendre
panels whose cells are corrected at the two integrand kinks (the candidate's
crest line and the convolution-kernel kink).  For the true speed the residual
converges to zero under panel refinement; for a wrong speed it converges to a
nonzero limit whose sign follows the sign of the speed error.

All polynomial structure collapses on the peaked shape: with u_x = -sgn * u,

    flux kernel      A(y) = C_A a^(2n) exp(-2n |y - s|)
    odd-power kernel B(y) = -sgn(y - s) C_B a^(2n) exp(-2n |y - s|)

with C_A, C_B the exact coefficient sums from the evolution form.  Candidates
are members of the peaked family (with the speed free); verifying arbitrary
grid trajectories to comparable precision is out of scope, since their
discretization error dominates the residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .exact import build_coeff_table
from .solver import rhs_coefficients_exact

_GL_CACHE = {}


def _gl(q: int) -> Tuple[np.ndarray, np.ndarray]:
    if q not in _GL_CACHE:
        _GL_CACHE[q] = np.polynomial.legendre.leggauss(q)
    return _GL_CACHE[q]


def _panel_rule(a: float, b: float, panels: int, q: int = 8):
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b]."""
    nodes, wts = _gl(q)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    rad = 0.5 * (edges[1] - edges[0])
    x = (mid[:, None] + rad * nodes[None, :]).ravel()
    w = np.broadcast_to(rad * wts[None, :], (panels, q)).ravel().copy()
    return x, w


def bump(s: np.ndarray) -> np.ndarray:
    """The standard C-infinity bump exp(-1/(1-s^2)) on (-1, 1), 0 outside."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(-1.0 / (1.0 - si * si))
    return out


def bump_d(s: np.ndarray) -> np.ndarray:
    """Derivative of the standard bump."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    r = 1.0 - si * si
    out[inside] = np.exp(-1.0 / r) * (-2.0 * si / (r * r))
    return out


@dataclass(frozen=True)
class TestFunction:
    """phi(t, x) = bump((x-center)/width) * bump((t-t_center)/t_width)."""

    center: float
    width: float
    t_center: float
    t_width: float

    def __post_init__(self):
        if self.width <= 0 or self.t_width <= 0:
            raise ValueError("bump widths must be positive")

    def phi(self, t, x):
        return bump((np.asarray(x) - self.center) / self.width) \
            * bump((np.asarray(t) - self.t_center) / self.t_width)

    def phi_x(self, t, x):
        return bump_d((np.asarray(x) - self.center) / self.width) / self.width \
            * bump((np.asarray(t) - self.t_center) / self.t_width)

    def phi_t(self, t, x):
        return bump((np.asarray(x) - self.center) / self.width) \
            * bump_d((np.asarray(t) - self.t_center) / self.t_width) / self.t_width

    @property
    def x_support(self):
        return self.center - self.width, self.center + self.width

    @property
    def t_support(self):
        return max(0.0, self.t_center - self.t_width), self.t_center + self.t_width


@dataclass(frozen=True)
class PeakonCandidate:
    """Peaked traveling-wave candidate; speed_factor != 1 breaks the speed law."""

    n: int
    a: float
    x0: float = 0.0
    speed_factor: float = 1.0

    @property
    def true_speed(self) -> float:
        return self.a ** (2 * self.n - 1) * float(build_coeff_table(self.n).speed_const)

    @property
    def c(self) -> float:
        return self.speed_factor * self.true_speed

    def crest(self, t):
        return self.x0 + self.c * np.asarray(t, dtype=float)

    def u(self, t, x):
        return self.a * np.exp(-np.abs(np.asarray(x) - self.crest(t)))

    def u0(self, x):
        return self.u(0.0, x)

    def kernel_constants(self) -> Tuple[float, float]:
        """(C_A, C_B): exact coefficient sums of the flux and odd-power kernels."""
        _, alpha, beta = rhs_coefficients_exact(self.n)
        c_a = 1.0 + float(sum(alpha.values()))
        c_b = float(sum(beta.values())) if beta else 0.0
        return c_a, c_b


@dataclass(frozen=True)
class WeakResidual:
    value: float
    scale: float
    quadrature_level: int
    richardson_estimate: float
    terms: tuple

    def as_dict(self) -> dict:
        return {
            "residual": self.value,
            "scale": self.scale,
            "level": self.quadrature_level,
            "richardson": self.richardson_estimate,
            "terms": list(self.terms),
        }


# ----------------------------------------------------------------------------
# convolutions against the peaked kernels


def _kink_correction(f, lo: np.ndarray, mid: np.ndarray, hi: np.ndarray, q: int = 8):
    """GL([lo,mid]) + GL([mid,hi]) - GL([lo,hi]) for a batch of kinked cells."""
    nodes, wts = _gl(q)

    def seg(a, b):
        m, r = 0.5 * (a + b), 0.5 * (b - a)
        z = m[:, None] + r[:, None] * nodes[None, :]
        return np.sum(f(z) * (r[:, None] * wts[None, :]), axis=1)

    return seg(lo, mid) + seg(mid, hi) - seg(lo, hi)


def peakon_kernel_convolutions(n: int, xi: np.ndarray, panel_width: float,
                               q: int = 8, window: float = 24.0):
    """conv_even(xi) and conv_odd(xi) of exp(-2n|z|) and sgn(z) exp(-2n|z|)
    against the kernel exp(-|.|)/2, by composite GL split at both kinks."""
    xi = np.asarray(xi, dtype=float)
    beta = 2.0 * n
    panels_half = max(1, int(math.ceil(window / panel_width)))
    W = panels_half * panel_width
    z, w = _panel_rule(-W, W, 2 * panels_half, q)
    f_even = np.exp(-beta * np.abs(z))
    f_odd = np.sign(z) * f_even

    even = np.empty_like(xi)
    odd = np.empty_like(xi)
    chunk = 4096
    for i0 in range(0, xi.size, chunk):
        xs = xi[i0:i0 + chunk]
        ker = 0.5 * np.exp(-np.abs(xs[:, None] - z[None, :]))
        even[i0:i0 + chunk] = ker @ (w * f_even)
        odd[i0:i0 + chunk] = ker @ (w * f_odd)

    # correct the panel containing the kernel kink z = xi
    inside = np.abs(xi) < W
    if np.any(inside):
        xs = xi[inside]
        ip = np.clip(np.floor((xs + W) / panel_width).astype(int), 0, 2 * panels_half - 1)
        lo = -W + ip * panel_width
        hi = lo + panel_width

        def correct(fvals):
            def f(zz):
                return 0.5 * np.exp(-np.abs(xs[:, None] - zz)) * fvals(zz)
            return _kink_correction(f, lo, xs, hi, q)

        even[inside] += correct(lambda zz: np.exp(-beta * np.abs(zz)))
        odd[inside] += correct(lambda zz: np.sign(zz) * np.exp(-beta * np.abs(zz)))
    return even, odd


# ----------------------------------------------------------------------------
# the weak-form residual


def _x_rule_with_crest(phi: TestFunction, panels: int, q: int = 8):
    xlo, xhi = phi.x_support
    return _panel_rule(xlo, xhi, panels, q), (xlo, xhi)


def weak_residual(cand: PeakonCandidate, phi: TestFunction, level: int,
                  q: int = 10, prev_value: Optional[float] = None) -> WeakResidual:
    """All terms of the weak identity at one refinement level.

    level L uses 2^L time panels, 2^(L+1) space panels, and convolution panels
    of width 2^(3-L) (floored at 1/2), all with q-point Gauss-Legendre cells.
    """
    if level < 1:
        raise ValueError("quadrature level must be >= 1")
    pt = 2 ** level
    px = 2 ** (level + 1)
    conv_w = max(0.5, 2.0 ** (3 - level))

    n, a = cand.n, cand.a
    c_a, c_b = cand.kernel_constants()
    amp = a ** (2 * n)

    t0, t1 = phi.t_support
    if t1 <= t0:
        raise ValueError("test function has no support in t >= 0")
    tq, tw = _panel_rule(t0, t1, pt, q)
    (xq, xw), (xlo, xhi) = _x_rule_with_crest(phi, px, q)

    def inner_terms(ts: np.ndarray):
        """Spatial integrals of the five space-time integrands at times ts."""
        s = cand.crest(ts)                       # crest per time
        X = xq[None, :]
        XI = X - s[:, None]
        U = a * np.exp(-np.abs(XI))
        PH = phi.phi(ts[:, None], X)
        PHX = phi.phi_x(ts[:, None], X)
        PHT = phi.phi_t(ts[:, None], X)
        B_loc = -np.sign(XI) * c_b * amp * np.exp(-2 * n * np.abs(XI))
        conv_e, conv_o = peakon_kernel_convolutions(n, XI.ravel(), conv_w, q)
        psi_a = c_a * amp * conv_e.reshape(XI.shape)
        psi_b = -c_b * amp * conv_o.reshape(XI.shape)

        t1v = (U * PHT) @ xw
        t2v = (U ** (2 * n) / (2 * n) * PHX) @ xw
        t3v = (B_loc * PH) @ xw
        t4v = (psi_a * PHX) @ xw
        t5v = -(psi_b * PH) @ xw

        # correct the spatial panel crossed by the crest
        inside = (s > xlo) & (s < xhi)
        if np.any(inside):
            si = s[inside]
            ti = ts[inside]
            pwidth = (xhi - xlo) / px
            ip = np.clip(np.floor((si - xlo) / pwidth).astype(int), 0, px - 1)
            lo = xlo + ip * pwidth
            hi = lo + pwidth

            def make_f(which):
                def f(xx):
                    xiq = xx - si[:, None]
                    uu = a * np.exp(-np.abs(xiq))
                    if which == 1:
                        return uu * phi.phi_t(ti[:, None], xx)
                    if which == 2:
                        return uu ** (2 * n) / (2 * n) * phi.phi_x(ti[:, None], xx)
                    if which == 3:
                        bb = -np.sign(xiq) * c_b * amp * np.exp(-2 * n * np.abs(xiq))
                        return bb * phi.phi(ti[:, None], xx)
                    ce, co = peakon_kernel_convolutions(n, xiq.ravel(), conv_w, q)
                    if which == 4:
                        return (c_a * amp * ce.reshape(xiq.shape)
                                * phi.phi_x(ti[:, None], xx))
                    return (c_b * amp * co.reshape(xiq.shape)
                            * phi.phi(ti[:, None], xx))
                return f

            for which, target in ((1, t1v), (2, t2v), (3, t3v), (4, t4v), (5, t5v)):
                target[inside] += _kink_correction(make_f(which), lo, si, hi, q)
        return t1v, t2v, t3v, t4v, t5v

    inner = inner_terms(tq)
    terms = [float(np.dot(tw, v)) for v in inner]

    # initial-data term: present only if phi(0, .) is nonzero
    t6 = 0.0
    if phi.t_center - phi.t_width < 0.0:
        s0 = float(cand.crest(0.0))
        u0 = lambda xx: a * np.exp(-np.abs(xx - s0))
        f0 = lambda xx: u0(xx) * phi.phi(0.0, xx)
        t6 = float(np.dot(f0(xq), xw))
        if xlo < s0 < xhi:
            pwidth = (xhi - xlo) / px
            ip = int(np.clip(math.floor((s0 - xlo) / pwidth), 0, px - 1))
            lo = np.array([xlo + ip * pwidth])
            t6 += float(_kink_correction(lambda xx: f0(xx), lo,
                                         np.array([s0]), lo + pwidth, q)[0])
    terms.append(t6)

    value = float(sum(terms))
    scale = float(sum(abs(t) for t in terms))
    richardson = abs(value - prev_value) if prev_value is not None else math.nan
    return WeakResidual(value=value, scale=scale, quadrature_level=level,
                        richardson_estimate=richardson, terms=tuple(terms))


def weak_scan(cand: PeakonCandidate, phi: TestFunction, levels: int,
              q: int = 10) -> List[WeakResidual]:
    """Residuals at levels 1..levels with Richardson estimates chained."""
    out: List[WeakResidual] = []
    prev = None
    for lv in range(1, levels + 1):
        r = weak_residual(cand, phi, lv, q=q, prev_value=prev)
        out.append(r)
        prev = r.value
    return out


def observed_order(scan: List[WeakResidual], floor: float = 1e-12) -> float:
    """Convergence order from the last pair of levels above the roundoff floor.

    Residuals that fall below floor * scale are treated as converged, which
    reports as a large order.
    """
    vals = [abs(r.value) for r in scan]
    scl = max(r.scale for r in scan)
    cut = floor * scl
    if vals[-1] <= cut:
        return math.inf
    orders = []
    for i in range(1, len(vals)):
        if vals[i - 1] > cut and vals[i] > cut and vals[i] < vals[i - 1]:
            orders.append(math.log2(vals[i - 1] / vals[i]))
    return max(orders) if orders else 0.0


# ----------------------------------------------------------------------------
# sampled-kernel convolution


def kernel_convolve(ys: np.ndarray, fs: np.ndarray, x: float,
                    decay_tol: float = 1e-12, kinks=()) -> float:
    """Convolve sampled data against exp(-|x-y|)/2 by kink-split quadrature.

    The samples must live on a uniform grid wide enough that |f| has decayed
    at both ends; the cell containing y = x is split at the kernel kink, and f
    is interpolated by local cubics (4-point GL per cell).  Known kinks of f
    at sample points can be declared so the interpolation stencils stay
    one-sided there.
    """
    ys = np.asarray(ys, dtype=float)
    fs = np.asarray(fs, dtype=float)
    if ys.ndim != 1 or ys.shape != fs.shape or ys.size < 8:
        raise ValueError("need matching 1-d sample arrays with at least 8 points")
    h = ys[1] - ys[0]
    if not np.allclose(np.diff(ys), h, rtol=1e-9):
        raise ValueError("sample grid must be uniform")
    fmax = float(np.max(np.abs(fs))) or 1.0
    if abs(fs[0]) > decay_tol * fmax or abs(fs[-1]) > decay_tol * fmax:
        raise ValueError("sample window too small: integrand has not decayed")

    ncell = ys.size - 1
    # cubic stencil for cell j uses samples j-1..j+2, clamped at the ends
    j = np.arange(ncell)
    base = np.clip(j - 1, 0, ys.size - 4)
    for yk in kinks:
        k = int(round((yk - ys[0]) / h))
        if abs(yk - (ys[0] + k * h)) > 1e-9 * max(1.0, abs(yk)):
            raise ValueError(f"declared kink {yk} is not a sample point")
        if 1 <= k - 1 < ncell:
            base[k - 1] = max(k - 3, 0)
        if 0 <= k < ncell:
            base[k] = min(k, ys.size - 4)
    stencil = fs[base[:, None] + np.arange(4)[None, :]]

    nodes, wts = _gl(4)

    def cell_integral(lo: np.ndarray, hi: np.ndarray, cells: np.ndarray) -> float:
        mid, rad = 0.5 * (lo + hi), 0.5 * (hi - lo)
        s = mid[:, None] + rad[:, None] * nodes[None, :]        # global y
        sl = (s - ys[base[cells], None]) / h                    # stencil coords
        t = sl
        l0 = -(t - 1) * (t - 2) * (t - 3) / 6.0
        l1 = t * (t - 2) * (t - 3) / 2.0
        l2 = -t * (t - 1) * (t - 3) / 2.0
        l3 = t * (t - 1) * (t - 2) / 6.0
        st = stencil[cells]
        fi = (st[:, 0, None] * l0 + st[:, 1, None] * l1
              + st[:, 2, None] * l2 + st[:, 3, None] * l3)
        ker = 0.5 * np.exp(-np.abs(x - s))
        return float(np.sum(ker * fi * (rad[:, None] * wts[None, :])))

    lo = ys[:-1].copy()
    hi = ys[1:].copy()
    kcell = int(np.clip(math.floor((x - ys[0]) / h), 0, ncell - 1))
    mask = np.ones(ncell, dtype=bool)
    mask[kcell] = False
    cells = np.arange(ncell)
    total = cell_integral(lo[mask], hi[mask], cells[mask])
    if ys[0] < x < ys[-1]:
        kc = np.array([kcell])
        total += cell_integral(np.array([lo[kcell]]), np.array([x]), kc)
        total += cell_integral(np.array([x]), np.array([hi[kcell]]), kc)
    else:
        total += cell_integral(np.array([lo[kcell]]), np.array([hi[kcell]]),
                               np.array([kcell]))
    return total
