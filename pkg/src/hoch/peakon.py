"""Closed-form peakon solutions and the exact values of the conserved functionals.

The traveling wave is a*exp(-|x - x0 - c t|) with speed c tied to the
amplitude through the exact rational constant from `exact.build_coeff_table`.
All combinatorial constants are converted from exact rationals to floats in
one place, here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exact import CoeffTable, build_coeff_table


@dataclass(frozen=True)
class PeakonParams:
    """Peakon of order n, amplitude a > 0, crest at x0 + c t."""

    n: int
    a: float
    x0: float = 0.0
    c: float = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"order n must be a positive integer, got {self.n}")
        if self.a <= 0:
            raise ValueError(f"amplitude must be positive, got {self.a}")
        object.__setattr__(self, "c", self.a ** (2 * self.n - 1)
                           * float(build_coeff_table(self.n).speed_const))

    @property
    def table(self) -> CoeffTable:
        return build_coeff_table(self.n)

    def crest(self, t: float) -> float:
        return self.x0 + self.c * t


def eval_peakon(p: PeakonParams, t: float, x):
    """u(t, x) = a exp(-|x - x0 - c t|); vectorizes over x."""
    s = np.asarray(x, dtype=float) - p.crest(t)
    out = p.a * np.exp(-np.abs(s))
    return out if out.ndim else float(out)


def eval_peakon_dx(p: PeakonParams, t: float, x):
    """Spatial derivative -sgn(x - crest) * u; 0 at the crest by convention."""
    s = np.asarray(x, dtype=float) - p.crest(t)
    out = -np.sign(s) * p.a * np.exp(-np.abs(s))
    return out if out.ndim else float(out)


def peakon_H1(p: PeakonParams) -> float:
    """The energy integral of u^2 + u_x^2 on the peakon equals 2 a^2."""
    return 2.0 * p.a * p.a


def peakon_H2_exact(n: int, a: Fraction) -> Fraction:
    """H2 on the peakon: (2 a^(2n+1) / (2n+1)) * (2 - c1), exactly."""
    a = Fraction(a)
    table = build_coeff_table(n)
    return Fraction(2, 2 * n + 1) * a ** (2 * n + 1) * table.two_minus_c1


def peakon_H2(p: PeakonParams) -> float:
    table = build_coeff_table(p.n)
    return (2.0 / (2 * p.n + 1)) * p.a ** (2 * p.n + 1) * float(table.two_minus_c1)


def sobolev_sharpness(p: PeakonParams) -> tuple:
    """(sup |u|, sqrt(H1)/sqrt(2)): the sup bound is attained with equality."""
    sup = p.a
    bound = math.sqrt(peakon_H1(p)) / math.sqrt(2.0)
    return sup, bound
