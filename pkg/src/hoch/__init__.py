"""Toolkit for a generalized higher-order Camassa-Holm equation family:
exact coefficient identities, peakon closed forms, conserved-functional
machinery, pseudospectral evolution, weak-solution residuals, and the
orbital-stability scaling experiment."""

from .exact import (CoeffTable, Rational, binomial, build_coeff_table,
                    double_factorial)
from .grid import Grid, GridFunction, derivative, helmholtz_inverse
from .peakon import PeakonParams, eval_peakon, eval_peakon_dx, peakon_H1, peakon_H2
from .solver import SolverConfig, TrajectoryRecord, mollified_peakon, run

__all__ = [
    "CoeffTable", "Rational", "binomial", "build_coeff_table", "double_factorial",
    "Grid", "GridFunction", "derivative", "helmholtz_inverse",
    "PeakonParams", "eval_peakon", "eval_peakon_dx", "peakon_H1", "peakon_H2",
    "SolverConfig", "TrajectoryRecord", "mollified_peakon", "run",
]

__version__ = "0.1.0"
