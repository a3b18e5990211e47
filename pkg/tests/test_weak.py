"""Weak-solution residual quadrature: bump calculus, kernel convolutions,
and the residual contract on true and wrong-speed candidates."""

import math

import numpy as np
import pytest

from hoch.weak import (PeakonCandidate, TestFunction, bump, bump_d,
                       kernel_convolve, observed_order,
                       peakon_kernel_convolutions, weak_residual, weak_scan)


def test_bump_support_and_smoothness():
    s = np.array([-1.5, -1.0, -0.999, 0.0, 0.999, 1.0, 2.0])
    v = bump(s)
    assert v[0] == v[1] == v[5] == v[6] == 0.0
    assert v[3] == pytest.approx(math.exp(-1.0))
    assert v[2] < 1e-300 or v[2] >= 0.0   # vanishes to all orders at the edge
    d = bump_d(s)
    assert d[0] == d[6] == 0.0
    assert d[3] == 0.0
    # derivative matches finite difference in the interior
    eps = 1e-6
    fd = (bump(np.array([0.4 + eps])) - bump(np.array([0.4 - eps]))) / (2 * eps)
    assert bump_d(np.array([0.4]))[0] == pytest.approx(fd[0], rel=1e-8)


def test_test_function_validation():
    with pytest.raises(ValueError):
        TestFunction(center=0.0, width=-1.0, t_center=1.0, t_width=1.0)


def _conv_even_exact(n, xi):
    b = 2 * n
    return (b * np.exp(-np.abs(xi)) - np.exp(-b * np.abs(xi))) / (b * b - 1)


def _conv_odd_exact(n, xi):
    b = 2 * n
    return np.sign(xi) * (np.exp(-np.abs(xi)) - np.exp(-b * np.abs(xi))) / (b * b - 1)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_peakon_kernel_convolutions_closed_form(n):
    xi = np.array([-9.3, -1.7, -0.02, 0.0, 0.4, 2.0, 15.9])
    even, odd = peakon_kernel_convolutions(n, xi, 1.0)
    assert np.max(np.abs(even - _conv_even_exact(n, xi))) < 1e-10
    assert np.max(np.abs(odd - _conv_odd_exact(n, xi))) < 1e-10


def test_kernel_convolve_exponential_oracle():
    """p * exp(-|.|) = (1 + |x|) exp(-|x|) / 2 on the line."""
    ys = np.arange(-40.0, 40.0 + 1e-9, 1e-3)
    fs = np.exp(-np.abs(ys))
    for x in (0.0, 0.5, -2.3, 7.0):
        exact = 0.5 * (1.0 + abs(x)) * math.exp(-abs(x))
        got = kernel_convolve(ys, fs, x, kinks=(0.0,))
        assert got == pytest.approx(exact, abs=1e-10)


def test_kernel_convolve_zero_and_narrow_bump():
    ys = np.arange(-30.0, 30.0 + 1e-9, 2e-3)
    assert kernel_convolve(ys, np.zeros_like(ys), 1.0) == 0.0
    w = 0.02
    fs = np.exp(-(ys / w) ** 2)
    mass = w * math.sqrt(math.pi)
    x = 3.0
    assert kernel_convolve(ys, fs, x) == pytest.approx(
        0.5 * math.exp(-abs(x)) * mass, rel=1e-3)


def test_kernel_convolve_window_error():
    ys = np.arange(-3.0, 3.0 + 1e-9, 1e-2)
    fs = np.exp(-np.abs(ys))    # has not decayed at |y| = 3
    with pytest.raises(ValueError):
        kernel_convolve(ys, fs, 0.0)


@pytest.mark.parametrize("n", [1, 2])
def test_peakon_weak_residual_converges(n):
    cand = PeakonCandidate(n=n, a=1.0)
    phi = TestFunction(center=float(cand.crest(1.6)) - 4.0, width=3.5,
                       t_center=1.6, t_width=1.5)
    scan = weak_scan(cand, phi, 4)
    assert abs(scan[-1].value) <= 1e-6 * scan[-1].scale
    assert observed_order(scan) >= 2.0
    # Richardson estimates decrease on the convergent sequence
    rich = [r.richardson_estimate for r in scan[1:]]
    assert rich[-1] < rich[0]


def test_on_path_bump_degenerates_by_symmetry():
    """A bump centered on the crest path kills every term by reflection."""
    cand = PeakonCandidate(n=1, a=1.0)
    phi = TestFunction(center=float(cand.crest(1.6)), width=3.5,
                       t_center=1.6, t_width=1.5)
    r = weak_residual(cand, phi, 3)
    assert max(abs(t) for t in r.terms) < 1e-12


def test_initial_data_term_cancels_boundary():
    """Bump support crossing t = 0: T6 is nonzero yet the residual still vanishes."""
    cand = PeakonCandidate(n=2, a=1.0)
    phi = TestFunction(center=-2.0, width=3.0, t_center=0.4, t_width=1.0)
    scan = weak_scan(cand, phi, 4)
    assert abs(scan[-1].terms[5]) > 1e-4          # T6 active
    assert abs(scan[-1].value) <= 1e-6 * scan[-1].scale


def test_late_bump_has_zero_initial_term():
    cand = PeakonCandidate(n=2, a=1.0)
    phi = TestFunction(center=0.0, width=3.0, t_center=2.0, t_width=1.5)
    r = weak_residual(cand, phi, 2)
    assert r.terms[5] == 0.0


def test_wrong_speed_detected_with_sign():
    base = dict(width=3.5, t_center=1.6, t_width=1.5)
    n = 2
    limits = {}
    for fac in (1.1, 0.9):
        cand = PeakonCandidate(n=n, a=1.0, speed_factor=fac)
        phi = TestFunction(center=float(cand.crest(1.6)) - 4.0, **base)
        scan = weak_scan(cand, phi, 4)
        vals = [r.value for r in scan]
        assert abs(vals[-1]) > 1e-3 * scan[-1].scale
        assert abs(vals[-1] - vals[-2]) < 0.1 * abs(vals[-1])   # settled
        limits[fac] = vals[-1]
    assert limits[1.1] * limits[0.9] < 0


def test_candidate_speed_law():
    cand = PeakonCandidate(n=2, a=1.0)
    assert cand.c == pytest.approx(2.0 / 3.0, rel=1e-14)
    assert PeakonCandidate(n=2, a=1.0, speed_factor=1.1).c == pytest.approx(
        1.1 * 2.0 / 3.0, rel=1e-14)
    c_a, c_b = cand.kernel_constants()
    assert c_a == pytest.approx(1.0 + 0.5 * 3.0 - 1.0 / 12.0, rel=1e-14)
    assert PeakonCandidate(n=1, a=1.0).kernel_constants() == (1.5, 0.0)
