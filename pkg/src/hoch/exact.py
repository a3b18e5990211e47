"""Exact rational arithmetic for the coefficient families of the stability argument.

Everything in here is computed with `fractions.Fraction`, so every identity
check below reports an exact residual: a check passes iff its residual is the
rational number 0.  The central object is `CoeffTable`, which holds the two
coefficient sequences c_k, d_k (k = 1..2n-2) entering the split functional h,
the constant c1, the wave-speed constant, and 2 - c1.

Index conventions follow the usual mathematical ones (1-based k), so the
sequences are stored as dicts keyed by k.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Tuple

Rational = Fraction


def binomial(n: int, k: int) -> Fraction:
    """Exact binomial coefficient C(n, k)."""
    if n < 0 or k < 0:
        raise ValueError(f"binomial requires nonnegative arguments, got ({n}, {k})")
    if k > n:
        raise ValueError(f"binomial requires k <= n, got ({n}, {k})")
    return Fraction(math.comb(n, k))


def double_factorial(k: int) -> int:
    """k!! by the exact recurrence, with 0!! = (-1)!! = 1."""
    if k < -1:
        raise ValueError(f"double factorial undefined for {k}")
    result = 1
    while k > 1:
        result *= k
        k -= 2
    return result


@dataclass(frozen=True)
class CoeffTable:
    """Coefficients attached to one nonlinearity order n.

    c and d are keyed by k = 1..2n-2 (empty for n = 1).  speed_const is the
    coefficient of a^(2n-1) in the peakon speed; two_minus_c1 is the combination
    2 - c1 that normalizes the sharp polynomial inequality.
    """

    n: int
    c: Dict[int, Fraction]
    d: Dict[int, Fraction]
    c1: Fraction
    speed_const: Fraction
    two_minus_c1: Fraction


def _c_even(n: int, m: int) -> Fraction:
    return sum(
        (Fraction((-1) ** (j + 1) * (2 * j - (2 * m + 1)), 2 * j - 1) * binomial(n, j)
         for j in range(m + 1, n + 1)),
        Fraction(0),
    )


def _c_odd(n: int, m: int) -> Fraction:
    return sum(
        (Fraction((-1) ** (j + 1) * 2 * (j - m), 2 * j - 1) * binomial(n, j)
         for j in range(m + 1, n + 1)),
        Fraction(0),
    )


def build_coeff_table(n: int) -> CoeffTable:
    """Populate the coefficient table for order n >= 1 from the closed-form sums."""
    if n < 1:
        raise ValueError(f"order n must be a positive integer, got {n}")

    c1 = Fraction(1, 2) + sum(
        (Fraction((-1) ** (j + 1) * (2 * j - 3), 2 * (2 * j - 1)) * binomial(n, j)
         for j in range(1, n + 1)),
        Fraction(0),
    )

    c: Dict[int, Fraction] = {}
    d: Dict[int, Fraction] = {}
    for m in range(1, n):
        ce = _c_even(n, m)
        co = _c_odd(n, m)
        c[2 * m] = ce
        d[2 * m] = ce
        c[2 * m - 1] = co
        d[2 * m - 1] = -co
    if n >= 2:
        # the m = 1 odd sum must reproduce the standalone c1 formula
        assert c[1] == c1, (n, c[1], c1)

    speed_const = (1 + Fraction(1, 2 * n)) * sum(
        (Fraction((-1) ** k, 2 * k + 1) * binomial(n, k) for k in range(0, n + 1)),
        Fraction(0),
    )
    two_minus_c1 = 1 + sum(
        (Fraction((-1) ** (k + 1), 2 * k - 1) * binomial(n, k) for k in range(1, n + 1)),
        Fraction(0),
    )
    return CoeffTable(n=n, c=c, d=d, c1=c1, speed_const=speed_const,
                      two_minus_c1=two_minus_c1)


@dataclass(frozen=True)
class IdentityCheck:
    """One exact identity check: passes iff the rational residual is 0."""

    n: int
    identity: str
    residual: Fraction

    @property
    def passed(self) -> bool:
        return self.residual == 0

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "identity": self.identity,
            "residual": f"{self.residual.numerator}/{self.residual.denominator}",
            "pass": self.passed,
        }


def report_to_json(checks: List[IdentityCheck]) -> str:
    return json.dumps([c.as_dict() for c in checks], indent=2)


def verify_recursions(table: CoeffTable) -> List[IdentityCheck]:
    """Exact residuals of every line of the c- and d-recursions.

    Vacuously empty for n = 1.  The top line of the d-family is checked in the
    form d_{2n-2} = (-1)^(n+1)/(2n-1), the only sign consistent with the even
    coefficients c_{2m} = d_{2m} and with the product expansion that defines
    the sequences.
    """
    n = table.n
    checks: List[IdentityCheck] = []
    if n == 1:
        return checks
    c, d = table.c, table.d
    top = Fraction((-1) ** (n + 1), 2 * n - 1)

    checks.append(IdentityCheck(n, "c_top: c[2n-2] = (-1)^(n+1)/(2n-1)", c[2 * n - 2] - top))
    checks.append(IdentityCheck(n, "c_next: c[2n-3] - 2 c[2n-2] = 0", c[2 * n - 3] - 2 * c[2 * n - 2]))
    for j in range(1, n - 1):
        k = 2 * j + 1
        checks.append(IdentityCheck(
            n, f"c_odd_diff[k={k}]: c[k] - 2c[k-1] + c[k-2] = 0",
            c[k] - 2 * c[k - 1] + c[k - 2]))
    for j in range(2, n):
        k = 2 * j
        rhs = Fraction((-1) ** (j + 1), 2 * j - 1) * binomial(n, j)
        checks.append(IdentityCheck(
            n, f"c_even_diff[k={k}]: c[k] - 2c[k-1] + c[k-2] = (-1)^(j+1)/(2j-1) C(n,j)",
            c[k] - 2 * c[k - 1] + c[k - 2] - rhs))
    checks.append(IdentityCheck(n, "c_base: c[2] - 2c[1] + 1 = C(n,1)",
                                c[2] - 2 * c[1] + 1 - binomial(n, 1)))

    checks.append(IdentityCheck(n, "d_top: d[2n-2] = (-1)^(n+1)/(2n-1)", d[2 * n - 2] - top))
    checks.append(IdentityCheck(n, "d_next: d[2n-3] + 2 d[2n-2] = 0", d[2 * n - 3] + 2 * d[2 * n - 2]))
    for j in range(1, n - 1):
        k = 2 * j + 1
        checks.append(IdentityCheck(
            n, f"d_odd_diff[k={k}]: d[k] + 2d[k-1] + d[k-2] = 0",
            d[k] + 2 * d[k - 1] + d[k - 2]))
    for j in range(2, n):
        k = 2 * j
        rhs = Fraction((-1) ** (j + 1), 2 * j - 1) * binomial(n, j)
        checks.append(IdentityCheck(
            n, f"d_even_diff[k={k}]: d[k] + 2d[k-1] + d[k-2] = (-1)^(j+1)/(2j-1) C(n,j)",
            d[k] + 2 * d[k - 1] + d[k - 2] - rhs))
    checks.append(IdentityCheck(n, "d_base: d[2] + 2d[1] + 1 = C(n,1)",
                                d[2] + 2 * d[1] + 1 - binomial(n, 1)))
    return checks


def double_factorial_identities(n: int) -> List[IdentityCheck]:
    """The alternating-binomial / double-factorial identities for order n."""
    if n < 1:
        raise ValueError(f"order n must be a positive integer, got {n}")
    checks: List[IdentityCheck] = []

    lhs = sum((Fraction((-1) ** (k - 1), 2 * k - 1) * binomial(n, k)
               for k in range(1, n + 1)), Fraction(0))
    rhs = Fraction(double_factorial(2 * n), double_factorial(2 * n - 1)) - 1
    checks.append(IdentityCheck(n, "altsum_minus: sum (-1)^(k-1)/(2k-1) C(n,k) = (2n)!!/(2n-1)!! - 1",
                                lhs - rhs))

    lhs = sum((Fraction((-1) ** k, 2 * k + 1) * binomial(n, k)
               for k in range(0, n + 1)), Fraction(0))
    rhs = Fraction(double_factorial(2 * n), double_factorial(2 * n + 1))
    checks.append(IdentityCheck(n, "altsum_plus: sum (-1)^k/(2k+1) C(n,k) = (2n)!!/(2n+1)!!",
                                lhs - rhs))

    s1 = sum((Fraction((-1) ** (k + 1), 2 * k + 1) * binomial(n - 1, k)
              for k in range(1, n)), Fraction(0))
    s2 = sum((Fraction((-1) ** (k - 1) * (2 * n - 2 * k + 1), 2 * k - 1) * binomial(n, k)
              for k in range(1, n + 1)), Fraction(0))
    lhs = Fraction(1, 4 * n * n - 1) * (2 * n + s1 + s2)
    checks.append(IdentityCheck(n, "kernel_sum: (2n + S1 + S2)/(4n^2-1) = 1 - S1", lhs - (1 - s1)))

    table = build_coeff_table(n)
    checks.append(IdentityCheck(n, "speed_alt: speed_const = 1 - S1", table.speed_const - (1 - s1)))
    checks.append(IdentityCheck(n, "two_minus_c1: 2 - c1 = 1 + sum (-1)^(k+1)/(2k-1) C(n,k)",
                                (2 - table.c1) - table.two_minus_c1))
    return checks


def phi_poly(table: CoeffTable, z: Fraction) -> Fraction:
    """phi(z) = sum_{k=1}^{n-1} c_{2k-1} z^(2k-2); the empty sum at n = 1 is 0."""
    z = Fraction(z)
    return sum((table.c[2 * k - 1] * z ** (2 * k - 2) for k in range(1, table.n)),
               Fraction(0))


def f_poly(table: CoeffTable, z: Fraction) -> Fraction:
    """f(z) = sum_{k=1}^{2n-2} c_k z^k + c1/2."""
    z = Fraction(z)
    return sum((table.c[k] * z ** k for k in range(1, 2 * table.n - 1)),
               table.c1 / 2)


def f_phi_factor_check(table: CoeffTable) -> IdentityCheck:
    """Coefficient-wise residual of f(z) = (1+z)^2/2 * phi(z)."""
    n = table.n
    f_coeffs: Dict[int, Fraction] = {0: table.c1 / 2}
    for k in range(1, 2 * n - 1):
        f_coeffs[k] = table.c[k]

    prod: Dict[int, Fraction] = {}
    for k in range(1, n):
        base = 2 * k - 2
        coef = table.c[2 * k - 1]
        for shift, w in ((0, Fraction(1, 2)), (1, Fraction(1)), (2, Fraction(1, 2))):
            prod[base + shift] = prod.get(base + shift, Fraction(0)) + w * coef

    residual = Fraction(0)
    for exp in set(f_coeffs) | set(prod):
        residual += abs(f_coeffs.get(exp, Fraction(0)) - prod.get(exp, Fraction(0)))
    return IdentityCheck(n, "f_factorization: f(z) = (1+z)^2/2 phi(z)", residual)


def rho_poly(n: int, z: Fraction) -> Fraction:
    """rho(z) = (1-z^2)^n - 1 + n z^2 - C(n,2) z^4 (identically 0 for n = 1, 2)."""
    if n < 1:
        raise ValueError(f"order n must be a positive integer, got {n}")
    z = Fraction(z)
    cn2 = binomial(n, 2) if n >= 2 else Fraction(0)
    return (1 - z * z) ** n - 1 + n * z * z - cn2 * z ** 4


def _rho_coefficients(n: int) -> Dict[int, Fraction]:
    """Coefficients of rho as a polynomial in z; only even powers >= 6 survive."""
    coeffs: Dict[int, Fraction] = {}
    for j in range(0, n + 1):
        coeffs[2 * j] = coeffs.get(2 * j, Fraction(0)) + binomial(n, j) * (-1) ** j
    coeffs[0] = coeffs.get(0, Fraction(0)) - 1
    coeffs[2] = coeffs.get(2, Fraction(0)) + n
    if n >= 2:
        coeffs[4] = coeffs.get(4, Fraction(0)) - binomial(n, 2)
    return {e: c for e, c in coeffs.items() if c != 0}


def B_and_c1_identities(n: int) -> Tuple[Fraction, List[IdentityCheck]]:
    """B = sum_{k=1}^{n-1} (2k)!!/(2k+1)!! and the integral identities tying it to c1.

    The integral of rho(s)/s^2 over [0,1] is done by exact term-wise
    integration of the polynomial rho; B is cross-checked against term-wise
    integration of (1-z^2)^k.
    """
    if n < 1:
        raise ValueError(f"order n must be a positive integer, got {n}")
    checks: List[IdentityCheck] = []
    B = sum((Fraction(double_factorial(2 * k), double_factorial(2 * k + 1))
             for k in range(1, n)), Fraction(0))

    beta_residual = Fraction(0)
    for k in range(1, n):
        termwise = sum((binomial(k, m) * Fraction((-1) ** m, 2 * m + 1)
                        for m in range(0, k + 1)), Fraction(0))
        beta_residual += abs(termwise - Fraction(double_factorial(2 * k),
                                                 double_factorial(2 * k + 1)))
    checks.append(IdentityCheck(n, "beta_terms: int_0^1 (1-z^2)^k dz = (2k)!!/(2k+1)!!",
                                beta_residual))

    rho = _rho_coefficients(n)
    assert all(e >= 6 and e % 2 == 0 for e in rho), rho
    rho_int = sum((coef * Fraction(1, e - 1) for e, coef in rho.items()), Fraction(0))
    cn2 = binomial(n, 2) if n >= 2 else Fraction(0)
    checks.append(IdentityCheck(n, "rho_integral: int_0^1 rho/s^2 = -B + (n-1) - C(n,2)/3",
                                rho_int - (-B + (n - 1) - Fraction(cn2, 3))))

    table = build_coeff_table(n)
    checks.append(IdentityCheck(n, "c1_integral: c1 = 1 - n + C(n,2)/3 + int_0^1 rho/s^2",
                                table.c1 - (1 - n + Fraction(cn2, 3) + rho_int)))
    checks.append(IdentityCheck(n, "c1_is_minus_B: c1 = -B", table.c1 + B))
    return B, checks


def qhat_poly(table: CoeffTable, a: Fraction, y: Fraction) -> Fraction:
    """Qhat(y) = (2n-1) y^(2n+1) - (2n+1) a^2 y^(2n-1) + 2 a^(2n+1)."""
    if a <= 0:
        raise ValueError(f"amplitude must be positive, got {a}")
    n = table.n
    a, y = Fraction(a), Fraction(y)
    return ((2 * n - 1) * y ** (2 * n + 1)
            - (2 * n + 1) * a * a * y ** (2 * n - 1)
            + 2 * a ** (2 * n + 1))


def qhat_factor_check(table: CoeffTable, a: Fraction) -> IdentityCheck:
    """Coefficient-wise residual of the double-root factorization of Qhat.

    Qhat(y) = (y-a)^2 [ (2n-1) y^(2n-1)
                        + 2 sum_{k=1}^{2n-2} (2n-k) a^k y^(2n-1-k)
                        + 2 a^(2n-1) ].
    """
    if a <= 0:
        raise ValueError(f"amplitude must be positive, got {a}")
    n = table.n
    a = Fraction(a)

    qhat: Dict[int, Fraction] = {
        2 * n + 1: Fraction(2 * n - 1),
        2 * n - 1: -(2 * n + 1) * a * a,
        0: 2 * a ** (2 * n + 1),
    }

    bracket: Dict[int, Fraction] = {2 * n - 1: Fraction(2 * n - 1)}
    for k in range(1, 2 * n - 1):
        exp = 2 * n - 1 - k
        bracket[exp] = bracket.get(exp, Fraction(0)) + 2 * (2 * n - k) * a ** k
    bracket[0] = bracket.get(0, Fraction(0)) + 2 * a ** (2 * n - 1)

    prod: Dict[int, Fraction] = {}
    for exp, coef in bracket.items():
        for shift, w in ((2, Fraction(1)), (1, -2 * a), (0, a * a)):
            prod[exp + shift] = prod.get(exp + shift, Fraction(0)) + w * coef

    residual = Fraction(0)
    for exp in set(qhat) | set(prod):
        residual += abs(qhat.get(exp, Fraction(0)) - prod.get(exp, Fraction(0)))
    return IdentityCheck(n, f"qhat_factorization[a={a}]", residual)


def wave_speed(n: int, a: Fraction) -> Fraction:
    """Peakon speed c = speed_const(n) * a^(2n-1) for amplitude a > 0."""
    a = Fraction(a)
    if a <= 0:
        raise ValueError(f"amplitude must be positive, got {a}")
    return build_coeff_table(n).speed_const * a ** (2 * n - 1)


def amplitude_from_speed(n: int, c: float, tol: float = 1e-12) -> float:
    """Invert the speed map: a = (c / speed_const)^(1/(2n-1)) for c > 0."""
    if c <= 0:
        raise ValueError(f"speed must be positive, got {c}")
    kappa = float(build_coeff_table(n).speed_const)
    a = (c / kappa) ** (1.0 / (2 * n - 1))
    assert abs(kappa * a ** (2 * n - 1) - c) <= tol * abs(c)
    return a


def full_identity_report(n_max: int) -> List[IdentityCheck]:
    """All exact checks for n = 1..n_max: recursions, double-factorial sums,
    integral identities, and both polynomial factorizations."""
    checks: List[IdentityCheck] = []
    for n in range(1, n_max + 1):
        table = build_coeff_table(n)
        checks.extend(verify_recursions(table))
        checks.extend(double_factorial_identities(n))
        checks.extend(B_and_c1_identities(n)[1])
        checks.append(f_phi_factor_check(table))
        for a in (Fraction(1), Fraction(2), Fraction(1, 3)):
            checks.append(qhat_factor_check(table, a))
    return checks
