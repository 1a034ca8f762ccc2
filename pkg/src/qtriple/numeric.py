"""Double-precision evaluation of both sides of the triple product identity.

Both evaluators stop on a computed tail bound rather than a fixed term
count:

* an infinite product ``prod (1 + a_n)`` with ``|a_n| <= A r^n`` differs from
  its partial product over ``n < K`` by a relative factor at most
  ``exp(A r^K / (1 - r)) - 1``;
* the theta tail past ``|n| = K`` is dominated by a geometric series once the
  ratio of consecutive term bounds drops below 1.

The achievable accuracy is limited by rounding, roughly machine epsilon times
the largest partial sum magnitude; tolerances much below that are not met.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Iterable, List, Tuple

from .series import SeriesContext, ZQSeries

DEFAULT_TOL = 1e-10
MAX_FACTORS = 200_000

__all__ = [
    "DEFAULT_TOL",
    "NumericPoint",
    "NonConvergenceError",
    "ProductValue",
    "ThetaValue",
    "ConvergenceRow",
    "eval_product_numeric",
    "eval_theta_numeric",
    "product_with_stats",
    "theta_with_stats",
    "finite_m_product_numeric",
    "CrossCheck",
    "cross_check",
    "convergence_table",
    "series_at",
]


class NonConvergenceError(ArithmeticError):
    """The factor cap was hit before the tail bound fell below tolerance."""


@dataclass(frozen=True)
class NumericPoint:
    q: complex
    z: complex
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        object.__setattr__(self, "q", complex(self.q))
        object.__setattr__(self, "z", complex(self.z))
        if not abs(self.q) < 1:
            raise ValueError(f"|q| must be < 1, got {abs(self.q)}")
        if self.z == 0:
            raise ValueError("z must be nonzero")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class ProductValue:
    value: complex
    factor_count: int
    tail_bound: float


@dataclass(frozen=True)
class ThetaValue:
    value: complex
    term_count: int
    tail_bound: float
    magnitude: float  # sum of |terms|, the scale of rounding error


def _inf_product(a: complex, q: complex, tol: float, start: int = 0,
                 cap: int = MAX_FACTORS) -> Tuple[complex, int, float]:
    """``prod_{n>=start} (1 - a q^n)`` with its relative tail bound."""
    r = abs(q)
    p = 1 + 0j
    term = a * q ** start
    n = start
    count = 0
    while True:
        tail_mass = abs(term) / (1 - r) if r < 1 else math.inf
        bound = math.expm1(tail_mass) if tail_mass < 700 else math.inf
        if bound <= tol:
            return p, count, bound
        if count >= cap:
            raise NonConvergenceError(
                f"product over base {a} did not converge within {cap} factors")
        p *= 1 - term
        term *= q
        n += 1
        count += 1
        if p == 0:
            return p, count, 0.0


def product_with_stats(point: NumericPoint) -> ProductValue:
    """``(q;q)_inf (-q/z;q)_inf (-z;q)_inf`` with factor count and tail bound.

    Each product is run to ``tol/3`` so the combined relative error stays
    below ``tol``.
    """
    q, z, tol = point.q, point.z, point.tol
    total = 1 + 0j
    count = 0
    bound = 0.0
    for a in (q, -q / z, -z):
        v, c, b = _inf_product(a, q, tol / 3)
        total *= v
        count += c
        bound = (1 + bound) * (1 + b) - 1
    return ProductValue(total, count, bound)


def eval_product_numeric(point: NumericPoint) -> complex:
    return product_with_stats(point).value


def theta_with_stats(point: NumericPoint) -> ThetaValue:
    """``sum_n q^{n(n-1)/2} z^n``, adding n = 0, 1, -1, 2, -2, ... ."""
    q, z, tol = point.q, point.z, point.tol
    r, az = abs(q), abs(z)
    total = 0j
    mag = 0.0
    count = 0
    k = 0
    while True:
        for n in ((k + 1, -k) if k else (0, 1)):
            t = q ** (n * (n - 1) // 2) * z ** n if n >= 0 else (
                q ** (n * (n - 1) // 2) / z ** (-n))
            total += t
            mag += abs(t)
            count += 1
        k += 1
        # remaining terms: n >= k+1 and n <= -k
        up_term = r ** ((k + 1) * k // 2) * az ** (k + 1)
        up_ratio = r ** (k + 1) * az
        dn_term = r ** (k * (k + 1) // 2) / az ** k
        dn_ratio = r ** (k + 1) / az
        if up_ratio < 1 and dn_ratio < 1:
            bound = up_term / (1 - up_ratio) + dn_term / (1 - dn_ratio)
            if bound < tol:
                return ThetaValue(total, count, bound, mag)
        if count > 2 * MAX_FACTORS:
            raise NonConvergenceError("theta sum did not converge")


def eval_theta_numeric(point: NumericPoint) -> complex:
    return theta_with_stats(point).value


@dataclass(frozen=True)
class CrossCheck:
    """Both sides evaluated to an absolute target ``atol``."""

    product: complex
    theta: complex
    difference: float
    atol: float
    tol_used: float
    noise_floor: float

    @property
    def attainable(self) -> bool:
        return self.noise_floor < self.atol

    @property
    def agree(self) -> bool:
        return self.difference < self.atol


def cross_check(q: complex, z: complex, atol: float = 1e-9) -> CrossCheck:
    """Compare the two sides to within an absolute ``atol``.

    The evaluators' tolerances are relative, so the relative tolerance is
    derived from the size of the theta terms; ``noise_floor`` estimates the
    rounding error of the sum, below which no double computation can go.
    """
    rough = theta_with_stats(NumericPoint(q, z))
    scale = max(1.0, rough.magnitude)
    tol = atol / (4 * scale)
    point = NumericPoint(q, z, tol)
    prod, theta = product_with_stats(point), theta_with_stats(point)
    floor = 4 * sys.float_info.epsilon * max(scale, theta.magnitude) * math.sqrt(theta.term_count)
    return CrossCheck(prod.value, theta.value, abs(prod.value - theta.value), atol, tol, floor)


def finite_m_product_numeric(m: int, point: NumericPoint) -> ProductValue:
    """``(q;q)_m (-q/z;q)_m (-z;q)_inf``."""
    q, z = point.q, point.z
    p = 1 + 0j
    for i in range(1, m + 1):
        p *= (1 - q ** i) * (1 + q ** i / z)
    v, c, b = _inf_product(-z, q, point.tol)
    return ProductValue(p * v, 2 * m + c, b)


@dataclass(frozen=True)
class ConvergenceRow:
    m: int
    residual: float
    factor_count: int
    term_count: int


def convergence_table(q: complex, z: complex, m_range: Iterable[int],
                      tol: float = DEFAULT_TOL) -> List[ConvergenceRow]:
    """Distance between the finite-m product and the theta sum, per m."""
    point = NumericPoint(q, z, tol)
    theta = theta_with_stats(point)
    rows = []
    for m in m_range:
        if m < 0:
            raise ValueError("m must be nonnegative")
        prod = finite_m_product_numeric(m, point)
        rows.append(ConvergenceRow(m, abs(prod.value - theta.value),
                                   prod.factor_count, theta.term_count))
    if not rows:
        raise ValueError("m_range is empty")
    return rows


def series_at(s: ZQSeries, q: complex, z: complex) -> complex:
    """Value of the stored (truncated) terms of ``s`` at a point."""
    return sum((complex(c) * z ** ze * q ** qe for (ze, qe), c in s.items()), 0j)


def theta_truncation_bound(ctx: SeriesContext, q: complex, z: complex) -> float:
    """Bound on ``|theta(q, z) - truncated theta|`` from the terms ``ctx`` omits."""
    r, az = abs(q), abs(z)
    if r == 0:
        return sum(az ** n for n in (0, 1) if not ctx.in_window(n))
    total = 0.0
    for step in (1, -1):
        n = 0 if step == 1 else -1
        while True:
            t = r ** (n * (n - 1) // 2) * az ** n
            if n * (n - 1) // 2 > ctx.q_order or not ctx.in_window(n):
                total += t
            ratio = r ** n * az if step == 1 else r ** (-n) / az
            if ratio < 0.5 and t < 1e-18 * max(total, 1e-300):
                # remaining terms shrink faster than a ratio-1/2 geometric series
                total += 2 * t
                break
            if t == 0.0:
                break
            n += step
    return total
