"""Constructors for the named q-series.

Everything here returns a :class:`~qtriple.series.ZQSeries` in the context it
is handed.  Summation ranges and the number of product factors are always
derived from that context, never fixed in advance.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Union

from .series import (
    Monomial,
    SeriesContext,
    ZQSeries,
    add,
    invert,
    make_monomial,
    mul,
    one,
    restrict,
    sub,
    zero,
)

INF = float("inf")
Index = Union[int, float]

__all__ = [
    "INF",
    "Q",
    "mono",
    "PoleError",
    "PochhammerSpec",
    "Step",
    "pochhammer",
    "pochhammer_inf",
    "pochhammer_finite",
    "euler_qexp_series",
    "euler_inverse_series",
    "theta_bilateral",
    "triple_product_lhs",
    "semifinite_sum",
    "semifinite_split",
    "split_parts",
    "finite_m_product",
    "chain_step",
]


class PoleError(ZeroDivisionError):
    """A negative-index Pochhammer symbol has a vanishing denominator factor."""


def mono(coeff=1, z: int = 0, q: int = 0) -> Monomial:
    return Monomial(Fraction(coeff), z, q)


Q = mono(1, 0, 1)


@dataclass(frozen=True)
class PochhammerSpec:
    """``(base; q)_index`` with ``index`` an integer or ``INF``."""

    base: Monomial
    index: Index

    def build(self, ctx: SeriesContext) -> ZQSeries:
        return pochhammer(self.base, self.index, ctx)


def _factor(a: Monomial, i: int, ctx: SeriesContext) -> ZQSeries:
    """``1 - a q^i``."""
    return sub(one(ctx), make_monomial(a.shift_q(i), ctx))


def _lowest_reachable(p: ZQSeries) -> float:
    if p.precision is None:
        return p.min_q if len(p) else INF
    return min(p.min_q, p.precision + 1) if len(p) else p.precision + 1


def pochhammer_inf(a: Monomial, ctx: SeriesContext) -> ZQSeries:
    """``prod_{n>=0} (1 - a q^n)``, multiplied out until the rest cannot matter.

    Factors are taken in increasing q-degree, so factors with a negative
    exponent are multiplied while the partial product is still complete.
    Factor ``n`` is skipped, together with all later ones, once its q-degree
    is positive and added to the lowest q-degree the partial product can
    reach it overshoots ``q_order``.

    A base equal to ``q^-k`` (coefficient 1, no z) makes one factor vanish and
    the result is the zero series.
    """
    if a.coeff == 0:
        return one(ctx)
    p = one(ctx)
    n = 0
    while True:
        e = a.q_exp + n
        if e > 0 and _lowest_reachable(p) + e > ctx.q_order:
            break
        p = mul(p, _factor(a, n, ctx))
        if p.is_zero() and p.precision is None:
            return p
        n += 1
    if p.precision is None:
        # the infinite tail was cut, but only beyond q_order
        p = ZQSeries(ctx, p.terms, p.z_truncated, ctx.q_order)
    return p


def pochhammer_finite(a: Monomial, n: int, ctx: SeriesContext) -> ZQSeries:
    """``(a; q)_n`` for any integer ``n``.

    For ``n < 0`` this is ``1 / prod_{i=1}^{-n} (1 - a q^-i)``, which agrees
    with ``(a;q)_inf / (a q^n;q)_inf``.
    """
    if n >= 0:
        p = one(ctx)
        for i in range(n):
            p = mul(p, _factor(a, i, ctx))
        return p
    # factors of the denominator in increasing q-degree
    den = one(ctx)
    for i in range(-n, 0, -1):
        if a.shift_q(-i).is_one:
            raise PoleError(f"({a};q)_{n} has the vanishing factor 1 - {a}*q^{-i}")
        den = mul(den, _factor(a, -i, ctx))
    return invert(den)


def pochhammer(a: Monomial, index: Index, ctx: SeriesContext) -> ZQSeries:
    if index == INF:
        return pochhammer_inf(a, ctx)
    return pochhammer_finite(a, int(index), ctx)


def _euler_limit(ctx: SeriesContext) -> int:
    n = 0
    while n + 1 <= ctx.z_max and (n + 1) * n // 2 <= ctx.q_order:
        n += 1
    return n


def euler_qexp_series(ctx: SeriesContext) -> ZQSeries:
    """``sum_{n>=0} q^{n(n-1)/2} z^n / (q;q)_n``."""
    total = zero(ctx)
    for n in range(_euler_limit(ctx) + 1):
        term = mul(make_monomial(mono(1, n, n * (n - 1) // 2), ctx),
                   invert(pochhammer_finite(Q, n, ctx)))
        total = add(total, term)
    return _cap(total, ctx)


def euler_inverse_series(ctx: SeriesContext) -> ZQSeries:
    """``sum_{n>=0} (-1)^n z^n / (q;q)_n``; always z-truncated."""
    total = zero(ctx)
    for n in range(ctx.z_max + 1):
        term = mul(make_monomial(mono((-1) ** n, n, 0), ctx),
                   invert(pochhammer_finite(Q, n, ctx)))
        total = add(total, term)
    return ZQSeries(ctx, total.terms, True, ctx.q_order)


def _cap(s: ZQSeries, ctx: SeriesContext) -> ZQSeries:
    """Mark a truncated infinite sum as exact only through ``q_order``.

    Also flags z-truncation when the summation range was cut by the window
    rather than by the q-order.
    """
    z_trunc = s.z_truncated or _window_cuts_sum(ctx)
    precision = ctx.q_order if s.precision is None else s.precision
    return ZQSeries(ctx, s.terms, z_trunc, precision)


def _window_cuts_sum(ctx: SeriesContext) -> bool:
    n = ctx.z_max + 1
    return n * (n - 1) // 2 <= ctx.q_order


def theta_bilateral(ctx: SeriesContext) -> ZQSeries:
    """``sum_{n in Z} q^{n(n-1)/2} z^n`` restricted to the context."""
    k = 0
    while (k + 1) * (k + 2) // 2 <= ctx.q_order:
        k += 1
    terms = {}
    z_trunc = False
    for n in range(-k, k + 2):
        e = n * (n - 1) // 2
        if e > ctx.q_order:
            continue
        if ctx.in_window(n):
            terms[(n, e)] = 1
        else:
            z_trunc = True
    return ZQSeries(ctx, terms, z_trunc, ctx.q_order)


def triple_product_lhs(ctx: SeriesContext) -> ZQSeries:
    """``(q;q)_inf (-q/z;q)_inf (-z;q)_inf``."""
    p = mul(pochhammer_inf(Q, ctx), pochhammer_inf(mono(-1, -1, 1), ctx))
    return mul(p, pochhammer_inf(mono(-1, 1, 0), ctx))


def _reciprocal_poch(m: int, n: int, ctx: SeriesContext) -> ZQSeries:
    """``1/(q^{m+1};q)_n`` using ``1/(q^{m+1};q)_{-k} = (q^{m+1-k};q)_k``."""
    if n >= 0:
        return invert(pochhammer_finite(mono(1, 0, m + 1), n, ctx))
    return pochhammer_finite(mono(1, 0, m + 1 + n), -n, ctx)


def _semifinite_upper(ctx: SeriesContext) -> int:
    n = 0
    while n + 1 <= ctx.z_max and (n + 1) * n // 2 <= ctx.q_order:
        n += 1
    return n


def semifinite_sum(m: int, ctx: SeriesContext) -> ZQSeries:
    """``sum_{n>=-m} q^{n(n-1)/2} z^n / (q^{m+1};q)_n``."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    total = zero(ctx)
    for n in range(-m, _semifinite_upper(ctx) + 1):
        term = mul(make_monomial(mono(1, n, n * (n - 1) // 2), ctx),
                   _reciprocal_poch(m, n, ctx))
        total = add(total, term)
    return _cap(total, ctx)


@dataclass
class SplitParts:
    """Both halves of the split form; ``tail`` maps n to its (possibly zero) term."""

    m: int
    head: ZQSeries
    tail: Dict[int, ZQSeries] = field(default_factory=dict)

    @property
    def nonzero_tail(self) -> list:
        return sorted(n for n, s in self.tail.items() if not s.is_zero())

    def total(self) -> ZQSeries:
        s = self.head
        for n in sorted(self.tail):
            s = add(s, self.tail[n])
        return s


def split_parts(m: int, ctx: SeriesContext) -> SplitParts:
    """The nonnegative sum and the ``z^-n`` sum, built separately.

    Tail terms with ``n > m`` are constructed anyway, so that their vanishing
    is observed rather than assumed.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    head = zero(ctx)
    for n in range(_semifinite_upper(ctx) + 1):
        term = mul(make_monomial(mono(1, n, n * (n - 1) // 2), ctx),
                   invert(pochhammer_finite(mono(1, 0, m + 1), n, ctx)))
        head = add(head, term)
    tail = {}
    for n in range(1, -ctx.z_min + 1):
        poch = pochhammer_finite(mono(1, 0, m + 1 - n), n, ctx)
        if n > m and not poch.is_zero():
            raise AssertionError(f"(q^{m + 1 - n};q)_{n} failed to vanish")
        tail[n] = mul(poch, make_monomial(mono(1, -n, n * (n + 1) // 2), ctx))
    return SplitParts(m, _cap(head, ctx), tail)


def semifinite_split(m: int, ctx: SeriesContext) -> ZQSeries:
    return _cap(split_parts(m, ctx).total(), ctx)


def finite_m_product(m: int, ctx: SeriesContext) -> ZQSeries:
    """``(q;q)_m (-q/z;q)_m (-z;q)_inf``."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    p = mul(pochhammer_finite(Q, m, ctx), pochhammer_finite(mono(-1, -1, 1), m, ctx))
    return mul(p, pochhammer_inf(mono(-1, 1, 0), ctx))


class Step(enum.Enum):
    S0 = 0
    S1 = 1
    S2 = 2
    S3 = 3
    S4 = 4
    S5 = 5

    @classmethod
    def coerce(cls, step) -> "Step":
        if isinstance(step, Step):
            return step
        if isinstance(step, int):
            return cls(step)
        return cls[str(step).upper()]


def _prefactor(m: int, ctx: SeriesContext) -> ZQSeries:
    return make_monomial(mono(1, -m, m * (m + 1) // 2), ctx)


def _step_s1(m: int, ctx: SeriesContext) -> ZQSeries:
    # literal reindexing: n runs from 0, every exponent carries the shift
    total = zero(ctx)
    upper = _semifinite_upper(ctx) + m
    for n in range(0, upper + 1):
        k = n - m
        term = mul(make_monomial(mono(1, k, k * (k - 1) // 2), ctx),
                   invert(pochhammer_finite(mono(1, 0, m + 1), k, ctx)))
        total = add(total, term)
    return _cap(total, ctx)


def _step_s2(m: int, ctx: SeriesContext) -> ZQSeries:
    front = mul(_prefactor(m, ctx),
                invert(pochhammer_finite(mono(1, 0, m + 1), -m, ctx)))
    total = zero(ctx)
    n = 0
    while n <= ctx.z_max:
        e = n * (n - 1) // 2 - n * m
        if e > ctx.q_order:
            if n > m:
                break
        else:
            term = mul(make_monomial(mono(1, n, e), ctx),
                       invert(pochhammer_finite(Q, n, ctx)))
            total = add(total, term)
        n += 1
    return mul(front, _cap(total, ctx))


def _step_s3(m: int, ctx: SeriesContext) -> ZQSeries:
    p = mul(_prefactor(m, ctx), pochhammer_finite(Q, m, ctx))
    return mul(p, pochhammer_inf(mono(-1, 1, -m), ctx))


def _step_s4(m: int, ctx: SeriesContext) -> ZQSeries:
    p = mul(_prefactor(m, ctx), pochhammer_finite(Q, m, ctx))
    p = mul(p, pochhammer_finite(mono(-1, 1, -m), m, ctx))
    return mul(p, pochhammer_inf(mono(-1, 1, 0), ctx))


_STEPS = {
    Step.S0: semifinite_sum,
    Step.S1: _step_s1,
    Step.S2: _step_s2,
    Step.S3: _step_s3,
    Step.S4: _step_s4,
    Step.S5: finite_m_product,
}


def chain_step(step, m: int, ctx: SeriesContext,
               working_order: Optional[int] = None) -> ZQSeries:
    """One expression of the semi-finite chain, built from its own formula.

    The expression is evaluated on the window widened by ``m`` on both sides
    (the ``z^-m`` prefactor pulls terms down by ``m``) at q-order
    ``working_order`` and then restricted to ``ctx``.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    step = Step.coerce(step)
    w = ctx.q_order if working_order is None else max(working_order, ctx.q_order)
    work = ctx.widened(m, m, w)
    return restrict(_STEPS[step](m, work), ctx, inherit_z_flag=False)
