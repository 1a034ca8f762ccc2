"""Truncated bivariate Laurent series in ``z`` and ``q`` over the rationals.

A :class:`ZQSeries` stores a sparse map ``(z_exp, q_exp) -> coefficient``
together with the :class:`SeriesContext` it was computed in.  The context is
the truncation contract: q-exponents above ``q_order`` and z-exponents
outside ``[z_min, z_max]`` are not stored.

Besides the terms, every series carries two pieces of validity bookkeeping:

``precision``
    Coefficients at q-exponents ``<= precision`` are exact.  ``None`` means
    no term was ever discarded for exceeding the q-order, i.e. the stored
    terms are the complete series (restricted to the window).
``z_truncated``
    True when a term with in-range q-exponent was discarded for lying
    outside the z-window, so "absent" no longer means "known zero" there.

Coefficients are held as ``int`` when integral and as
:class:`fractions.Fraction` otherwise; all arithmetic is exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Iterator, Optional, Tuple, Union

Rational = Fraction
Coeff = Union[int, Fraction]
Key = Tuple[int, int]

__all__ = [
    "Rational",
    "Monomial",
    "SeriesContext",
    "ZQSeries",
    "Discrepancy",
    "EqualityVerdict",
    "SeriesError",
    "ContextMismatchError",
    "OutOfContractError",
    "NotInvertibleError",
    "make_monomial",
    "zero",
    "one",
    "add",
    "sub",
    "neg",
    "scale",
    "mul",
    "invert",
    "coeff",
    "equal_up_to",
    "min_q_order",
    "restrict",
    "from_terms",
]


class SeriesError(ValueError):
    """Base class for truncated-series contract violations."""


class ContextMismatchError(SeriesError):
    pass


class OutOfContractError(SeriesError):
    """A query or comparison reaches outside the validity region."""


class NotInvertibleError(SeriesError, ZeroDivisionError):
    pass


def _norm(c: Coeff) -> Coeff:
    if isinstance(c, Fraction) and c.denominator == 1:
        return c.numerator
    return c


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    return Fraction(c)


@dataclass(frozen=True)
class Monomial:
    """``coeff * z**z_exp * q**q_exp``."""

    coeff: Fraction
    z_exp: int = 0
    q_exp: int = 0

    def __post_init__(self):
        object.__setattr__(self, "coeff", _as_fraction(self.coeff))
        if self.coeff == 0 and (self.z_exp or self.q_exp):
            # the only zero monomial is the canonical one
            object.__setattr__(self, "z_exp", 0)
            object.__setattr__(self, "q_exp", 0)

    def __mul__(self, other: "Monomial") -> "Monomial":
        if not isinstance(other, Monomial):
            return NotImplemented
        return Monomial(self.coeff * other.coeff,
                        self.z_exp + other.z_exp,
                        self.q_exp + other.q_exp)

    def __neg__(self) -> "Monomial":
        return Monomial(-self.coeff, self.z_exp, self.q_exp)

    def __pow__(self, n: int) -> "Monomial":
        if n < 0 and self.coeff == 0:
            raise ZeroDivisionError("zero monomial to a negative power")
        return Monomial(self.coeff ** n, self.z_exp * n, self.q_exp * n)

    def shift_q(self, k: int) -> "Monomial":
        return Monomial(self.coeff, self.z_exp, self.q_exp + k)

    @property
    def is_one(self) -> bool:
        return self.coeff == 1 and self.z_exp == 0 and self.q_exp == 0

    def __str__(self) -> str:
        parts = []
        if self.z_exp:
            parts.append("z" if self.z_exp == 1 else f"z^{self.z_exp}")
        if self.q_exp:
            parts.append("q" if self.q_exp == 1 else f"q^{self.q_exp}")
        body = "*".join(parts)
        if not body:
            return str(self.coeff)
        if self.coeff == 1:
            return body
        if self.coeff == -1:
            return "-" + body
        return f"{self.coeff}*{body}"


@dataclass(frozen=True)
class SeriesContext:
    """Truncation contract: exact modulo ``q**(q_order+1)`` on ``[z_min, z_max]``."""

    q_order: int
    z_min: int
    z_max: int

    def __post_init__(self):
        if self.q_order < 0:
            raise ValueError(f"q_order must be >= 0, got {self.q_order}")
        if not self.z_min <= 0 <= self.z_max:
            raise ValueError(
                f"z-window must contain 0, got [{self.z_min}, {self.z_max}]")

    @classmethod
    def for_order(cls, q_order: int) -> "SeriesContext":
        """Context whose window holds every theta term of q-order <= ``q_order``."""
        return cls(q_order, -_largest_n(q_order, lambda n: n * (n + 1) // 2),
                   _largest_n(q_order, lambda n: n * (n - 1) // 2))

    @property
    def window(self) -> Tuple[int, int]:
        return (self.z_min, self.z_max)

    def in_window(self, z_exp: int) -> bool:
        return self.z_min <= z_exp <= self.z_max

    def widened(self, below: int = 0, above: int = 0,
                q_order: Optional[int] = None) -> "SeriesContext":
        return SeriesContext(self.q_order if q_order is None else q_order,
                             self.z_min - below, self.z_max + above)


def _largest_n(bound: int, f) -> int:
    n = 0
    while f(n + 1) <= bound:
        n += 1
    return n


class ZQSeries:
    """Immutable sparse series; build through the module functions."""

    __slots__ = ("context", "_terms", "z_truncated", "precision", "_min_q")

    def __init__(self, context: SeriesContext, terms: Dict[Key, Coeff],
                 z_truncated: bool = False, precision: Optional[int] = None):
        self.context = context
        self.z_truncated = bool(z_truncated)
        if precision is not None and precision >= context.q_order:
            # q-exactness beyond the context order carries no information
            # once some term was discarded
            precision = context.q_order
        self.precision = precision
        limit = self.valid_order
        clean = {}
        for k, c in terms.items():
            if c and k[1] <= limit:
                clean[k] = _norm(c)
        self._terms = clean
        self._min_q = min((k[1] for k in clean), default=0)

    @property
    def terms(self) -> Dict[Key, Coeff]:
        return dict(self._terms)

    @property
    def min_q(self) -> int:
        return self._min_q

    @property
    def valid_order(self) -> int:
        """Largest q-exponent at which every coefficient is known exactly."""
        if self.precision is None:
            return self.context.q_order
        return min(self.precision, self.context.q_order)

    @property
    def is_complete(self) -> bool:
        return self.precision is None

    def items(self) -> Iterator[Tuple[Key, Coeff]]:
        return iter(self._terms.items())

    def graded_items(self) -> list:
        """Terms sorted by q-exponent, then z-exponent."""
        return sorted(self._terms.items(), key=lambda kv: (kv[0][1], kv[0][0]))

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def _lower_q_bound(self) -> float:
        """Lower bound on the q-exponents of the true series (known + unknown)."""
        if self.precision is None:
            return self._min_q if self._terms else float("inf")
        if self._terms:
            return min(self._min_q, self.precision + 1)
        return self.precision + 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, ZQSeries):
            return NotImplemented
        return (self.context == other.context and self._terms == other._terms
                and self.valid_order == other.valid_order)

    __hash__ = None

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __neg__(self):
        return neg(self)

    def __mul__(self, other):
        if isinstance(other, ZQSeries):
            return mul(self, other)
        if isinstance(other, (int, Fraction)):
            return scale(self, other)
        return NotImplemented

    __rmul__ = __mul__

    def __repr__(self) -> str:
        flags = []
        if self.z_truncated:
            flags.append("z_truncated")
        flags.append(f"valid<=q^{self.valid_order}")
        return f"ZQSeries({format_series(self)}; {', '.join(flags)})"


def format_series(s: ZQSeries, max_terms: int = 12) -> str:
    items = s.graded_items()
    if not items:
        return "0"
    out = []
    for (z, qe), c in items[:max_terms]:
        out.append(str(Monomial(Fraction(c), z, qe)))
    text = " + ".join(out).replace("+ -", "- ")
    if len(items) > max_terms:
        text += f" + ...({len(items) - max_terms} more)"
    return text


def from_terms(ctx: SeriesContext, terms: Dict[Key, Coeff] | Iterable,
               precision: Optional[int] = None) -> ZQSeries:
    """Series from an explicit term map; out-of-contract keys are discarded."""
    if not isinstance(terms, dict):
        terms = dict(terms)
    kept = {}
    z_trunc = False
    dropped_q = False
    for (z, qe), c in terms.items():
        if not c:
            continue
        if qe > ctx.q_order:
            dropped_q = True
            continue
        if not ctx.in_window(z):
            z_trunc = True
            continue
        kept[(z, qe)] = kept.get((z, qe), 0) + c
    if dropped_q and precision is None:
        precision = ctx.q_order
    return ZQSeries(ctx, kept, z_trunc, precision)


def zero(ctx: SeriesContext) -> ZQSeries:
    return ZQSeries(ctx, {})


def one(ctx: SeriesContext) -> ZQSeries:
    return ZQSeries(ctx, {(0, 0): 1})


def make_monomial(m: Monomial, ctx: SeriesContext) -> ZQSeries:
    if m.coeff == 0:
        return zero(ctx)
    if m.q_exp > ctx.q_order:
        return ZQSeries(ctx, {}, precision=ctx.q_order)
    if not ctx.in_window(m.z_exp):
        return ZQSeries(ctx, {}, z_truncated=True)
    return ZQSeries(ctx, {(m.z_exp, m.q_exp): m.coeff})


def _check_ctx(a: ZQSeries, b: ZQSeries) -> SeriesContext:
    if a.context != b.context:
        raise ContextMismatchError(f"{a.context} vs {b.context}")
    return a.context


def _min_precision(*ps: Optional[float]) -> Optional[int]:
    vals = [p for p in ps if p is not None]
    if not vals:
        return None
    p = min(vals)
    return None if p == float("inf") else int(p)


def add(a: ZQSeries, b: ZQSeries) -> ZQSeries:
    ctx = _check_ctx(a, b)
    terms = dict(a._terms)
    for k, c in b._terms.items():
        terms[k] = terms.get(k, 0) + c
    return ZQSeries(ctx, terms, a.z_truncated or b.z_truncated,
                    _min_precision(a.precision, b.precision))


def neg(a: ZQSeries) -> ZQSeries:
    return ZQSeries(a.context, {k: -c for k, c in a._terms.items()},
                    a.z_truncated, a.precision)


def sub(a: ZQSeries, b: ZQSeries) -> ZQSeries:
    return add(a, neg(b))


def scale(a: ZQSeries, c: Coeff) -> ZQSeries:
    if c == 0:
        return ZQSeries(a.context, {}, a.z_truncated)
    return ZQSeries(a.context, {k: v * c for k, v in a._terms.items()},
                    a.z_truncated, a.precision)


def mul(a: ZQSeries, b: ZQSeries) -> ZQSeries:
    """Truncated product.

    The result is exact up to the smaller of ``a.precision + low(b)`` and
    ``b.precision + low(a)`` (``low`` = least q-exponent the operand can
    reach), and up to ``q_order`` if any product term was discarded.
    """
    ctx = _check_ctx(a, b)
    N, zlo, zhi = ctx.q_order, ctx.z_min, ctx.z_max
    if len(a) > len(b):
        a, b = b, a
    bs = sorted(((qe, z, c) for (z, qe), c in b._terms.items()))
    terms: Dict[Key, Coeff] = {}
    dropped_q = False
    z_trunc = a.z_truncated or b.z_truncated
    for (za, qa), ca in a._terms.items():
        limit = N - qa
        for qb, zb, cb in bs:
            if qb > limit:
                dropped_q = True
                break
            z = za + zb
            if z < zlo or z > zhi:
                z_trunc = True
                continue
            key = (z, qa + qb)
            terms[key] = terms.get(key, 0) + ca * cb
    candidates = []
    if dropped_q:
        candidates.append(N)
    if a.precision is not None:
        candidates.append(a.precision + b._lower_q_bound())
    if b.precision is not None:
        candidates.append(b.precision + a._lower_q_bound())
    return ZQSeries(ctx, terms, z_trunc, _min_precision(*candidates))


def leading_term(a: ZQSeries) -> Tuple[Key, Coeff]:
    """Least q-exponent, ties broken by least z-exponent."""
    if not a._terms:
        raise NotInvertibleError("zero series has no leading term")
    key = min(a._terms, key=lambda k: (k[1], k[0]))
    if a.precision is not None and key[1] > a.precision:
        raise NotInvertibleError("leading term lies beyond the known precision")
    return key, a._terms[key]


def invert(a: ZQSeries) -> ZQSeries:
    """Multiplicative inverse, expanded around the leading term.

    Writing ``a = c z^j q^k (1 + h)`` with every term of ``h`` of positive
    q-degree (or q-degree zero and positive z-degree), the inverse is
    ``c^-1 z^-j q^-k * sum((-h)**i)``.  The geometric sum is evaluated by the
    recurrence ``b = 1 - h*b`` over a scratch window wide enough that no
    intermediate product relevant to the target window is lost.
    """
    ctx = a.context
    (zl, ql), cl = leading_term(a)
    inv_c = 1 / Fraction(cl)
    h = [((z - zl), (qe - ql), c * inv_c) for (z, qe), c in a._terms.items()
         if (z, qe) != (zl, ql)]
    q_rel = ctx.q_order + ql
    z_rel_lo, z_rel_hi = ctx.z_min + zl, ctx.z_max + zl
    max_neg = max((-dz for dz, dq, _ in h if dz < 0), default=0)
    has_pos_z = any(dz > 0 for dz, _, _ in h)
    has_neg_z = max_neg > 0
    spread = max(q_rel, 0) * max_neg
    lo = (min(0, z_rel_lo) - spread) if has_neg_z else 0
    hi = (max(0, z_rel_hi) + spread) if has_pos_z else 0
    lo, hi = min(lo, 0), max(hi, 0)

    rel: Dict[Key, Coeff] = {}
    dropped_q = False
    dropped_z = False
    if q_rel < 0:
        # even the leading term of the inverse lies above the q-order
        dropped_q = True
    else:
        width = hi - lo + 1
        rel[(0, 0)] = 1
        # every key is visited after all keys it depends on
        keys = sorted(((z, qe) for qe in range(q_rel + 1) for z in range(lo, hi + 1)),
                      key=lambda k: k[1] * width + (k[0] - lo))
        for key in keys:
            if key == (0, 0):
                continue
            z, qe = key
            acc = 0
            for dz, dq, c in h:
                prev = rel.get((z - dz, qe - dq))
                if prev:
                    acc -= c * prev
            if acc:
                rel[key] = acc
        if h:
            # does the geometric sum continue past the scratch region?
            for (z, qe), c in rel.items():
                for dz, dq, _ in h:
                    if qe + dq > q_rel:
                        dropped_q = True
                    elif not lo <= z + dz <= hi:
                        dropped_z = True
                if dropped_q and dropped_z:
                    break
    out: Dict[Key, Coeff] = {}
    for (z, qe), c in rel.items():
        key = (z - zl, qe - ql)
        if key[1] > ctx.q_order:
            dropped_q = True
            continue
        if not ctx.in_window(key[0]):
            dropped_z = True
            continue
        out[key] = c * inv_c
    candidates = []
    if dropped_q:
        candidates.append(ctx.q_order)
    if a.precision is not None:
        candidates.append(a.precision - 2 * ql)
    return ZQSeries(ctx, out, a.z_truncated or dropped_z, _min_precision(*candidates))


def coeff(a: ZQSeries, z_exp: int, q_exp: int) -> Fraction:
    if not a.context.in_window(z_exp) or q_exp > a.valid_order:
        raise OutOfContractError(
            f"({z_exp}, {q_exp}) outside validity region "
            f"z in {a.context.window}, q <= {a.valid_order}")
    return Fraction(a._terms.get((z_exp, q_exp), 0))


def min_q_order(a: ZQSeries) -> int:
    return a.min_q


@dataclass(frozen=True)
class Discrepancy:
    z_exp: int
    q_exp: int
    coeff_a: Fraction
    coeff_b: Fraction


@dataclass(frozen=True)
class EqualityVerdict:
    equal: bool
    discrepancy: Optional[Discrepancy] = None

    def __bool__(self) -> bool:
        return self.equal


def equal_up_to(a: ZQSeries, b: ZQSeries, q_order: int) -> EqualityVerdict:
    """Compare through ``q_order``; report the first difference in graded order."""
    if a.context.window != b.context.window:
        raise ContextMismatchError(
            f"windows differ: {a.context.window} vs {b.context.window}")
    for s, name in ((a, "left"), (b, "right")):
        if q_order > s.valid_order:
            raise OutOfContractError(
                f"{name} series is only valid through q^{s.valid_order}, "
                f"comparison requested through q^{q_order}")
    keys = {k for k in a._terms if k[1] <= q_order}
    keys.update(k for k in b._terms if k[1] <= q_order)
    for z, qe in sorted(keys, key=lambda k: (k[1], k[0])):
        ca = a._terms.get((z, qe), 0)
        cb = b._terms.get((z, qe), 0)
        if ca != cb:
            return EqualityVerdict(False, Discrepancy(z, qe, Fraction(ca), Fraction(cb)))
    return EqualityVerdict(True)


def restrict(a: ZQSeries, ctx: SeriesContext, inherit_z_flag: bool = True) -> ZQSeries:
    """Re-express ``a`` in a narrower (or equal) context.

    With ``inherit_z_flag=False`` the caller vouches that ``a`` was computed
    on a window padded enough for the target window to be exact; only terms
    discarded by the restriction itself then set ``z_truncated``.
    """
    z_trunc = a.z_truncated and inherit_z_flag
    limit = min(ctx.q_order, a.valid_order)
    terms = {}
    dropped_q = False
    for (z, qe), c in a._terms.items():
        if qe > ctx.q_order:
            dropped_q = True
        elif not ctx.in_window(z):
            if qe <= limit:
                z_trunc = True
        else:
            terms[(z, qe)] = c
    precision = a.precision
    if dropped_q and precision is None:
        precision = ctx.q_order
    return ZQSeries(ctx, terms, z_trunc, precision)
