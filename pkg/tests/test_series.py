from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from qtriple import qfunctions as qf
from qtriple.qfunctions import mono
from qtriple.series import (
    ContextMismatchError,
    NotInvertibleError,
    OutOfContractError,
    SeriesContext,
    ZQSeries,
    add,
    coeff,
    equal_up_to,
    from_terms,
    invert,
    make_monomial,
    min_q_order,
    mul,
    neg,
    one,
    restrict,
    sub,
    zero,
)

CTX = SeriesContext(8, -3, 3)


def S(terms, ctx=CTX, precision=None):
    return from_terms(ctx, terms, precision)


# -- construction -----------------------------------------------------------

def test_identity_monomial():
    assert make_monomial(mono(1, 0, 0), CTX).terms == {(0, 0): 1}


def test_negative_monomial_embeds_directly():
    ctx = SeriesContext(5, -2, 2)
    s = make_monomial(mono(-1, -1, 1), ctx)
    assert s.terms == {(-1, 1): -1}
    assert not s.z_truncated


def test_out_of_window_monomial_is_dropped_and_flagged():
    s = make_monomial(mono(1, 5, 0), SeriesContext(5, -3, 3))
    assert s.is_zero()
    assert s.z_truncated


def test_context_validation():
    with pytest.raises(ValueError):
        SeriesContext(-1, 0, 0)
    with pytest.raises(ValueError):
        SeriesContext(3, 1, 4)


@pytest.mark.parametrize("n,window", [(30, (-7, 8)), (24, (-6, 7)), (20, (-5, 6)), (0, (0, 1))])
def test_default_window_holds_every_theta_term(n, window):
    assert SeriesContext.for_order(n).window == window
    lo, hi = window
    assert (hi * (hi - 1)) // 2 <= n < ((hi + 1) * hi) // 2
    assert (lo * (lo - 1)) // 2 <= n < ((lo - 1) * (lo - 2)) // 2


def test_monomial_str():
    assert str(mono(-1, 0, 1)) == "-q"
    assert str(mono(Fraction(3, 4), -2, 5)) == "3/4*z^-2*q^5"
    assert str(mono(1, 0, 0)) == "1"


# -- ring operations --------------------------------------------------------

def test_additive_inverse():
    assert add(S({(0, 0): 1}), S({(0, 0): -1})).is_zero()


def test_disjoint_support():
    assert add(S({(1, 0): 1}), S({(-1, 1): 1})).terms == {(1, 0): 1, (-1, 1): 1}


def test_polynomial_product():
    assert mul(S({(0, 0): 1, (0, 1): -1}), S({(0, 0): 1, (0, 1): 1})).terms == {(0, 0): 1, (0, 2): -1}


def test_product_with_negative_q_exponents():
    a = S({(0, 0): 1, (1, -1): 1})
    b = S({(0, 0): 1, (-1, 2): 1})
    assert mul(a, b).terms == {(0, 0): 1, (1, -1): 1, (-1, 2): 1, (0, 1): 1}


def test_mixed_contexts_rejected():
    with pytest.raises(ContextMismatchError):
        add(one(CTX), one(SeriesContext(8, -2, 3)))


def test_product_precision_drops_with_negative_orders():
    # terms of a at q^8 are known, but b reaches q^-2, so the product is only
    # known through q^6
    a = S({(0, 0): 1}, precision=8)
    b = S({(0, -2): 1})
    p = mul(a, b)
    assert p.valid_order == 6
    with pytest.raises(OutOfContractError):
        equal_up_to(p, p, 7)


def test_coeff_beyond_validity_raises():
    s = S({(0, 0): 1}, precision=4)
    assert coeff(s, 0, 4) == 0
    with pytest.raises(OutOfContractError):
        coeff(s, 0, 5)
    assert coeff(zero(CTX), 0, 0) == 0


def test_min_q_order():
    assert min_q_order(S({(0, 0): 1, (1, -3): 1})) == -3
    assert min_q_order(zero(CTX)) == 0


def test_min_q_order_of_shifted_product():
    # (-z q^-2; q)_inf on [-4, 4]: the lowest reachable term is
    # z^2 q^{-2-1} from the first two factors, later factors only raise it
    s = qf.pochhammer_inf(mono(-1, 1, -2), SeriesContext(6, -4, 4))
    assert min_q_order(s) == -3
    assert coeff(s, 2, -3) == 1


small_coeff = st.integers(-3, 3)
small_series = st.dictionaries(
    st.tuples(st.integers(-1, 1), st.integers(-1, 5)), small_coeff, max_size=6
).map(lambda d: S(d))  # z in [-1, 1] keeps triple products inside the window


@settings(max_examples=100, deadline=None, derandomize=True)
@given(small_series, small_series, small_series)
def test_ring_axioms(a, b, c):
    assert add(a, b) == add(b, a)
    assert add(add(a, b), c) == add(a, add(b, c))
    assert add(a, zero(CTX)) == a
    assert sub(a, a).is_zero()
    assert neg(neg(a)) == a
    assert mul(a, one(CTX)) == a
    # products compared only where all three sides are within contract
    for lhs, rhs in ((mul(a, b), mul(b, a)),
                     (mul(mul(a, b), c), mul(a, mul(b, c))),
                     (mul(a, add(b, c)), add(mul(a, b), mul(a, c)))):
        n = min(lhs.valid_order, rhs.valid_order)
        if n >= 0:
            assert equal_up_to(lhs, rhs, n), (a, b, c)


# -- inversion --------------------------------------------------------------

def test_invert_geometric_in_q():
    inv = invert(S({(0, 0): 1, (0, 1): -1}))
    assert inv.terms == {(0, k): 1 for k in range(CTX.q_order + 1)}
    assert not inv.z_truncated


def test_invert_geometric_in_z():
    inv = invert(S({(0, 0): 1, (1, 0): 1}))
    assert inv.terms == {(k, 0): (-1) ** k for k in range(CTX.z_max + 1)}
    assert inv.z_truncated


def test_invert_partition_count():
    d = mul(S({(0, 0): 1, (0, 1): -1}), S({(0, 0): 1, (0, 2): -1}))
    assert coeff(invert(d), 0, 4) == 3


def test_invert_zero_raises():
    with pytest.raises(NotInvertibleError):
        invert(zero(CTX))


def test_invert_monomial_lead():
    s = S({(1, 2): 2, (1, 3): 1})
    assert invert(s).valid_order == CTX.q_order
    # known through q^8 means the unit part is known through q^6, so the
    # inverse q^-2 * (...) is known through q^4
    s = S({(1, 2): 2, (1, 3): 1}, precision=8)
    inv = invert(s)
    assert inv.valid_order == 4
    assert coeff(inv, -1, -2) == Fraction(1, 2)
    assert equal_up_to(mul(s, inv), one(CTX), mul(s, inv).valid_order)


@settings(max_examples=40, deadline=None, derandomize=True)
@given(st.dictionaries(st.tuples(st.integers(0, 2), st.integers(1, 4)), small_coeff, max_size=4))
def test_invert_is_two_sided(tail):
    s = S({(0, 0): 1, **tail})
    inv = invert(s)
    p = mul(s, inv)
    # z-truncation means only the window is meaningful, which is all we compare
    assert equal_up_to(p, one(CTX), p.valid_order)
    assert equal_up_to(mul(inv, s), one(CTX), p.valid_order)


def test_invert_window_doubling():
    """Coefficients inside a window do not change when the window doubles."""
    s = S({(0, 0): 1, (1, 0): -2, (-1, 1): 1, (2, 3): 1})
    big = SeriesContext(8, -6, 6)
    inv_big = invert(from_terms(big, dict(s.items())))
    assert restrict(inv_big, CTX) == restrict(invert(s), CTX)


# -- comparison -------------------------------------------------------------

def test_equal_up_to_threshold():
    a = one(CTX)
    for m in range(0, 7):
        b = S({(0, 0): 1, (0, m + 1): 1})
        assert equal_up_to(a, b, m)
        v = equal_up_to(a, b, m + 1)
        assert not v
        assert (v.discrepancy.z_exp, v.discrepancy.q_exp) == (0, m + 1)


def test_first_discrepancy_theta_vs_product():
    ctx = SeriesContext(1, -1, 1)
    v = equal_up_to(qf.theta_bilateral(ctx), qf.pochhammer_inf(mono(-1, 1, 0), ctx), 1)
    assert (v.discrepancy.z_exp, v.discrepancy.q_exp) == (-1, 1)


def test_equal_up_to_is_reflexive():
    t = qf.theta_bilateral(CTX)
    assert equal_up_to(t, t, CTX.q_order)


def test_comparison_order_is_graded():
    a = S({(3, 2): 1, (-2, 2): 1, (0, 5): 1})
    v = equal_up_to(a, zero(CTX), 8)
    assert (v.discrepancy.z_exp, v.discrepancy.q_exp) == (-2, 2)


def test_scalar_operators():
    a = S({(0, 1): Fraction(1, 2)})
    assert (a * 2).terms == {(0, 1): 1}
    assert (a + a - a) == a
    assert isinstance(-a, ZQSeries)
