
import pytest

from qtriple import qfunctions as qf
from qtriple.numeric import (
    NonConvergenceError,
    NumericPoint,
    convergence_table,
    cross_check,
    eval_product_numeric,
    eval_theta_numeric,
    product_with_stats,
    series_at,
    theta_truncation_bound,
    theta_with_stats,
)
from qtriple.series import SeriesContext


@pytest.mark.parametrize("z", [1, -0.5, 3 + 2j, 0.2j])
def test_q_zero(z):
    p = NumericPoint(0, z)
    assert eval_product_numeric(p) == pytest.approx(1 + z)
    assert eval_theta_numeric(p) == pytest.approx(1 + z)


@pytest.mark.parametrize("q,z", [(0.5, 1), (0.5, -0.5), (0.3 + 0.4j, 2 - 1j), (-0.8, 0.15)])
def test_sides_agree(q, z):
    p = NumericPoint(q, z)
    t = theta_with_stats(p)
    assert abs(eval_product_numeric(p) - t.value) < 1e-10 * max(1.0, t.magnitude)


def test_theta_pairing():
    # n and 1 - n give equal terms at z = 1
    q = 0.5
    half = sum(q ** (n * (n + 1) // 2) for n in range(60))
    assert eval_theta_numeric(NumericPoint(q, 1, 1e-14)) == pytest.approx(2 * half, abs=1e-13)


def test_tail_bounds_are_reported():
    p = NumericPoint(0.9, 5, 1e-8)
    prod, theta = product_with_stats(p), theta_with_stats(p)
    assert prod.tail_bound <= 1e-8 and theta.tail_bound < 1e-8
    assert prod.factor_count > 100


def test_point_validation():
    with pytest.raises(ValueError):
        NumericPoint(1, 1)
    with pytest.raises(ValueError):
        NumericPoint(0.5, 0)
    with pytest.raises(ValueError):
        NumericPoint(0.5, 1, 0)


def test_nonconvergence_is_reported():
    with pytest.raises(NonConvergenceError):
        eval_product_numeric(NumericPoint(0.99999999, 1, 1e-12))


def test_convergence_table():
    rows = convergence_table(0.3, 2, range(0, 31), tol=1e-15)
    assert [r.m for r in rows] == list(range(31))
    assert rows[-1].residual < 1e-12
    assert rows[1].residual < rows[0].residual
    assert all(r.factor_count >= 2 * r.m for r in rows)


def test_convergence_table_validation():
    with pytest.raises(ValueError):
        convergence_table(0.3, 2, [])
    with pytest.raises(ValueError):
        convergence_table(0.3, 2, [-1])


def test_truncated_series_matches_numeric_value():
    ctx = SeriesContext(30, -7, 8)
    q, z = 0.2, 0.7 - 0.3j
    exact = eval_theta_numeric(NumericPoint(q, z, 1e-15))
    approx = series_at(qf.triple_product_lhs(ctx), q, z)
    assert abs(exact - approx) <= theta_truncation_bound(ctx, q, z) + 1e-14
    assert theta_truncation_bound(ctx, q, z) < 1e-20


def test_cross_check_meets_absolute_target():
    c = cross_check(0.5 + 0.2j, 3 - 2j, atol=1e-9)
    assert c.attainable and c.agree
    assert c.tol_used < 1e-10


def test_cross_check_flags_noise_floor():
    # theta terms near 1e11 here; no double computation reaches 1e-9 absolute
    c = cross_check(0.9, 10, atol=1e-9)
    assert not c.attainable
