import json
import random
from pathlib import Path

import pytest

import oracles
from qtriple import qfunctions as qf
from qtriple.qfunctions import Step, mono
from qtriple.series import OutOfContractError, SeriesContext, equal_up_to
from qtriple.verifier import (
    ChainStepExpr,
    IdentityTask,
    NamedExpr,
    Perturbed,
    VerificationReport,
    discrepancy_order,
    discrepancy_orders,
    plan_orders,
    run_chain,
    verify_identity,
    verify_proof_chain,
)

GOLDEN = json.loads((Path(__file__).parent / "golden" / "discrepancy_orders.json").read_text())

THETA = NamedExpr("theta", qf.theta_bilateral)
TP = NamedExpr("tp", qf.triple_product_lhs)

EDGES = [(Step.S0, Step.S1), (Step.S1, Step.S2), (Step.S2, Step.S3),
         (Step.S3, Step.S4), (Step.S4, Step.S5)]


# -- planning ---------------------------------------------------------------

def test_plan_nonnegative_sides():
    assert plan_orders(IdentityTask(ChainStepExpr(Step.S5, 3), ChainStepExpr(Step.S5, 3), 24)) == 24
    assert plan_orders(IdentityTask(TP, THETA, 30)) == 30


def test_plan_shifted_product():
    task = IdentityTask(ChainStepExpr(Step.S3, 2), ChainStepExpr(Step.S5, 2), 10, (-4, 4))
    assert plan_orders(task) == 18


@pytest.mark.parametrize("step", [Step.S2, Step.S3, Step.S4])
def test_plan_is_needed(step):
    """Building at the bare target order leaves these steps short of it."""
    m = 5
    ctx = SeriesContext(24, -6, 7)
    s = qf.chain_step(step, m, ctx, 24)
    assert s.valid_order < 24
    planned = plan_orders(IdentityTask(ChainStepExpr(step, m), THETA, 24))
    assert qf.chain_step(step, m, ctx, planned).valid_order >= 24


@pytest.mark.parametrize("m", range(0, 9))
def test_planner_soundness(m):
    """Rerunning every edge at working_order + 4 changes nothing."""
    ctx = SeriesContext(24, -6, 7)
    for left, right in EDGES:
        task = IdentityTask(ChainStepExpr(left, m), ChainStepExpr(right, m), 24)
        w = plan_orders(task)
        assert verify_identity(task).passed
        assert verify_identity(task, working_order=w + 4).passed
        for step in (left, right):
            base = qf.chain_step(step, m, ctx, w)
            more = qf.chain_step(step, m, ctx, w + 4)
            assert equal_up_to(base, more, 24)


# -- identities -------------------------------------------------------------

def test_jacobi_identity():
    r = verify_identity(IdentityTask(TP, THETA, 30))
    assert r.passed and r.window == (-7, 8) and r.first_discrepancy is None
    assert r.working_order_used == 30


def test_planted_fault():
    r = verify_identity(IdentityTask(TP, Perturbed(THETA, mono(1, 0, 17)), 30))
    assert r.verdict == "discrepancy"
    assert r.first_discrepancy == (0, 17, 0, 1)


def test_out_of_contract_at_bare_order():
    task = IdentityTask(ChainStepExpr(Step.S2, 4), ChainStepExpr(Step.S3, 4), 24)
    with pytest.raises(OutOfContractError):
        verify_identity(task, working_order=24)


def test_report_validation():
    with pytest.raises(ValueError):
        VerificationReport("maybe", None, 0, 0.0)
    with pytest.raises(ValueError):
        VerificationReport("discrepancy", None, 0, 0.0)


# -- the chain --------------------------------------------------------------

def test_chain_m0():
    r = verify_proof_chain(0, 24)
    assert r.passed
    assert len(r.rows()) == 7


def test_chain_order_independent_of_jobs():
    serial = run_chain([3, 1, 2], 12)
    parallel = run_chain([3, 1, 2], 12, jobs=3)
    assert [r.m for r in parallel] == [3, 1, 2]
    assert [r.rows() for r in serial] == [r.rows() for r in parallel]


@pytest.mark.parametrize("m", [0, 2, 5])
def test_fault_injection_flips_every_edge(m):
    rng = random.Random(1000 + m)
    ctx = SeriesContext(16, -5, 6)
    for left, right in EDGES:
        z, k = rng.randint(ctx.z_min, ctx.z_max), rng.randint(0, 16)
        clean = IdentityTask(ChainStepExpr(left, m), ChainStepExpr(right, m), 16, ctx.window)
        assert verify_identity(clean).passed
        bad = IdentityTask(ChainStepExpr(left, m), Perturbed(ChainStepExpr(right, m), mono(3, z, k)),
                           16, ctx.window)
        r = verify_identity(bad)
        assert r.verdict == "discrepancy"
        assert r.first_discrepancy[:2] == (z, k)
        assert r.first_discrepancy[3] - r.first_discrepancy[2] == 3


# -- convergence witness ----------------------------------------------------

def test_discrepancy_order_zero():
    assert discrepancy_order(0, SeriesContext(20, -5, 6)) == 1


def test_discrepancy_orders_match_golden():
    ctx = SeriesContext(GOLDEN["q_order"], *GOLDEN["window"])
    ms = sorted(int(m) for m in GOLDEN["orders"])
    assert discrepancy_orders(ms, ctx) == [GOLDEN["orders"][str(m)] for m in ms]


def test_golden_matches_oracle():
    n, (lo, hi) = GOLDEN["q_order"], GOLDEN["window"]
    theta = oracles.theta(n, lo, hi)
    for m in range(0, 4):
        got = oracles.first_difference(oracles.finite_product(m, n), theta, n, lo, hi)
        assert got == GOLDEN["orders"][str(m)]


def test_discrepancy_orders_increase():
    orders = discrepancy_orders(range(0, 8), SeriesContext(20, -5, 6))
    assert all(b > a for a, b in zip(orders, orders[1:]))


def test_no_discrepancy_is_none():
    assert discrepancy_order(8, SeriesContext(6, -3, 4)) is None
