"""Order planning, identity verification and the semi-finite chain runner."""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import qfunctions as qf
from .qfunctions import Step, mono
from .series import (
    Monomial,
    SeriesContext,
    ZQSeries,
    add,
    equal_up_to,
    make_monomial,
    restrict,
)

Window = Tuple[int, int]

__all__ = [
    "Expression",
    "ChainStepExpr",
    "NamedExpr",
    "Perturbed",
    "IdentityTask",
    "VerificationReport",
    "VanishingCheck",
    "ChainReport",
    "default_window",
    "plan_orders",
    "verify_identity",
    "verify_proof_chain",
    "run_chain",
    "discrepancy_order",
    "discrepancy_orders",
]


def default_window(target_order: int) -> Window:
    """Window holding every theta term ``q^{n(n-1)/2} z^n`` of order <= target."""
    return SeriesContext.for_order(target_order).window


class Expression:
    """A side of an identity: something that can be built in a context.

    ``build`` receives the target context and the working order; it must
    return a series in the target context.
    """

    label = "expr"

    def negative_mass(self, ctx: SeriesContext) -> int:
        return 0

    def build(self, ctx: SeriesContext, working_order: int) -> ZQSeries:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.label})"


class ChainStepExpr(Expression):
    def __init__(self, step, m: int):
        self.step = Step.coerce(step)
        self.m = m
        self.label = f"{self.step.name}(m={m})"

    def negative_mass(self, ctx: SeriesContext) -> int:
        # a factor like (-z q^-m; q)_inf reaches q^{-m} once per power of z
        Z, m = ctx.z_max, self.m
        if self.step in (Step.S2, Step.S3):
            return Z * m
        if self.step is Step.S4:
            return min(Z, m) * m
        return 0

    def build(self, ctx: SeriesContext, working_order: int) -> ZQSeries:
        return qf.chain_step(self.step, self.m, ctx, working_order)


class NamedExpr(Expression):
    """A fixed constructor ``f(ctx)`` with nonnegative q-exponents."""

    def __init__(self, label: str, fn: Callable[[SeriesContext], ZQSeries]):
        self.label = label
        self.fn = fn

    def build(self, ctx: SeriesContext, working_order: int) -> ZQSeries:
        work = SeriesContext(max(working_order, ctx.q_order), ctx.z_min, ctx.z_max)
        return restrict(self.fn(work), ctx)


class Perturbed(Expression):
    """``expr + extra``; used to plant faults."""

    def __init__(self, expr: Expression, extra: Monomial):
        self.expr = expr
        self.extra = extra
        self.label = f"{expr.label} + {extra}"

    def negative_mass(self, ctx: SeriesContext) -> int:
        return self.expr.negative_mass(ctx)

    def build(self, ctx: SeriesContext, working_order: int) -> ZQSeries:
        return add(self.expr.build(ctx, working_order), make_monomial(self.extra, ctx))


@dataclass
class IdentityTask:
    lhs: Expression
    rhs: Expression
    target_order: int
    window: Optional[Window] = None

    def __post_init__(self):
        if self.target_order < 0:
            raise ValueError("target_order must be >= 0")
        if self.window is None:
            self.window = default_window(self.target_order)

    @property
    def context(self) -> SeriesContext:
        return SeriesContext(self.target_order, *self.window)


@dataclass
class VerificationReport:
    verdict: str
    first_discrepancy: Optional[Tuple[int, int, Fraction, Fraction]]
    working_order_used: int
    wall_time: float
    lhs: str = ""
    rhs: str = ""
    target_order: int = 0
    window: Window = (0, 0)
    notes: List[str] = field(default_factory=list)

    def __post_init__(self):
        if self.verdict not in ("equal", "discrepancy"):
            raise ValueError(f"bad verdict {self.verdict!r}")
        if self.verdict == "discrepancy":
            if self.first_discrepancy is None:
                raise ValueError("discrepancy verdict needs a location")
            if self.first_discrepancy[2] == self.first_discrepancy[3]:
                raise ValueError("discrepancy with equal coefficients")

    @property
    def passed(self) -> bool:
        return self.verdict == "equal"


def plan_orders(task: IdentityTask) -> int:
    """Working order for both sides: target plus the larger negative-order mass."""
    ctx = task.context
    mass = max(task.lhs.negative_mass(ctx), task.rhs.negative_mass(ctx))
    return task.target_order + mass


def _compare(task: IdentityTask, a: ZQSeries, b: ZQSeries, working: int,
             started: float) -> VerificationReport:
    verdict = equal_up_to(a, b, task.target_order)
    first = None
    if not verdict.equal:
        d = verdict.discrepancy
        first = (d.z_exp, d.q_exp, d.coeff_a, d.coeff_b)
    notes = []
    for side, s in (("lhs", a), ("rhs", b)):
        if s.z_truncated:
            notes.append(f"{side} is z-truncated: coefficients outside the window were "
                         f"discarded; comparison covers the window only")
    return VerificationReport(
        "equal" if verdict.equal else "discrepancy", first, working,
        time.perf_counter() - started, task.lhs.label, task.rhs.label,
        task.target_order, tuple(task.window), notes)


def verify_identity(task: IdentityTask, working_order: Optional[int] = None) -> VerificationReport:
    """Build both sides independently at the planned order and compare."""
    started = time.perf_counter()
    w = plan_orders(task) if working_order is None else working_order
    ctx = task.context
    a = task.lhs.build(ctx, w)
    b = task.rhs.build(ctx, w)
    return _compare(task, a, b, w, started)


@dataclass
class VanishingCheck:
    n: int
    base_q_exp: int
    vanished: bool


@dataclass
class ChainReport:
    m: int
    edges: Dict[str, VerificationReport]
    split: VerificationReport
    vanishing: List[VanishingCheck]

    @property
    def passed(self) -> bool:
        return (all(r.passed for r in self.edges.values()) and self.split.passed
                and all(v.vanished for v in self.vanishing))

    def rows(self) -> List[Tuple[str, bool]]:
        out = [(name, r.passed) for name, r in self.edges.items()]
        out.append(("split=S0", self.split.passed))
        out.append(("vanishing", all(v.vanished for v in self.vanishing)))
        return out


EDGES = [(Step.S0, Step.S1), (Step.S1, Step.S2), (Step.S2, Step.S3),
         (Step.S3, Step.S4), (Step.S4, Step.S5)]


def verify_proof_chain(m: int, target_order: int,
                       window: Optional[Window] = None) -> ChainReport:
    """All five equalities of the chain for one ``m``, plus split and vanishing checks.

    Each step is built once per working order it is needed at.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    cache: Dict[Tuple[Step, int], ZQSeries] = {}
    exprs = {s: ChainStepExpr(s, m) for s in Step}

    def built(step: Step, task: IdentityTask, w: int) -> ZQSeries:
        key = (step, w)
        if key not in cache:
            cache[key] = exprs[step].build(task.context, w)
        return cache[key]

    edges = {}
    for left, right in EDGES:
        task = IdentityTask(exprs[left], exprs[right], target_order, window)
        started = time.perf_counter()
        w = plan_orders(task)
        a, b = built(left, task, w), built(right, task, w)
        edges[f"{left.name}={right.name}"] = _compare(task, a, b, w, started)

    split_task = IdentityTask(
        NamedExpr(f"split(m={m})", lambda c: qf.semifinite_split(m, c)),
        exprs[Step.S0], target_order, window)
    split = verify_identity(split_task)

    ctx = split_task.context
    vanishing = []
    for n in range(m + 1, m + 5):
        p = qf.pochhammer_finite(mono(1, 0, m + 1 - n), n, ctx)
        vanishing.append(VanishingCheck(n, m + 1 - n, p.is_zero()))
    return ChainReport(m, edges, split, vanishing)


def _chain_job(args):
    m, order, window = args
    return verify_proof_chain(m, order, window)


def run_chain(ms: Sequence[int], target_order: int, window: Optional[Window] = None,
              jobs: int = 1) -> List[ChainReport]:
    """Chain reports for every ``m``, in the order given, regardless of ``jobs``."""
    args = [(m, target_order, window) for m in ms]
    if jobs <= 1 or len(args) <= 1:
        return [_chain_job(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_chain_job, args))


def discrepancy_order(m: int, ctx: SeriesContext) -> Optional[int]:
    """Least q-order at which the finite-m product and the theta series differ.

    ``None`` means they agree through ``ctx.q_order``.
    """
    a = qf.finite_m_product(m, ctx)
    b = qf.theta_bilateral(ctx)
    verdict = equal_up_to(a, b, ctx.q_order)
    return None if verdict.equal else verdict.discrepancy.q_exp


def discrepancy_orders(ms: Sequence[int], ctx: SeriesContext) -> List[Optional[int]]:
    return [discrepancy_order(m, ctx) for m in ms]
