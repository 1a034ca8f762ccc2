"""Exact q-series verification of the Jacobi triple product identity."""
from .series import (
    ContextMismatchError,
    Monomial,
    NotInvertibleError,
    OutOfContractError,
    SeriesContext,
    SeriesError,
    ZQSeries,
    equal_up_to,
    invert,
    mul,
)
from .qfunctions import (
    INF,
    Step,
    chain_step,
    euler_inverse_series,
    euler_qexp_series,
    finite_m_product,
    pochhammer,
    pochhammer_finite,
    pochhammer_inf,
    semifinite_split,
    semifinite_sum,
    theta_bilateral,
    triple_product_lhs,
)
from .verifier import (
    IdentityTask,
    VerificationReport,
    discrepancy_order,
    plan_orders,
    verify_identity,
    verify_proof_chain,
)
from .dsl import DSLExpression, DSLSyntaxError, evaluate, parse, pretty
from .numeric import NumericPoint, convergence_table, eval_product_numeric, eval_theta_numeric

__version__ = "0.1.0"
