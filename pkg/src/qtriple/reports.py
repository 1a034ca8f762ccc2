"""JSON-ready dictionaries for series and reports, and their inverses.

Exact coefficients are serialized as strings (``"3"``, ``"-5/7"``), never as
floats.  ``SCHEMA_VERSION`` is bumped on any incompatible change.
"""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Dict, List

from .numeric import ConvergenceRow
from .series import ZQSeries
from .verifier import ChainReport, VanishingCheck, VerificationReport

SCHEMA_VERSION = 1


def frac(c) -> str:
    return str(Fraction(c))


def series_to_dict(s: ZQSeries) -> Dict[str, Any]:
    return {
        "q_order": s.context.q_order,
        "window": [s.context.z_min, s.context.z_max],
        "valid_order": s.valid_order,
        "z_truncated": s.z_truncated,
        "terms": [{"z": z, "q": qe, "coeff": frac(c)} for (z, qe), c in s.graded_items()],
    }


def report_to_dict(r: VerificationReport) -> Dict[str, Any]:
    first = None
    if r.first_discrepancy is not None:
        z, qe, a, b = r.first_discrepancy
        first = {"z_exp": z, "q_exp": qe, "lhs_coeff": frac(a), "rhs_coeff": frac(b)}
    return {
        "verdict": r.verdict,
        "first_discrepancy": first,
        "working_order_used": r.working_order_used,
        "wall_time": r.wall_time,
        "lhs": r.lhs,
        "rhs": r.rhs,
        "target_order": r.target_order,
        "window": list(r.window),
        "notes": list(r.notes),
    }


def report_from_dict(d: Dict[str, Any]) -> VerificationReport:
    first = d.get("first_discrepancy")
    if first is not None:
        first = (first["z_exp"], first["q_exp"],
                 Fraction(first["lhs_coeff"]), Fraction(first["rhs_coeff"]))
    return VerificationReport(
        d["verdict"], first, d["working_order_used"], d["wall_time"],
        d.get("lhs", ""), d.get("rhs", ""), d.get("target_order", 0),
        tuple(d.get("window", (0, 0))), list(d.get("notes", [])))


def chain_to_dict(c: ChainReport) -> Dict[str, Any]:
    return {
        "m": c.m,
        "passed": c.passed,
        "edges": {name: report_to_dict(r) for name, r in c.edges.items()},
        "split": report_to_dict(c.split),
        "vanishing": [{"n": v.n, "base_q_exp": v.base_q_exp, "vanished": v.vanished}
                      for v in c.vanishing],
    }


def chain_from_dict(d: Dict[str, Any]) -> ChainReport:
    return ChainReport(
        d["m"],
        {name: report_from_dict(r) for name, r in d["edges"].items()},
        report_from_dict(d["split"]),
        [VanishingCheck(v["n"], v["base_q_exp"], v["vanished"]) for v in d["vanishing"]],
    )


def convergence_to_dict(rows: List[ConvergenceRow]) -> List[Dict[str, Any]]:
    return [{"m": r.m, "residual": r.residual, "factor_count": r.factor_count,
             "term_count": r.term_count} for r in rows]


def emit(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False)
