"""A small language for q-series expressions.

Grammar::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | factor
    factor  := primary ('^' ['-'] INT)?
    primary := NUMBER ['/' NUMBER]
             | 'z' | 'q'
             | '(' expr ';' 'q' ')' '_' (['-'] INT | 'inf')
             | '(' expr ')'
             | NAME '(' [INT (',' INT)*] ')'

``NUMBER '/' NUMBER`` directly inside a primary is a rational literal, so
``3/4`` is one number.  Builtins: ``theta() E() Einv() TP() S(m) Split(m)
P(m)``.  Example: ``(q;q)_inf * (-q/z;q)_inf * (-z;q)_inf``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple, Union

from . import qfunctions as qf
from .series import (
    Monomial,
    NotInvertibleError,
    SeriesContext,
    ZQSeries,
    add,
    invert,
    make_monomial,
    mul,
    neg,
    one,
    restrict,
    sub,
)
from .verifier import Expression

__all__ = [
    "Token",
    "DSLSyntaxError",
    "EvalError",
    "BUILTINS",
    "tokenize",
    "parse",
    "pretty",
    "eval_ast",
    "evaluate",
    "plan_working_order",
    "DSLExpression",
    "Number",
    "Var",
    "Neg",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Pochhammer",
    "Call",
]


class DSLSyntaxError(ValueError):
    def __init__(self, message: str, position: int, expected=()):
        self.message = message
        self.position = position
        self.expected = frozenset(expected)
        exp = ", ".join(sorted(self.expected))
        super().__init__(f"{message} at position {position}"
                         + (f" (expected one of: {exp})" if exp else ""))

    def caret(self, text: str) -> str:
        """The input with a marker under the offending position."""
        return f"{text}\n{' ' * self.position}^"


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<NUMBER>\d+)
  | (?P<word>[A-Za-z][A-Za-z0-9]*)
  | (?P<op>[();_+\-*/^,])
""", re.VERBOSE)

_OPS = {"(": "LPAREN", ")": "RPAREN", ";": "SEMI", "_": "UNDERSCORE", "+": "PLUS",
        "-": "MINUS", "*": "STAR", "/": "SLASH", "^": "CARET", ",": "COMMA"}
_WORDS = {"z": "Z", "q": "Q", "inf": "INF"}

# name -> number of integer arguments
BUILTINS = {"theta": 0, "E": 0, "Einv": 0, "TP": 0, "S": 1, "Split": 1, "P": 1}


def tokenize(text: str) -> List[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        mo = _TOKEN_RE.match(text, pos)
        if mo is None:
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", pos,
                                 {"number", "z", "q", "(", "-"})
        kind = mo.lastgroup
        if kind == "NUMBER":
            tokens.append(Token("NUMBER", mo.group(), pos))
        elif kind == "word":
            word = mo.group()
            tokens.append(Token(_WORDS.get(word, "IDENT"), word, pos))
        elif kind == "op":
            tokens.append(Token(_OPS[mo.group()], mo.group(), pos))
        pos = mo.end()
    tokens.append(Token("EOF", "", len(text)))
    return tokens


# ---------------------------------------------------------------- AST nodes

@dataclass(frozen=True)
class Number:
    value: Fraction


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Add:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Sub:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Mul:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Div:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Pochhammer:
    base: "Node"
    index: Optional[int]  # None is infinity


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple[int, ...] = ()


Node = Union[Number, Var, Neg, Add, Sub, Mul, Div, Pow, Pochhammer, Call]

# ------------------------------------------------------------------ parser


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def fail(self, expected, message: Optional[str] = None):
        t = self.tok
        if message is None:
            found = "end of input" if t.kind == "EOF" else repr(t.text)
            message = f"unexpected {found}"
        raise DSLSyntaxError(message, t.position, expected)

    def expect(self, kind: str, shown: str) -> Token:
        if self.tok.kind != kind:
            self.fail({shown})
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "EOF":
            self.fail({"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind in ("PLUS", "MINUS"):
            op = self.advance().kind
            right = self.term()
            node = Add(node, right) if op == "PLUS" else Sub(node, right)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind in ("STAR", "SLASH"):
            op = self.advance().kind
            right = self.unary()
            node = Mul(node, right) if op == "STAR" else Div(node, right)
        return node

    def unary(self) -> Node:
        if self.tok.kind == "MINUS":
            self.advance()
            return Neg(self.unary())
        return self.factor()

    def signed_int(self) -> int:
        sign = 1
        if self.tok.kind == "MINUS":
            self.advance()
            sign = -1
        t = self.expect("NUMBER", "integer")
        return sign * int(t.text)

    def factor(self) -> Node:
        node = self.primary()
        if self.tok.kind == "CARET":
            self.advance()
            node = Pow(node, self.signed_int())
        return node

    def primary(self) -> Node:
        t = self.tok
        if t.kind == "NUMBER":
            self.advance()
            if self.tok.kind == "SLASH" and self.peek().kind == "NUMBER":
                self.advance()
                den = int(self.advance().text)
                if den == 0:
                    raise DSLSyntaxError("zero denominator in rational literal",
                                         self.tokens[self.i - 1].position, {"nonzero integer"})
                return Number(Fraction(int(t.text), den))
            return Number(Fraction(int(t.text)))
        if t.kind in ("Z", "Q"):
            self.advance()
            return Var(t.text)
        if t.kind == "LPAREN":
            self.advance()
            inner = self.expr()
            if self.tok.kind == "SEMI":
                self.advance()
                self.expect("Q", "q")
                self.expect("RPAREN", ")")
                self.expect("UNDERSCORE", "_")
                if self.tok.kind == "INF":
                    self.advance()
                    return Pochhammer(inner, None)
                if self.tok.kind not in ("NUMBER", "MINUS"):
                    self.fail({"integer", "inf"})
                return Pochhammer(inner, self.signed_int())
            if self.tok.kind != "RPAREN":
                self.fail({")", ";", "+", "-", "*", "/", "^"})
            self.advance()
            return inner
        if t.kind == "IDENT":
            if self.peek().kind != "LPAREN":
                raise DSLSyntaxError(f"unknown identifier {t.text!r}", t.position,
                                     {"z", "q", "number", "("})
            if t.text not in BUILTINS:
                raise DSLSyntaxError(f"unknown builtin {t.text!r}", t.position,
                                     set(BUILTINS))
            self.advance()
            self.advance()
            args = []
            if self.tok.kind not in ("RPAREN", "NUMBER", "MINUS"):
                self.fail({"integer", ")"})
            if self.tok.kind != "RPAREN":
                args.append(self.signed_int())
                while self.tok.kind == "COMMA":
                    self.advance()
                    args.append(self.signed_int())
            self.expect("RPAREN", ")")
            if len(args) != BUILTINS[t.text]:
                raise DSLSyntaxError(
                    f"{t.text}() takes {BUILTINS[t.text]} argument(s), got {len(args)}",
                    t.position, {f"{BUILTINS[t.text]} argument(s)"})
            if any(a < 0 for a in args):
                raise DSLSyntaxError(f"{t.text}() needs a nonnegative argument",
                                     t.position, {"nonnegative integer"})
            return Call(t.text, tuple(args))
        self.fail({"number", "z", "q", "(", "-", "builtin"})


def parse(text: str) -> Node:
    return _Parser(text).parse()


# ----------------------------------------------------------- pretty printer

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _prec(node: Node) -> int:
    if isinstance(node, Number) and node.value.denominator != 1:
        return 5
    return _PREC.get(type(node), 5)


def pretty(node: Node) -> str:
    """Source text that parses back to ``node``."""
    if isinstance(node, Number):
        v = node.value
        return str(v.numerator) if v.denominator == 1 else f"({v.numerator}/{v.denominator})"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.name}({', '.join(map(str, node.args))})"
    if isinstance(node, Pochhammer):
        idx = "inf" if node.index is None else str(node.index)
        return f"({pretty(node.base)};q)_{idx}"
    if isinstance(node, Neg):
        inner = pretty(node.operand)
        return f"-{inner}" if _prec(node.operand) >= 3 else f"-({inner})"
    if isinstance(node, Pow):
        base = pretty(node.base)
        if _prec(node.base) < 5 or isinstance(node.base, Pow):
            base = f"({base})"
        return f"{base}^{node.exponent}"
    p = _PREC[type(node)]
    op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(node)]
    left = pretty(node.left)
    if _prec(node.left) < p:
        left = f"({left})"
    right = pretty(node.right)
    # left-associative; a bare integer after '/' would fuse into a rational
    if _prec(node.right) <= p or (isinstance(node, Div) and isinstance(node.right, Number)):
        right = f"({right})"
    return f"{left} {op} {right}"


# --------------------------------------------------------------- evaluation


def _as_monomial(node: Node) -> Optional[Monomial]:
    """Symbolic value of ``node`` when it is a single monomial."""
    if isinstance(node, Number):
        return Monomial(node.value)
    if isinstance(node, Var):
        return Monomial(Fraction(1), 1, 0) if node.name == "z" else Monomial(Fraction(1), 0, 1)
    if isinstance(node, Neg):
        m = _as_monomial(node.operand)
        return None if m is None else -m
    if isinstance(node, (Mul, Div)):
        a, b = _as_monomial(node.left), _as_monomial(node.right)
        if a is None or b is None:
            return None
        if isinstance(node, Mul):
            return a * b
        if b.coeff == 0:
            return None
        return a * b ** -1
    if isinstance(node, Pow):
        m = _as_monomial(node.base)
        if m is None or (m.coeff == 0 and node.exponent < 0):
            return None
        return m ** node.exponent
    return None


def _static_mass(node: Node, zspan: int) -> int:
    """Rough bound on how far below q^0 intermediate terms can reach."""
    m = _as_monomial(node)
    if m is not None:
        return max(0, -m.q_exp)
    if isinstance(node, Pochhammer):
        base = _as_monomial(node.base)
        if base is None:
            return 0
        k, j = base.q_exp, abs(base.z_exp)
        if node.index is not None and node.index < 0:
            n = -node.index
            return n * (abs(k) + n)
        count = -k if node.index is None else min(node.index, -k)
        if count <= 0:
            return 0
        if j == 0:
            return sum(-(k + i) for i in range(count))
        return min(count, zspan // j) * (-k)
    if isinstance(node, (Add, Sub)):
        return max(_static_mass(node.left, zspan), _static_mass(node.right, zspan))
    if isinstance(node, Mul):
        return _static_mass(node.left, zspan) + _static_mass(node.right, zspan)
    if isinstance(node, Div):
        return _static_mass(node.left, zspan) + 2 * _static_mass(node.right, zspan)
    if isinstance(node, Neg):
        return _static_mass(node.operand, zspan)
    if isinstance(node, Pow):
        return 2 * abs(node.exponent) * _static_mass(node.base, zspan)
    return 0


def _z_spread(node: Node) -> int:
    """How far multiplication by this node can move z-exponents."""
    m = _as_monomial(node)
    if m is not None:
        return abs(m.z_exp)
    if isinstance(node, Pochhammer):
        base = _as_monomial(node.base)
        if base is None or node.index is None:
            return 0
        return abs(base.z_exp) * abs(node.index)
    if isinstance(node, (Add, Sub)):
        return max(_z_spread(node.left), _z_spread(node.right))
    if isinstance(node, (Mul, Div)):
        return _z_spread(node.left) + _z_spread(node.right)
    if isinstance(node, Neg):
        return _z_spread(node.operand)
    if isinstance(node, Pow):
        return abs(node.exponent) * _z_spread(node.base)
    return 0


def plan_working_order(node: Node, ctx: SeriesContext) -> int:
    zspan = max(ctx.z_max, -ctx.z_min) + _z_spread(node)
    return ctx.q_order + _static_mass(node, zspan)


def _builtin(call: Call, ctx: SeriesContext) -> ZQSeries:
    name, args = call.name, call.args
    if name == "theta":
        return qf.theta_bilateral(ctx)
    if name == "E":
        return qf.euler_qexp_series(ctx)
    if name == "Einv":
        return qf.euler_inverse_series(ctx)
    if name == "TP":
        return qf.triple_product_lhs(ctx)
    if name == "S":
        return qf.semifinite_sum(args[0], ctx)
    if name == "Split":
        return qf.semifinite_split(args[0], ctx)
    if name == "P":
        return qf.finite_m_product(args[0], ctx)
    raise EvalError(f"unknown builtin {name!r}")


def _invert(s: ZQSeries) -> ZQSeries:
    try:
        return invert(s)
    except NotInvertibleError as exc:
        raise EvalError(f"division by a non-invertible series: {exc}") from None


def _eval(node: Node, ctx: SeriesContext) -> ZQSeries:
    m = _as_monomial(node)
    if m is not None:
        return make_monomial(m, ctx)
    if isinstance(node, Call):
        return _builtin(node, ctx)
    if isinstance(node, Pochhammer):
        base = _as_monomial(node.base)
        if base is None:
            raise EvalError(f"Pochhammer base {pretty(node.base)!r} is not a monomial")
        return qf.pochhammer(base, qf.INF if node.index is None else node.index, ctx)
    if isinstance(node, Neg):
        return neg(_eval(node.operand, ctx))
    if isinstance(node, Add):
        return add(_eval(node.left, ctx), _eval(node.right, ctx))
    if isinstance(node, Sub):
        return sub(_eval(node.left, ctx), _eval(node.right, ctx))
    if isinstance(node, Mul):
        return mul(_eval(node.left, ctx), _eval(node.right, ctx))
    if isinstance(node, Div):
        return mul(_eval(node.left, ctx), _invert(_eval(node.right, ctx)))
    if isinstance(node, Pow):
        base = _eval(node.base, ctx)
        if node.exponent < 0:
            base = _invert(base)
        out = one(ctx)
        for _ in range(abs(node.exponent)):
            out = mul(out, base)
        return out
    raise EvalError(f"cannot evaluate {node!r}")


def eval_ast(node: Node, ctx: SeriesContext, working_order: Optional[int] = None,
             max_rounds: int = 4) -> ZQSeries:
    """Evaluate at a planned working order, widening until ``ctx`` is covered.

    The window is padded by the expression's z-spread so that shifts by
    monomial factors cannot pull missing terms into view.
    """
    w = plan_working_order(node, ctx)
    if working_order is not None:
        w = max(w, working_order)
    pad = _z_spread(node)
    for _ in range(max_rounds):
        work = ctx.widened(pad, pad, w)
        result = restrict(_eval(node, work), ctx)
        if result.valid_order >= ctx.q_order:
            return result
        w += ctx.q_order - result.valid_order
    raise EvalError(f"could not reach q-order {ctx.q_order}; "
                    f"result valid only through q^{result.valid_order} at working order {w}")


def evaluate(text: str, ctx: SeriesContext) -> ZQSeries:
    return eval_ast(parse(text), ctx)


class DSLExpression(Expression):
    """A parsed DSL expression usable as one side of an ``IdentityTask``."""

    def __init__(self, text: str, node: Optional[Node] = None):
        self.text = text
        self.node = parse(text) if node is None else node
        self.label = text

    def negative_mass(self, ctx: SeriesContext) -> int:
        return plan_working_order(self.node, ctx) - ctx.q_order

    def build(self, ctx: SeriesContext, working_order: int) -> ZQSeries:
        return eval_ast(self.node, ctx, working_order)
