"""Small expression language for problem coefficients.

Supports numbers, the constant pi, the variables x/mu/nu, the operators
+ - * / ^ with unary minus, the functions sin/cos/exp/abs, and spatial
piecewise definitions of the form ``piecewise(x<=1: 2*x, x>1: 2*(2-x))``.
Piecewise conditions are thresholds in x only.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

VARIABLES = ("x", "mu", "nu")
FUNCTIONS = ("sin", "cos", "exp", "abs")

_FUNC_TABLE = {"sin": math.sin, "cos": math.cos, "exp": math.exp, "abs": abs}


class ExprError(Exception):
    """Base class for expression-language errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    def __init__(self, name, offset):
        super().__init__(f"unknown identifier '{name}'", offset)
        self.name = name


class EvalError(ExprError):
    """Raised when evaluation fails; carries the offending subexpression."""

    def __init__(self, message, expr):
        super().__init__(f"{message} in '{pretty(expr)}'")
        self.expr = expr


# --- AST nodes -------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str  # only "pi"


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object


@dataclass(frozen=True)
class Cond:
    """Threshold condition on x: either 'x <= k' or 'x > k'."""
    op: str  # "<=" or ">"
    threshold: float

    def holds(self, x):
        return x <= self.threshold if self.op == "<=" else x > self.threshold


@dataclass(frozen=True)
class Piecewise:
    branches: tuple  # of (Cond, expr)


# --- tokenizer -------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><=|[-+*/^(),:>])"
    r")"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            # skip over whitespace-only tail
            if text[pos:].strip() == "":
                break
            raise ExprSyntaxError(f"unexpected character '{text[pos:].lstrip()[0]}'",
                                  len(text) - len(text[pos:].lstrip()))
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, off = self.peek()
        if val != value:
            raise ExprSyntaxError(f"expected '{value}', found '{val or 'end of input'}'", off)
        return self.advance()

    # expr := term (('+'|'-') term)*
    def parse_expr(self):
        node = self.parse_term()
        while self.peek()[1] in ("+", "-"):
            op = self.advance()[1]
            node = BinOp(op, node, self.parse_term())
        return node

    # term := unary (('*'|'/') unary)*
    def parse_term(self):
        node = self.parse_unary()
        while self.peek()[1] in ("*", "/"):
            op = self.advance()[1]
            node = BinOp(op, node, self.parse_unary())
        return node

    # unary := '-' unary | power
    def parse_unary(self):
        if self.peek()[1] == "-":
            self.advance()
            return Neg(self.parse_unary())
        return self.parse_power()

    # power := atom ('^' unary)?   (right associative, binds above unary minus)
    def parse_power(self):
        node = self.parse_atom()
        if self.peek()[1] == "^":
            self.advance()
            node = BinOp("^", node, self.parse_unary())
        return node

    def parse_atom(self):
        kind, val, off = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(val))
        if kind == "ident":
            self.advance()
            if val == "pi":
                return Const("pi")
            if val in VARIABLES:
                return Var(val)
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.parse_expr()
                self.expect(")")
                return Call(val, arg)
            if val == "piecewise":
                return self.parse_piecewise()
            raise UnknownIdentifierError(val, off)
        if val == "(":
            self.advance()
            node = self.parse_expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"expected a number, identifier or '(', found '{val or 'end of input'}'", off)

    def parse_piecewise(self):
        self.expect("(")
        branches = []
        while True:
            branches.append((self.parse_cond(), self._parse_branch_body()))
            kind, val, off = self.peek()
            if val == ",":
                self.advance()
                continue
            self.expect(")")
            break
        return Piecewise(tuple(branches))

    def _parse_branch_body(self):
        self.expect(":")
        return self.parse_expr()

    def parse_cond(self):
        kind, val, off = self.peek()
        if not (kind == "ident" and val == "x"):
            raise ExprSyntaxError(f"piecewise condition must start with 'x', found '{val}'", off)
        self.advance()
        kind, op, off = self.advance()
        if op not in ("<=", ">"):
            raise ExprSyntaxError(f"expected '<=' or '>', found '{op}'", off)
        negative = False
        if self.peek()[1] == "-":
            self.advance()
            negative = True
        kind, val, off = self.peek()
        if kind != "num":
            raise ExprSyntaxError(f"expected a numeric threshold, found '{val}'", off)
        self.advance()
        k = float(val)
        return Cond(op, -k if negative else k)


def parse(text):
    """Parse an expression string to an AST; raises ExprSyntaxError on bad input."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    p = _Parser(text)
    node = p.parse_expr()
    kind, val, off = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected trailing input '{val}'", off)
    return node


# --- evaluation ------------------------------------------------------------

def evaluate(e, x=0.0, mu=0.0, nu=0.0):
    """Evaluate an AST at (x, mu, nu) in IEEE double arithmetic."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Const):
        return math.pi
    if isinstance(e, Var):
        return {"x": x, "mu": mu, "nu": nu}[e.name]
    if isinstance(e, Neg):
        return -evaluate(e.arg, x, mu, nu)
    if isinstance(e, BinOp):
        a = evaluate(e.left, x, mu, nu)
        b = evaluate(e.right, x, mu, nu)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if b == 0.0:
                raise EvalError("division by zero", e)
            return a / b
        try:
            return a ** b
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise EvalError(str(exc), e) from exc
    if isinstance(e, Call):
        return _FUNC_TABLE[e.fn](evaluate(e.arg, x, mu, nu))
    if isinstance(e, Piecewise):
        for cond, body in e.branches:
            if cond.holds(x):
                return evaluate(body, x, mu, nu)
        raise EvalError(f"no piecewise branch covers x={x}", e)
    raise TypeError(f"not an expression node: {e!r}")


def variables(e):
    """Free variables of an AST, a subset of {'x', 'mu', 'nu'}."""
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return variables(e.arg)
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Call):
        return variables(e.arg)
    if isinstance(e, Piecewise):
        out = {"x"}
        for _, body in e.branches:
            out |= variables(body)
        return out
    return set()


def thresholds(e):
    """Sorted piecewise thresholds appearing anywhere in the AST."""
    if isinstance(e, Neg):
        return thresholds(e.arg)
    if isinstance(e, BinOp):
        return sorted(set(thresholds(e.left)) | set(thresholds(e.right)))
    if isinstance(e, Call):
        return thresholds(e.arg)
    if isinstance(e, Piecewise):
        out = {cond.threshold for cond, _ in e.branches}
        for _, body in e.branches:
            out |= set(thresholds(body))
        return sorted(out)
    return []


# --- pretty printing -------------------------------------------------------

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _fmt_num(v):
    if v == int(v) and abs(v) < 1e16:
        return repr(int(v))
    return repr(v)


def pretty(e, parent_prec=0):
    """Render an AST back to source; parse(pretty(e)) is structurally equal to e."""
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        s = "-" + pretty(e.arg, _PRECEDENCE["neg"])
        return f"({s})" if parent_prec > _PRECEDENCE["neg"] else s
    if isinstance(e, BinOp):
        prec = _PRECEDENCE[e.op]
        # left-associative chains keep the left child at equal precedence;
        # the right child needs parens at equal precedence (except ^, the mirror case)
        if e.op == "^":
            s = pretty(e.left, prec + 1) + "^" + pretty(e.right, prec)
        else:
            s = pretty(e.left, prec) + e.op + pretty(e.right, prec + 1)
        return f"({s})" if parent_prec > prec else s
    if isinstance(e, Call):
        return f"{e.fn}({pretty(e.arg)})"
    if isinstance(e, Piecewise):
        parts = [f"x{c.op}{_fmt_num(c.threshold)}: {pretty(b)}" for c, b in e.branches]
        return "piecewise(" + ", ".join(parts) + ")"
    raise TypeError(f"not an expression node: {e!r}")
