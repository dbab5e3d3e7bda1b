"""Coefficient-expression language.

Grammar (EBNF)::

    expr     = term , { ("+" | "-") , term } ;
    term     = unary , { ("*" | "/") , unary } ;
    unary    = ("-" | "+") , unary | power ;
    power    = atom , { "^" , ["-" | "+"] , integer } ;
    atom     = number | variable | constant
             | function , "(" , expr , ")" | "(" , expr , ")" ;
    variable = "x" , digit , { digit } ;
    function = "sin" | "cos" | "exp" | "log" | "sqrt" ;
    constant = "pi" ;

``**`` is accepted as a synonym for ``^``.  Exponents are integer literals
and chain to the left, so ``x^2^3`` is ``(x^2)^3``.  Unary minus binds
weaker than ``^``: ``-x^2`` is ``-(x^2)``.

Numeric literals are kept as exact rationals, so trees built only from
``+ - * /``, integer powers, literals and variables evaluate exactly.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .errors import (
    DomainError,
    ExprSyntaxError,
    UnknownIdentifierError,
    VariableRangeError,
)

__all__ = [
    "Expr", "Const", "Var", "Unary", "Binary", "Pow",
    "parse", "to_source", "eval_real", "eval_exact", "evaluate",
    "eval_jet", "eval_jet_at", "is_rational", "variables",
]

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
Scalar = Union[Fraction, float, complex]


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Const:
    value: Union[Fraction, float]


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or one of FUNCTIONS
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # "+", "-", "*", "/"
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


Expr = Union[Const, Var, Unary, Binary, Pow]


# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _line_col(source: str, pos: int) -> tuple[int, int]:
    line = source.count("\n", 0, pos) + 1
    start = source.rfind("\n", 0, pos) + 1
    return line, pos - start + 1


def _tokenize(source: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            line, col = _line_col(source, pos)
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", line, col, source)
        kind = m.lastgroup
        if kind != "ws":
            text = m.group()
            if text == "**":
                text = "^"
            toks.append(_Tok(kind, text, pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(source)))
    return toks


# ---------------------------------------------------------------------------
# Parser (recursive descent with one token of lookahead)


class _Parser:
    def __init__(self, source: str, dim: int):
        self.source = source
        self.dim = dim
        self.toks = _tokenize(source)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, tok: _Tok, message: str, cls=ExprSyntaxError):
        line, col = _line_col(self.source, tok.pos)
        raise cls(message, line, col, self.source)

    def expect(self, text: str) -> _Tok:
        tok = self.peek()
        if tok.text != text or tok.kind != "op":
            shown = tok.text or "end of input"
            self.error(tok, f"expected {text!r}, found {shown!r}")
        return self.advance()

    def parse(self) -> Expr:
        if self.peek().kind == "end":
            self.error(self.peek(), "empty expression")
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            self.error(tok, f"unexpected token {tok.text!r}")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in ("*", "/"):
            op = self.advance().text
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text in "+-":
            self.advance()
            arg = self.unary()
            return Unary("neg", arg) if tok.text == "-" else arg
        return self.power()

    def power(self) -> Expr:
        node = self.atom()
        while self.peek().kind == "op" and self.peek().text == "^":
            self.advance()
            sign = 1
            tok = self.peek()
            if tok.kind == "op" and tok.text in "+-":
                sign = -1 if tok.text == "-" else 1
                self.advance()
                tok = self.peek()
            if tok.kind != "num" or not tok.text.isdigit():
                shown = tok.text or "end of input"
                self.error(tok, f"exponent must be an integer literal, found {shown!r}")
            self.advance()
            node = Pow(node, sign * int(tok.text))
        return node

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Const(Fraction(tok.text))
        if tok.kind == "name":
            self.advance()
            name = tok.text
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(name, arg)
            if name == "pi":
                return Const(math.pi)
            m = re.fullmatch(r"x(\d+)", name)
            if m is None:
                self.error(tok, f"unknown identifier {name!r}", UnknownIdentifierError)
            idx = int(m.group(1))
            if idx >= self.dim:
                self.error(
                    tok,
                    f"variable {name} out of range for dimension {self.dim} (x0..x{self.dim - 1})",
                    VariableRangeError,
                )
            return Var(idx)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        shown = tok.text or "end of input"
        self.error(tok, f"unexpected token {shown!r}")


def parse(source: str, dim: int) -> Expr:
    """Parse ``source`` into an expression over the variables ``x0..x{dim-1}``.

    ``dim`` is the number of coordinates (d+1 for a Heisenberg chart).
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    return _Parser(str(source), dim).parse()


# ---------------------------------------------------------------------------
# Pretty printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _terminating_decimal(v: Fraction):
    """Exact decimal text for fractions whose denominator is 2^a 5^b."""
    den = v.denominator
    a = b = 0
    while den % 2 == 0:
        den //= 2
        a += 1
    while den % 5 == 0:
        den //= 5
        b += 1
    if den != 1:
        return None
    places = max(a, b)
    scaled = abs(v.numerator) * 10**places // v.denominator
    digits = str(scaled).rjust(places + 1, "0")
    text = f"{digits[:-places]}.{digits[-places:]}"
    return "-" + text if v < 0 else text


def _fmt_const(v) -> str:
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        dec = _terminating_decimal(v)
        return dec if dec is not None else f"{v.numerator}/{v.denominator}"
    if v == math.pi:
        return "pi"
    return repr(float(v))


def _src(e: Expr) -> tuple[str, int]:
    """Return (text, precedence); atoms have precedence 5."""
    if isinstance(e, Const):
        text = _fmt_const(e.value)
        if isinstance(e.value, Fraction) and (e.value < 0 or "/" in text):
            return f"({text})", 5
        if not isinstance(e.value, Fraction) and e.value < 0:
            return f"({text})", 5
        return text, 5
    if isinstance(e, Var):
        return f"x{e.index}", 5
    if isinstance(e, Unary):
        if e.op == "neg":
            inner, p = _src(e.arg)
            if p < 3:
                inner = f"({inner})"
            return f"-{inner}", 3
        inner, _ = _src(e.arg)
        return f"{e.op}({inner})", 5
    if isinstance(e, Pow):
        inner, p = _src(e.base)
        if p < 5:
            inner = f"({inner})"
        return f"{inner}^{e.exponent}", 4
    prec = _PREC[e.op]
    left, pl = _src(e.left)
    right, pr = _src(e.right)
    if pl < prec:
        left = f"({left})"
    if pr <= prec:
        right = f"({right})"
    return f"{left} {e.op} {right}", prec


def to_source(e: Expr) -> str:
    """Render ``e`` with the minimal parentheses needed to reparse it identically."""
    return _src(e)[0]


# ---------------------------------------------------------------------------
# Structural queries


def is_rational(e: Expr) -> bool:
    """True when ``e`` uses only rational literals, variables, + - * / and powers."""
    if isinstance(e, Const):
        return isinstance(e.value, Fraction)
    if isinstance(e, Var):
        return True
    if isinstance(e, Unary):
        return e.op == "neg" and is_rational(e.arg)
    if isinstance(e, Pow):
        return is_rational(e.base)
    return is_rational(e.left) and is_rational(e.right)


def variables(e: Expr) -> set[int]:
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, Const):
        return set()
    if isinstance(e, (Unary, Pow)):
        return variables(e.arg if isinstance(e, Unary) else e.base)
    return variables(e.left) | variables(e.right)


# ---------------------------------------------------------------------------
# Evaluation


def _real_unary(op: str, v: float) -> float:
    if op == "neg":
        return -v
    if op == "log":
        if v <= 0:
            raise DomainError(f"log of non-positive value {v!r}")
        return math.log(v)
    if op == "sqrt":
        if v < 0:
            raise DomainError(f"sqrt of negative value {v!r}")
        return math.sqrt(v)
    if op == "exp":
        try:
            return math.exp(v)
        except OverflowError:
            raise DomainError(f"exp overflow at {v!r}") from None
    return getattr(math, op)(v)


def _eval(e: Expr, point: Sequence, exact: bool):
    if isinstance(e, Const):
        return e.value if exact else float(e.value)
    if isinstance(e, Var):
        return point[e.index]
    if isinstance(e, Unary):
        v = _eval(e.arg, point, exact)
        if exact:
            if e.op != "neg":
                raise TypeError("exact evaluation of an elementary function")
            return -v
        return _real_unary(e.op, v)
    if isinstance(e, Pow):
        v = _eval(e.base, point, exact)
        if e.exponent < 0 and v == 0:
            raise DomainError("negative power of zero")
        if exact:
            return v ** e.exponent
        return float(v) ** e.exponent
    a = _eval(e.left, point, exact)
    b = _eval(e.right, point, exact)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if b == 0:
        raise DomainError("division by zero")
    return a / b


def _check_point(e: Expr, point) -> None:
    vs = variables(e)
    if vs and max(vs) >= len(point):
        raise ValueError(f"point of length {len(point)} too short for variable x{max(vs)}")


def eval_real(e: Expr, point: Sequence[float]) -> float:
    """IEEE double evaluation of ``e`` at ``point``."""
    _check_point(e, point)
    return float(_eval(e, [float(p) for p in point], exact=False))


def eval_exact(e: Expr, point: Sequence) -> Fraction:
    """Exact rational evaluation; ``e`` must satisfy :func:`is_rational`."""
    if not is_rational(e):
        raise TypeError("expression is not rational; use eval_real")
    _check_point(e, point)
    return Fraction(_eval(e, [Fraction(p) for p in point], exact=True))


def evaluate(e: Expr, point: Sequence, mode: str = "auto"):
    """Evaluate with the automatic backend choice.

    ``mode`` is ``"rational"``, ``"float"`` or ``"auto"``.  In auto and
    rational mode a rational tree at a point of exact numbers gives a
    Fraction; anything else falls back to doubles.
    """
    if mode not in ("auto", "rational", "float"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode != "float" and is_rational(e) and all(
        isinstance(p, (int, Fraction)) for p in point
    ):
        return eval_exact(e, point)
    return eval_real(e, point)


def eval_jet_at(e: Expr, var_jets: Sequence, exact: bool = True):
    """Evaluate ``e`` with each variable replaced by a jet from ``var_jets``.

    With ``exact=False`` literals are converted to doubles.
    """
    from .jets import WeightedJet  # local import keeps the dependency one-way

    if isinstance(e, Const):
        value = e.value if exact else float(e.value)
        return WeightedJet.constant(var_jets[0].dim, None, value)
    if isinstance(e, Var):
        return var_jets[e.index]
    if isinstance(e, Unary):
        a = eval_jet_at(e.arg, var_jets, exact)
        if e.op == "neg":
            return -a
        return a.apply(e.op)
    if isinstance(e, Pow):
        return eval_jet_at(e.base, var_jets, exact) ** e.exponent
    a = eval_jet_at(e.left, var_jets, exact)
    b = eval_jet_at(e.right, var_jets, exact)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    return a / b


def eval_jet(e: Expr, center: Sequence, order: int = 4, exact=None):
    """Weighted Taylor jet of ``e`` at ``center`` up to weighted degree ``order``.

    The jet variables are the displacements ``y = x - center``.  With
    ``exact=None`` rational trees at exact centers are expanded in rational
    arithmetic, everything else in doubles.
    """
    from .jets import WeightedJet

    dim = len(center)
    _check_point(e, center)
    if exact is None:
        exact = is_rational(e) and all(isinstance(c, (int, Fraction)) for c in center)
    cvals = [Fraction(c) for c in center] if exact else [float(c) for c in center]
    var_jets = [WeightedJet.variable(dim, order, i, cvals[i]) for i in range(dim)]
    return eval_jet_at(e, var_jets, exact).truncate(order)
