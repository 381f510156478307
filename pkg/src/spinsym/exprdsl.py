"""Closed-form scalar expressions in chart coordinates.

Every input field (frame components, operator coefficients, gauge maps,
potentials) is written as a small arithmetic expression over the
coordinates ``x1 .. x4``.  Grammar::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = "-" , unary | power ;
    power   = atom , [ "^" , unary ] ;            (* right-associative *)
    atom    = number | constant | variable
            | function , "(" , expr , ")"
            | "(" , expr , ")" ;
    number  = digits , [ "." , digits ] , [ exponent ]
            | "." , digits , [ exponent ] ;
    exponent = ("e" | "E") , [ "+" | "-" ] , digits ;
    constant = "pi" | "e" ;
    variable = "x1" | "x2" | "x3" | "x4" ;
    function = "sin" | "cos" | "tan" | "sinh" | "cosh" | "tanh"
             | "exp" | "log" | "sqrt" | "abs" ;

Evaluation is vectorised: a point of shape ``(dim,)`` gives a float, an
array of shape ``(..., dim)`` gives an array of shape ``(...)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import EvalDomainError, ParseError

CONSTANTS = {"pi": math.pi, "e": math.e}

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
}

# integer-valued exponents are accepted within this distance of an integer
_INT_TOL = 1e-12


@dataclass(frozen=True)
class Num:
    value: float
    pos: int = 0


@dataclass(frozen=True)
class Const:
    name: str
    pos: int = 0


@dataclass(frozen=True)
class Var:
    index: int  # 1-based coordinate index
    pos: int = 0


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    pos: int = 0


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    pos: int = 0


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"
    pos: int = 0


Expr = Union[Num, Const, Var, Neg, BinOp, Call]


# ---------------------------------------------------------------- lexing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "num", "name", "op", "end"
    text: str
    pos: int  # 1-based


def tokenize(source: str) -> list[_Token]:
    tokens = []
    i = 0
    while i < len(source):
        m = _TOKEN_RE.match(source, i)
        if m is None:
            raise ParseError(f"unexpected character {source[i]!r}", i + 1, source)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), i + 1))
        i = m.end()
    tokens.append(_Token("end", "", len(source) + 1))
    return tokens


# --------------------------------------------------------------- parsing


class _Parser:
    def __init__(self, source: str, dim: int):
        self.source = source
        self.dim = dim
        self.tokens = tokenize(source)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def error(self, message, pos=None):
        return ParseError(message, self.tok.pos if pos is None else pos, self.source)

    def accept(self, text):
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected token {self.tok.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok
            self.i += 1
            node = BinOp(op.text, node, self.term(), op.pos)
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok
            self.i += 1
            node = BinOp(op.text, node, self.unary(), op.pos)
        return node

    def unary(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            pos = self.tok.pos
            self.i += 1
            return Neg(self.unary(), pos)
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            pos = self.tok.pos
            self.i += 1
            return BinOp("^", base, self.unary(), pos)
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text), tok.pos)
        if tok.kind == "name":
            self.i += 1
            return self.name(tok)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        found = tok.text or "end of input"
        raise self.error(f"expected a number, name or '(', found {found!r}")

    def name(self, tok):
        name = tok.text
        if name in FUNCTIONS:
            if not self.accept("("):
                raise self.error(f"function {name!r} must be called with parentheses")
            args = []
            if not self.accept(")"):
                args.append(self.expr())
                while self.accept(","):
                    args.append(self.expr())
                self.expect(")")
            if len(args) != 1:
                raise ParseError(
                    f"function {name!r} takes 1 argument, got {len(args)}",
                    tok.pos,
                    self.source,
                )
            return Call(name, args[0], tok.pos)
        if name in CONSTANTS:
            return Const(name, tok.pos)
        m = re.fullmatch(r"x([1-9][0-9]*)", name)
        if m:
            index = int(m.group(1))
            if index > self.dim:
                raise ParseError(
                    f"variable {name!r}: variable index exceeds dimension {self.dim}",
                    tok.pos,
                    self.source,
                )
            return Var(index, tok.pos)
        raise ParseError(f"unknown identifier {name!r}", tok.pos, self.source)


def parse(source: str, dim: int = 4) -> Expr:
    """Parse ``source`` into an immutable expression tree.

    Raises:
        ParseError: on lexical/syntax errors, unknown identifiers, variables
            beyond ``dim`` or wrong call arity.  ``err.pos`` is 1-based.
    """
    if dim not in (3, 4):
        raise ValueError(f"dim must be 3 or 4, got {dim}")
    if not source or not source.strip():
        raise ParseError("empty expression", 1, source)
    return _Parser(source, dim).parse()


def max_variable(node: Expr) -> int:
    """Largest coordinate index referenced by ``node`` (0 if none)."""
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Neg):
        return max_variable(node.operand)
    if isinstance(node, Call):
        return max_variable(node.arg)
    if isinstance(node, BinOp):
        return max(max_variable(node.left), max_variable(node.right))
    return 0


# ------------------------------------------------------------ evaluation


def evaluate(node: Expr, point) -> float | np.ndarray:
    """Evaluate ``node`` at ``point`` (shape ``(dim,)`` or ``(..., dim)``).

    Raises:
        EvalDomainError: for division by zero, log/sqrt outside the domain,
            non-integer exponents or non-finite results.
    """
    x = np.asarray(point, dtype=float)
    if x.ndim == 0:
        raise ValueError("point must have at least one axis")
    if max_variable(node) > x.shape[-1]:
        raise ValueError(
            f"expression uses x{max_variable(node)} but point has dimension {x.shape[-1]}"
        )
    with np.errstate(all="ignore"):
        value = _eval(node, x)
    value = np.broadcast_to(value, x.shape[:-1])
    if x.ndim == 1:
        return float(value)
    return np.array(value, dtype=float)


def _eval(node, x):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Var):
        return x[..., node.index - 1]
    if isinstance(node, Neg):
        return -_eval(node.operand, x)
    if isinstance(node, Call):
        arg = _eval(node.arg, x)
        if node.func == "log" and np.any(np.asarray(arg) <= 0):
            raise EvalDomainError("log of a non-positive value", node.pos)
        if node.func == "sqrt" and np.any(np.asarray(arg) < 0):
            raise EvalDomainError("sqrt of a negative value", node.pos)
        return _finite(FUNCTIONS[node.func](arg), node)
    if isinstance(node, BinOp):
        a = _eval(node.left, x)
        b = _eval(node.right, x)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if np.any(np.asarray(b) == 0):
                raise EvalDomainError("division by zero", node.pos)
            return _finite(a / b, node)
        if node.op == "^":
            k = np.rint(b)
            if np.any(np.abs(np.asarray(b) - k) > _INT_TOL):
                raise EvalDomainError("exponent must be an integer", node.pos)
            if np.any((np.asarray(a) == 0) & (np.asarray(k) < 0)):
                raise EvalDomainError("zero raised to a negative power", node.pos)
            return _finite(np.power(np.asarray(a, dtype=float), k), node)
    raise TypeError(f"not an expression node: {node!r}")


def _finite(value, node):
    if not np.all(np.isfinite(value)):
        raise EvalDomainError(f"non-finite result in {type(node).__name__.lower()}", node.pos)
    return value


# --------------------------------------------------------------- printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def to_source(node: Expr) -> str:
    """Render ``node`` back to source text.

    Binary operations are fully parenthesised and literals use ``repr`` so
    that ``parse(to_source(ast))`` evaluates identically to ``ast``.
    """
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    raise TypeError(f"not an expression node: {node!r}")


# -------------------------------------------------------- complex entries


@dataclass(frozen=True)
class ComplexExpr:
    """A complex-valued entry given as a pair of real expressions."""

    re: Expr
    im: Expr

    @classmethod
    def parse(cls, re_source: str, im_source: str | None = None, dim: int = 4) -> "ComplexExpr":
        im = parse(im_source, dim) if im_source is not None else Num(0.0)
        return cls(parse(re_source, dim), im)

    def evaluate(self, point):
        return evaluate(self.re, point) + 1j * evaluate(self.im, point)


def split_top_level(source: str, sep: str = ",") -> list[str]:
    """Split ``source`` on ``sep`` occurrences outside parentheses."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(source):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == sep and depth == 0:
            parts.append(source[start:i])
            start = i + 1
    parts.append(source[start:])
    return [p.strip() for p in parts]
