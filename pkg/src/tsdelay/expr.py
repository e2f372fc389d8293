"""A small arithmetic expression language for coefficients, delays and forcing.

Grammar (lowest precedence first)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

so ``^`` binds tighter than unary minus (``-t^2 == -(t^2)``) and associates
to the right.  Evaluation is plain IEEE double arithmetic.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Union

from .errors import ArityError, ExprSyntaxError, MathDomain, UnboundVariable, UnknownFunction


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Union[Num, Var, Neg, BinOp, Call]


def _floor(x):
    return float(math.floor(x))


# name -> (callable, min arity, max arity or None)
FUNCTIONS: dict[str, tuple[Callable, int, int | None]] = {
    "sin": (math.sin, 1, 1),
    "cos": (math.cos, 1, 1),
    "exp": (math.exp, 1, 1),
    "log": (math.log, 1, 1),
    "sqrt": (math.sqrt, 1, 1),
    "abs": (abs, 1, 1),
    "floor": (_floor, 1, 1),
    "min": (min, 2, None),
    "max": (max, 2, None),
}

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def take(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, value: str):
        kind, text, pos = self.tok
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos)
        return self.take()

    def parse(self) -> Expr:
        node = self.expr()
        kind, text, pos = self.tok
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", pos)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.tok[0] == "op" and self.tok[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if self.tok[0] == "op" and self.tok[1] == "(":
                return self.call(text, pos)
            return Var(text)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", pos)

    def call(self, name: str, pos: int) -> Expr:
        if name not in FUNCTIONS:
            raise UnknownFunction(f"unknown function {name!r} at offset {pos}")
        self.expect("(")
        args = [self.expr()]
        while self.tok[0] == "op" and self.tok[1] == ",":
            self.take()
            args.append(self.expr())
        self.expect(")")
        _, lo, hi = FUNCTIONS[name]
        if len(args) < lo or (hi is not None and len(args) > hi):
            want = str(lo) if hi == lo else f"at least {lo}"
            raise ArityError(f"{name} takes {want} argument(s), got {len(args)} (offset {pos})")
        return Call(name, tuple(args))


def parse_expression(text: str) -> Expr:
    """Parse ``text`` into an expression tree."""
    return _Parser(text).parse()


def free_variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return free_variables(e.operand)
    if isinstance(e, BinOp):
        return free_variables(e.left) | free_variables(e.right)
    if isinstance(e, Call):
        return set().union(*(free_variables(a) for a in e.args))
    return set()


def _binary(op: str, a: float, b: float) -> float:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise MathDomain(f"division by zero ({a} / {b})")
        return a / b
    try:
        return math.pow(a, b)
    except (ValueError, ZeroDivisionError) as exc:
        raise MathDomain(f"{a} ^ {b} is not a real number") from exc


def eval_expression(e: Expr, bindings: Mapping[str, float]) -> float:
    """Evaluate ``e`` with variables taken from ``bindings``."""
    try:
        return _eval(e, bindings)
    except OverflowError as exc:
        raise MathDomain(f"overflow: {exc}") from exc


def _eval(e: Expr, env: Mapping[str, float]) -> float:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return float(env[e.name])
        except KeyError:
            raise UnboundVariable(f"variable {e.name!r} is not bound") from None
    if isinstance(e, Neg):
        return -_eval(e.operand, env)
    if isinstance(e, BinOp):
        return _binary(e.op, _eval(e.left, env), _eval(e.right, env))
    fn = FUNCTIONS[e.name][0]
    args = [_eval(a, env) for a in e.args]
    try:
        return float(fn(*args))
    except ValueError as exc:
        raise MathDomain(f"{e.name}({', '.join(map(repr, args))}) is undefined") from exc


def to_source(e: Expr) -> str:
    """Text that parses back to a structurally identical tree."""
    if isinstance(e, Num):
        if e.value < 0 or math.copysign(1.0, e.value) < 0:
            raise ValueError("negative literals have no source form; use Neg")
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_source(e.operand)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)} {e.op} {to_source(e.right)})"
    return f"{e.name}({', '.join(to_source(a) for a in e.args)})"


def compile_expression(e: Expr, variables: tuple[str, ...] = ("t",)) -> Callable[..., float]:
    """Positional callable ``f(*values)`` over the named ``variables``."""
    missing = free_variables(e) - set(variables)
    if missing:
        raise UnboundVariable(f"unbound variable(s): {', '.join(sorted(missing))}")

    def fn(*values):
        return eval_expression(e, dict(zip(variables, values)))

    return fn
