"""Arithmetic expressions in the variables x, z, eps.

Grammar, loosest binding first::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          right associative
    atom    := NUMBER | NAME | NAME '(' sum ')' | '(' sum ')'

'^' binds tighter than unary minus, so ``-x^2`` is ``-(x^2)`` while
``x^-2`` is ``x^(-2)``.  Function application is an atom, so
``exp(x)^2`` squares the exponential.  There is no implicit
multiplication: ``2x`` is a syntax error.  The only variables are
``x``, ``z`` and ``eps``; the only functions are ``exp``, ``log``,
``sin``, ``cos``, ``sqrt`` and ``abs``.

Parsing and evaluation are total: malformed text raises a located
error (byte offset into the source) and evaluation at finite inputs
either returns a finite float or raises ``DomainFaultError`` naming
the offending subexpression.  Parsed trees are immutable.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import DelayLabError

VARIABLES = ("x", "z", "eps")
FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt", "abs")


class ExpressionError(DelayLabError):
    """Located expression problem; ``offset`` is a byte offset."""

    def __init__(self, message: str, source: str, pos: int):
        self.source = source
        self.offset = len(source[:pos].encode("utf-8"))
        super().__init__(f"{message} (offset {self.offset})")


class ExprSyntaxError(ExpressionError):
    pass


class UnknownNameError(ExpressionError):
    pass


class DomainFaultError(ExpressionError):
    """Evaluation left the real domain (log of a non-positive value, ...)."""

    def __init__(self, message: str, source: str, span: tuple[int, int]):
        self.span = span
        snippet = source[span[0]:span[1]]
        super().__init__(f"{message} in '{snippet}'", source, span[0])


@dataclass(frozen=True)
class _Node:
    span: tuple[int, int]


@dataclass(frozen=True)
class Const(_Node):
    value: float


@dataclass(frozen=True)
class Var(_Node):
    name: str


@dataclass(frozen=True)
class Neg(_Node):
    arg: _Node


@dataclass(frozen=True)
class BinOp(_Node):
    op: str
    left: _Node
    right: _Node


@dataclass(frozen=True)
class Call(_Node):
    func: str
    arg: _Node


@dataclass(frozen=True)
class Expr:
    """An immutable parsed expression; callable as ``e(x, z, eps)``."""

    source: str
    root: _Node

    def __call__(self, x: float, z: float, eps: float) -> float:
        return evaluate(self, x, z, eps)


_TOKEN_RE = re.compile(
    r"""(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
      | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<op>[-+*/^()])
      | (?P<ws>\s+)""",
    re.VERBOSE,
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", source, pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, tokens: list[tuple[str, str, int]]):
        self.source = source
        self.tokens = tokens
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse(self) -> _Node:
        node = self.sum()
        kind, text, pos = self.peek()
        if kind != "end":
            if text == ")":
                raise ExprSyntaxError("unbalanced ')'", self.source, pos)
            raise ExprSyntaxError(f"unexpected {text!r}", self.source, pos)
        return node

    def sum(self) -> _Node:
        node = self.product()
        while self.peek()[1] in ("+", "-"):
            _, op, _ = self.advance()
            rhs = self.product()
            node = BinOp((node.span[0], rhs.span[1]), op, node, rhs)
        return node

    def product(self) -> _Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            _, op, _ = self.advance()
            rhs = self.unary()
            node = BinOp((node.span[0], rhs.span[1]), op, node, rhs)
        return node

    def unary(self) -> _Node:
        kind, text, pos = self.peek()
        if text == "-" and kind == "op":
            self.advance()
            arg = self.unary()
            return Neg((pos, arg.span[1]), arg)
        return self.power()

    def power(self) -> _Node:
        base = self.atom()
        if self.peek()[1] == "^":
            self.advance()
            exponent = self.unary()
            return BinOp((base.span[0], exponent.span[1]), "^", base, exponent)
        return base

    def atom(self) -> _Node:
        kind, text, pos = self.advance()
        if kind == "num":
            return Const((pos, pos + len(text)), float(text))
        if kind == "name":
            if self.peek()[1] == "(":
                if text not in FUNCTIONS:
                    raise UnknownNameError(
                        f"unknown function '{text}'; functions are "
                        + ", ".join(FUNCTIONS),
                        self.source, pos,
                    )
                _, _, lpos = self.advance()
                arg = self.sum()
                k2, t2, p2 = self.advance()
                if t2 != ")":
                    raise ExprSyntaxError("unbalanced '('", self.source, lpos)
                return Call((pos, p2 + 1), text, arg)
            if text not in VARIABLES:
                raise UnknownNameError(
                    f"unknown identifier '{text}'; variables are x, z, eps",
                    self.source, pos,
                )
            return Var((pos, pos + len(text)), text)
        if text == "(":
            node = self.sum()
            k2, t2, p2 = self.advance()
            if t2 != ")":
                raise ExprSyntaxError("unbalanced '('", self.source, pos)
            return node
        if text == ")":
            raise ExprSyntaxError("unbalanced ')'", self.source, pos)
        if kind == "end":
            raise ExprSyntaxError("unexpected end of expression", self.source, pos)
        raise ExprSyntaxError(f"unexpected {text!r}", self.source, pos)


def parse(source: str) -> Expr:
    """Parse ``source`` into an immutable expression tree."""
    if source is None or source.strip() == "":
        raise ExprSyntaxError("empty expression", source or "", 0)
    tokens = _tokenize(source)
    if tokens[0][0] == "end":
        raise ExprSyntaxError("empty expression", source, 0)
    return Expr(source, _Parser(source, tokens).parse())


def _fault(message: str, source: str, node: _Node) -> DomainFaultError:
    return DomainFaultError(message, source, node.span)


def _eval(node: _Node, src: str, x: float, z: float, eps: float) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return {"x": x, "z": z, "eps": eps}[node.name]
    if isinstance(node, Neg):
        return -_eval(node.arg, src, x, z, eps)
    if isinstance(node, BinOp):
        a = _eval(node.left, src, x, z, eps)
        b = _eval(node.right, src, x, z, eps)
        if node.op == "+":
            r = a + b
        elif node.op == "-":
            r = a - b
        elif node.op == "*":
            r = a * b
        elif node.op == "/":
            if b == 0.0:
                raise _fault("division by zero", src, node)
            r = a / b
        else:  # '^'
            if a == 0.0 and b < 0.0:
                raise _fault("zero raised to a negative power", src, node)
            if a < 0.0 and b != math.floor(b):
                raise _fault("negative base with non-integer exponent", src, node)
            try:
                r = math.pow(a, b)
            except (OverflowError, ValueError):
                raise _fault("overflow in power", src, node) from None
        if not math.isfinite(r):
            raise _fault("non-finite result", src, node)
        return r
    if isinstance(node, Call):
        v = _eval(node.arg, src, x, z, eps)
        try:
            if node.func == "exp":
                r = math.exp(v)
            elif node.func == "log":
                if v <= 0.0:
                    raise _fault("log of a non-positive value", src, node)
                r = math.log(v)
            elif node.func == "sqrt":
                if v < 0.0:
                    raise _fault("sqrt of a negative value", src, node)
                r = math.sqrt(v)
            elif node.func == "sin":
                r = math.sin(v)
            elif node.func == "cos":
                r = math.cos(v)
            else:  # abs
                r = abs(v)
        except OverflowError:
            raise _fault(f"overflow in {node.func}", src, node) from None
        if not math.isfinite(r):
            raise _fault("non-finite result", src, node)
        return r
    raise AssertionError(f"unhandled node {node!r}")


def evaluate(expr: Expr, x: float, z: float, eps: float) -> float:
    """Evaluate ``expr`` at finite inputs; finite result or located fault."""
    return _eval(expr.root, expr.source, x, z, eps)
