"""Scalar expressions of time ``t``.

Grammar (whitespace-insensitive)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | atom
    atom   := NUMBER | 't' | ('sin' | 'cos') '(' expr ')' | '(' expr ')'

Numbers are decimal literals with an optional fraction and exponent.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union


class ExprSyntaxError(ValueError):
    def __init__(self, source: str, offset: int, expected: tuple[str, ...], found: str):
        self.source = source
        self.offset = offset
        self.expected = expected
        self.found = found
        want = ", ".join(expected)
        super().__init__(f"syntax error at byte {offset}: expected one of {{{want}}}, found {found}")


class UnknownIdentifierError(ExprSyntaxError):
    def __init__(self, source: str, offset: int, name: str):
        ValueError.__init__(self, f"unknown identifier {name!r} at byte {offset}")
        self.source = source
        self.offset = offset
        self.expected = ("t", "sin", "cos")
        self.found = name
        self.name = name


class ExprEvalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Time:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Const, Time, Neg, BinOp, Call]

MAX_SOURCE_LENGTH = 4096

FUNCTIONS = {"sin": math.sin, "cos": math.cos}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<num>(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/()])
    """,
    re.VERBOSE,
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    raw = source.encode("utf-8")
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            offset = len(source[:pos].encode("utf-8"))
            raise ExprSyntaxError(source, offset, ("number", "t", "sin", "cos", "(", "+", "-", "*", "/", ")"),
                                  repr(source[pos]))
        kind = m.lastgroup
        if kind != "ws":
            offset = len(source[:pos].encode("utf-8"))
            tokens.append((kind, m.group(), offset))
        pos = m.end()
    tokens.append(("end", "", len(raw)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected: tuple[str, ...]):
        kind, text, offset = self.peek()
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(self.source, offset, expected, found)

    def expect(self, text: str):
        kind, tok, _ = self.peek()
        if kind != "op" or tok != text:
            self.fail((repr(text),))
        self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail(("+", "-", "*", "/", "end of input"))
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary())
        return self.atom()

    def atom(self) -> Expr:
        kind, text, offset = self.peek()
        if kind == "num":
            self.advance()
            value = float(text)
            if not math.isfinite(value):
                raise ExprSyntaxError(self.source, offset, ("finite number",), repr(text))
            return Const(value)
        if kind == "name":
            self.advance()
            if text == "t":
                return Time()
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            raise UnknownIdentifierError(self.source, offset, text)
        if kind == "op" and text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.fail(("number", "t", "sin", "cos", "(", "-"))


def parse_expr(source: str) -> Expr:
    """Parse ``source`` into an expression tree.

    Raises :class:`ExprSyntaxError` (with byte offset and expected tokens) or
    :class:`UnknownIdentifierError`.
    """
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ExprSyntaxError(repr(source), exc.start, ("UTF-8 text",), "invalid byte") from None
    if not isinstance(source, str):
        raise TypeError(f"expression source must be str, got {type(source).__name__}")
    if not source.strip():
        raise ExprSyntaxError(source, 0, ("number", "t", "sin", "cos", "(", "-"), "end of input")
    if len(source) > MAX_SOURCE_LENGTH:
        raise ExprSyntaxError(source, MAX_SOURCE_LENGTH, ("end of input",), "overlong expression")
    try:
        return _Parser(source).parse()
    except RecursionError:
        raise ExprSyntaxError(source, 0, ("shallower nesting",), "expression nested too deeply") from None


def _call(e: "Call", fn, x: float, t: float) -> float:
    try:
        return fn(x)
    except ValueError:
        raise ExprEvalError(f"{e.func} of non-finite argument in {to_source(e)} at t={t!r}") from None


def eval_expr(e: Expr, t: float) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Time):
        return t
    if isinstance(e, Neg):
        return -eval_expr(e.arg, t)
    if isinstance(e, Call):
        return _call(e, FUNCTIONS[e.func], eval_expr(e.arg, t), t)
    a = eval_expr(e.left, t)
    b = eval_expr(e.right, t)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if b == 0.0:
        raise ExprEvalError(f"division by zero in {to_source(e)} at t={t!r}")
    return a / b


def to_source(e: Expr) -> str:
    """Render ``e`` as text that parses back to an equivalent tree."""
    if isinstance(e, Const):
        return repr(e.value) if e.value >= 0 else f"({e.value!r})"
    if isinstance(e, Time):
        return "t"
    if isinstance(e, Neg):
        return f"-({to_source(e.arg)})"
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    return f"({to_source(e.left)} {e.op} {to_source(e.right)})"


def compile_expr(e: Expr) -> Callable[[float], float]:
    """Closure equivalent of ``lambda t: eval_expr(e, t)``, minus the dispatch.

    Performs the same floating point operations in the same order, so the
    result is bit-identical to :func:`eval_expr`.
    """
    if isinstance(e, Const):
        v = e.value
        return lambda t: v
    if isinstance(e, Time):
        return lambda t: t
    if isinstance(e, Neg):
        f = compile_expr(e.arg)
        return lambda t: -f(t)
    if isinstance(e, Call):
        fn = FUNCTIONS[e.func]
        f = compile_expr(e.arg)
        return lambda t: _call(e, fn, f(t), t)
    left = compile_expr(e.left)
    right = compile_expr(e.right)
    if e.op == "+":
        return lambda t: left(t) + right(t)
    if e.op == "-":
        return lambda t: left(t) - right(t)
    if e.op == "*":
        return lambda t: left(t) * right(t)

    def divide(t, _e=e):
        b = right(t)
        if b == 0.0:
            raise ExprEvalError(f"division by zero in {to_source(_e)} at t={t!r}")
        return left(t) / b

    return divide


def is_constant(e: Expr) -> bool:
    if isinstance(e, Const):
        return True
    if isinstance(e, Time):
        return False
    if isinstance(e, (Neg, Call)):
        return is_constant(e.arg)
    return is_constant(e.left) and is_constant(e.right)
