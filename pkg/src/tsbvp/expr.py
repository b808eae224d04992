"""Arithmetic expression language for problem files.

Grammar (loosest to tightest)::

    expr  := term (("+" | "-") term)*
    term  := unary (("*" | "/") unary)*
    unary := "-" unary | power
    power := atom ("^" unary)?          # right-associative
    atom  := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

Names are ``t``, ``x`` and ``x1``, ``x2``, ...; functions are ``abs``,
``min``, ``max``, ``sqrt``, ``exp``, ``sin`` and ``cos``.  There is no implicit
multiplication.
"""
from __future__ import annotations

import math
import re
from collections.abc import Callable, Mapping
from dataclasses import dataclass

from .errors import ExprEvalError, ExprSyntaxError

FUNCTIONS: dict[str, tuple[int, int | None]] = {
    "abs": (1, 1),
    "sqrt": (1, 1),
    "exp": (1, 1),
    "sin": (1, 1),
    "cos": (1, 1),
    "min": (2, None),
    "max": (2, None),
}
_VARIABLE = re.compile(r"t|x|x[1-9][0-9]*")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: Expr


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[Expr, ...]


Expr = Num | Var | Neg | BinOp | Call

_TOKEN = re.compile(
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
    kind: str
    text: str
    offset: int


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), _byte_offset(text, pos)))
        pos = m.end()
    tokens.append(_Token("end", "", _byte_offset(text, len(text))))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> None:
        if self.tok.text != text or self.tok.kind != "op":
            raise ExprSyntaxError(f"expected {text!r}, found {self._describe()}", self.tok.offset)
        self.pos += 1

    def _describe(self) -> str:
        return "end of input" if self.tok.kind == "end" else repr(self.tok.text)

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self._describe()}", self.tok.offset)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.take().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.take().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.take()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.take()
            if tok.text in FUNCTIONS:
                return self.call(tok)
            if _VARIABLE.fullmatch(tok.text):
                return Var(tok.text)
            raise ExprSyntaxError(f"unknown identifier {tok.text!r}", tok.offset)
        if tok.kind == "op" and tok.text == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"expected a number, name or '(', found {self._describe()}", tok.offset)

    def call(self, name_tok: _Token) -> Expr:
        self.expect("(")
        args = [self.expr()]
        while self.tok.kind == "op" and self.tok.text == ",":
            self.take()
            args.append(self.expr())
        self.expect(")")
        lo, hi = FUNCTIONS[name_tok.text]
        if len(args) < lo or (hi is not None and len(args) > hi):
            raise ExprSyntaxError(
                f"{name_tok.text} takes {lo if hi == lo else f'at least {lo}'} argument(s), got {len(args)}",
                name_tok.offset,
            )
        return Call(name_tok.text, tuple(args))


def parse(text: str) -> Expr:
    return _Parser(text).parse()


def to_text(e: Expr) -> str:
    """Fully parenthesized rendering; ``parse(to_text(e)) == e``."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_text(e.operand)})"
    if isinstance(e, BinOp):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    return f"{e.name}({', '.join(to_text(a) for a in e.args)})"


def free_variables(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, Num):
        return frozenset()
    if isinstance(e, Neg):
        return free_variables(e.operand)
    if isinstance(e, BinOp):
        return free_variables(e.left) | free_variables(e.right)
    return frozenset().union(*(free_variables(a) for a in e.args))


def _checked(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise ExprEvalError(f"{what} produced a non-finite value")
    return value


def _pow(a: float, b: float) -> float:
    if a < 0 and not float(b).is_integer():
        raise ExprEvalError(f"negative base {a!r} with non-integer exponent {b!r}")
    if a == 0 and b < 0:
        raise ExprEvalError("zero raised to a negative power")
    try:
        return _checked(math.pow(a, b), "^")
    except OverflowError:
        raise ExprEvalError("^ overflowed") from None


def _div(a: float, b: float) -> float:
    if b == 0:
        raise ExprEvalError("division by zero")
    return _checked(a / b, "/")


def _sqrt(a: float) -> float:
    if a < 0:
        raise ExprEvalError(f"sqrt of negative value {a!r}")
    return math.sqrt(a)


def _exp(a: float) -> float:
    try:
        return math.exp(a)
    except OverflowError:
        raise ExprEvalError("exp overflowed") from None


_BINARY: dict[str, Callable[[float, float], float]] = {
    "+": lambda a, b: _checked(a + b, "+"),
    "-": lambda a, b: _checked(a - b, "-"),
    "*": lambda a, b: _checked(a * b, "*"),
    "/": _div,
    "^": _pow,
}
_CALLS: dict[str, Callable[..., float]] = {
    "abs": abs,
    "sqrt": _sqrt,
    "exp": _exp,
    "sin": math.sin,
    "cos": math.cos,
    "min": min,
    "max": max,
}

Compiled = Callable[[Mapping[str, float]], float]


def compile_expr(e: Expr) -> Compiled:
    """Turn an AST into a closure ``env -> float``; same semantics as :func:`evaluate`."""
    if isinstance(e, Num):
        value = e.value
        return lambda env: value
    if isinstance(e, Var):
        name = e.name

        def var(env):
            try:
                return float(env[name])
            except KeyError:
                raise ExprEvalError(f"unbound variable {name!r}") from None

        return var
    if isinstance(e, Neg):
        inner = compile_expr(e.operand)
        return lambda env: -inner(env)
    if isinstance(e, BinOp):
        fn = _BINARY[e.op]
        left, right = compile_expr(e.left), compile_expr(e.right)
        return lambda env: fn(left(env), right(env))
    fn = _CALLS[e.name]
    args = [compile_expr(a) for a in e.args]
    return lambda env: _checked(float(fn(*(a(env) for a in args))), e.name)


def evaluate(e: Expr, bindings: Mapping[str, float]) -> float:
    """Evaluate ``e`` in double precision; faults raise :class:`ExprEvalError`."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.name not in bindings:
            raise ExprEvalError(f"unbound variable {e.name!r}")
        return float(bindings[e.name])
    if isinstance(e, Neg):
        return -evaluate(e.operand, bindings)
    if isinstance(e, BinOp):
        return _BINARY[e.op](evaluate(e.left, bindings), evaluate(e.right, bindings))
    return _checked(float(_CALLS[e.name](*(evaluate(a, bindings) for a in e.args))), e.name)


class Formula:
    """Parsed expression text bundled with its compiled evaluator."""

    __slots__ = ("text", "ast", "_fn")

    def __init__(self, text: str):
        self.text = text
        self.ast = parse(text)
        self._fn = compile_expr(self.ast)

    @property
    def variables(self) -> frozenset[str]:
        return free_variables(self.ast)

    def __call__(self, **bindings: float) -> float:
        return self._fn(bindings)

    def evaluate(self, bindings: Mapping[str, float]) -> float:
        return self._fn(bindings)

    def __repr__(self) -> str:
        return f"Formula({self.text!r})"
