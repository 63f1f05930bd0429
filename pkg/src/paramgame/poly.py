"""Polynomially-bounded unary function expressions.

Every game in this library is parameterized by a security parameter ``n``,
and all bounds (play lengths, copy counts, oracle budgets, string lengths)
are expressed as members of a small closed class of unary functions on the
naturals: the identity, ceiling base-2 logarithm, nonnegative integer
constants, and anything built from those with addition, multiplication and
composition.  Expressions are immutable trees, evaluable at any ``n``.

Textual syntax (used by the CLI and config files)::

    id                the identity
    lg                ceiling log2 (lg(0) = lg(1) = 0)
    7                 a constant
    p + q, p * q      pointwise sum / product
    p @ q             composition: (p @ q)(n) = p(q(n))

``@`` binds tightest, then ``*``, then ``+``; parentheses as usual.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

__all__ = [
    "PolyExpr",
    "Ident",
    "Lg",
    "Const",
    "Add",
    "Mul",
    "Compose",
    "IDENT",
    "LG",
    "const",
    "parse_poly",
    "leq",
    "PolyParseError",
]


class PolyParseError(ValueError):
    """Raised when polynomial expression text cannot be parsed."""


def ceil_log2(n: int) -> int:
    """Ceiling of log2 with lg(0) = lg(1) = 0 to keep evaluation total."""
    if n <= 1:
        return 0
    return (n - 1).bit_length()


class PolyExpr:
    """Base class for polynomial-bound expressions.

    Instances are immutable and hashable; they can be shared freely
    across threads and evaluated concurrently.
    """

    def eval(self, n: int) -> int:
        raise NotImplementedError

    def __call__(self, n: int) -> int:
        return self.eval(n)

    def __add__(self, other: "PolyExpr | int") -> "PolyExpr":
        return Add(self, _coerce(other))

    def __radd__(self, other: "PolyExpr | int") -> "PolyExpr":
        return Add(_coerce(other), self)

    def __mul__(self, other: "PolyExpr | int") -> "PolyExpr":
        return Mul(self, _coerce(other))

    def __rmul__(self, other: "PolyExpr | int") -> "PolyExpr":
        return Mul(_coerce(other), self)

    def __matmul__(self, other: "PolyExpr | int") -> "PolyExpr":
        return Compose(self, _coerce(other))


def _coerce(value: "PolyExpr | int") -> PolyExpr:
    if isinstance(value, PolyExpr):
        return value
    if isinstance(value, int) and not isinstance(value, bool) and value >= 0:
        return Const(value)
    raise TypeError(f"cannot use {value!r} as a polynomial expression")


def _check_n(n: int) -> None:
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise ValueError(f"security parameter must be a nonnegative integer, got {n!r}")


@dataclass(frozen=True)
class Ident(PolyExpr):
    def eval(self, n: int) -> int:
        _check_n(n)
        return n

    def __str__(self) -> str:
        return "id"


@dataclass(frozen=True)
class Lg(PolyExpr):
    def eval(self, n: int) -> int:
        _check_n(n)
        return ceil_log2(n)

    def __str__(self) -> str:
        return "lg"


@dataclass(frozen=True)
class Const(PolyExpr):
    value: int

    def __post_init__(self) -> None:
        if self.value < 0:
            raise ValueError("constants must be nonnegative")

    def eval(self, n: int) -> int:
        _check_n(n)
        return self.value

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Add(PolyExpr):
    left: PolyExpr
    right: PolyExpr

    def eval(self, n: int) -> int:
        return self.left.eval(n) + self.right.eval(n)

    def __str__(self) -> str:
        return f"{self.left}+{self.right}"


@dataclass(frozen=True)
class Mul(PolyExpr):
    left: PolyExpr
    right: PolyExpr

    def eval(self, n: int) -> int:
        return self.left.eval(n) * self.right.eval(n)

    def __str__(self) -> str:
        return f"{_paren_if(self.left, (Add,))}*{_paren_if(self.right, (Add,))}"


@dataclass(frozen=True)
class Compose(PolyExpr):
    outer: PolyExpr
    inner: PolyExpr

    def eval(self, n: int) -> int:
        return self.outer.eval(self.inner.eval(n))

    def __str__(self) -> str:
        return f"{_paren_if(self.outer, (Add, Mul))}@{_paren_if(self.inner, (Add, Mul))}"


def _paren_if(expr: PolyExpr, kinds: tuple) -> str:
    text = str(expr)
    return f"({text})" if isinstance(expr, kinds) else text


IDENT = Ident()
LG = Lg()


def const(k: int) -> Const:
    return Const(k)


def leq(p: PolyExpr, q: PolyExpr, horizon: int) -> bool:
    """Pointwise order checked on the finite horizon 0..horizon.

    The order on these expressions has no simple symbolic normal form once
    lg enters the picture, so callers state the largest parameter they will
    ever use and the comparison is verified up to there.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    return all(p.eval(n) <= q.eval(n) for n in range(horizon + 1))


_TOKEN_RE = re.compile(r"\s*(?:(\d+)|(id|lg)|([()+*@]))")


def _tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            if text[pos:].strip() == "":
                break
            raise PolyParseError(f"unexpected character {text[pos]!r} in {text!r}")
        tokens.append(match.group(1) or match.group(2) or match.group(3))
        pos = match.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[str], source: str):
        self.tokens = tokens
        self.pos = 0
        self.source = source

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise PolyParseError(f"unexpected end of expression in {self.source!r}")
        self.pos += 1
        return tok

    def parse_expr(self) -> PolyExpr:
        node = self.parse_term()
        while self.peek() == "+":
            self.take()
            node = Add(node, self.parse_term())
        return node

    def parse_term(self) -> PolyExpr:
        node = self.parse_factor()
        while self.peek() == "*":
            self.take()
            node = Mul(node, self.parse_factor())
        return node

    def parse_factor(self) -> PolyExpr:
        node = self.parse_atom()
        while self.peek() == "@":
            self.take()
            node = Compose(node, self.parse_atom())
        return node

    def parse_atom(self) -> PolyExpr:
        tok = self.take()
        if tok == "(":
            node = self.parse_expr()
            if self.take() != ")":
                raise PolyParseError(f"missing ')' in {self.source!r}")
            return node
        if tok == "id":
            return IDENT
        if tok == "lg":
            return LG
        if tok.isdigit():
            return Const(int(tok))
        raise PolyParseError(f"unexpected token {tok!r} in {self.source!r}")


def parse_poly(text: str) -> PolyExpr:
    """Parse the textual syntax into an expression tree."""
    parser = _Parser(_tokenize(text), text)
    node = parser.parse_expr()
    if parser.peek() is not None:
        raise PolyParseError(f"trailing tokens after expression in {text!r}")
    return node
