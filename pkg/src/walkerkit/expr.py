"""Coordinate expressions: AST, text parser/printer and order-2 jet evaluation.

Expressions are written in the coordinates ``x1 .. xn`` (1-based) using
decimal constants, ``+ - * /``, integer powers ``^``, unary minus and the
functions ``sin``, ``cos`` and ``exp``::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' integer)? | '-' factor
    atom   := number | 'x' integer | '(' expr ')' | ('sin'|'cos'|'exp') '(' expr ')'

Evaluation returns a :class:`Jet2` (value, gradient, Hessian) computed by
forward-mode propagation, so derivatives carry no truncation error.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Const",
    "Var",
    "Neg",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Func",
    "Node",
    "ScalarField",
    "Jet2",
    "ExprSyntaxError",
    "IndexRangeError",
    "EvaluationError",
    "parse",
    "to_text",
    "const",
    "eval_jet2",
    "eval_jet2_batch",
    "evaluate",
    "max_index",
]

FUNCTIONS = ("sin", "cos", "exp")


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class ExprSyntaxError(ValueError):
    """Malformed expression text; ``offset`` is the 0-based byte offset."""

    def __init__(self, message: str, text: str, offset: int):
        self.text = text
        self.offset = offset
        super().__init__(f"{message} at byte offset {offset} in {text!r}")


class IndexRangeError(ValueError):
    """A coordinate ``x<i>`` outside ``1..n``."""

    def __init__(self, index: int, n: int, offset: int | None = None):
        self.index = index
        self.n = n
        self.offset = offset
        where = "" if offset is None else f" (byte offset {offset})"
        super().__init__(f"coordinate x{index} out of range 1..{n}{where}")


class EvaluationError(ArithmeticError):
    """Evaluation failed at a point, e.g. division by zero."""


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ValueError(
                f"Const holds a finite non-negative literal, got {self.value!r}; "
                "use const() for signed values"
            )


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    arg: "Node"


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
    exponent: int  # non-negative

    def __post_init__(self):
        if not isinstance(self.exponent, int) or self.exponent < 0:
            raise ValueError(f"exponent must be a non-negative int, got {self.exponent!r}")


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Node"

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")


Node = Union[Const, Var, Neg, Add, Sub, Mul, Div, Pow, Func]


def const(c: float) -> Node:
    """Signed constant as an AST (negative values become ``Neg(Const)``)."""
    c = float(c)
    return Neg(Const(-c)) if c < 0 else Const(c)


def max_index(node: Node) -> int:
    """Largest coordinate index referenced (0 if none)."""
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Const):
        return 0
    if isinstance(node, (Neg, Func)):
        return max_index(node.arg)
    if isinstance(node, Pow):
        return max_index(node.base)
    return max(max_index(node.left), max_index(node.right))


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}
_OPS = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _prec(node: Node) -> int:
    return _PREC.get(type(node), 5)


def to_text(node: Node) -> str:
    """Canonical text; ``parse(to_text(a), n) == a`` for every AST ``a``."""
    if isinstance(node, Const):
        return _fmt_number(node.value)
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Func):
        return f"{node.name}({to_text(node.arg)})"
    if isinstance(node, Pow):
        base = to_text(node.base)
        if _prec(node.base) < 5:
            base = f"({base})"
        return f"{base}^{node.exponent}"
    if isinstance(node, Neg):
        inner = to_text(node.arg)
        # '-' binds a whole factor: only powers, atoms and nested negations
        if _prec(node.arg) < 3:
            inner = f"({inner})"
        return f"-{inner}"
    p = _PREC[type(node)]
    left = to_text(node.left)
    right = to_text(node.right)
    if _prec(node.left) < p:
        left = f"({left})"
    # operators are left-associative: a same-level right operand needs parens,
    # except a negation, which the grammar admits as a factor anywhere
    if _prec(node.right) <= p and not isinstance(node.right, Neg):
        right = f"({right})"
    return f"{left} {_OPS[type(node)]} {right}"


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<var>x(?P<idx>\d+))"
    r"|(?P<func>sin|cos|exp)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


class _Parser:
    def __init__(self, text: str, n: int):
        self.text = text
        self.n = n
        self.tokens: list[tuple[str, str, int]] = []
        self._tokenize()
        self.pos = 0

    def _tokenize(self):
        text = self.text
        i = 0
        while i < len(text):
            if text[i].isspace():
                i += 1
                continue
            m = _TOKEN.match(text, i)
            if m is None or m.end() == i:
                raise ExprSyntaxError(f"unexpected character {text[i]!r}", text, _byte(text, i))
            for kind in ("number", "var", "func", "op"):
                if m.group(kind) is not None:
                    self.tokens.append((kind, m.group(kind), i))
                    break
            i = m.end()
        self.tokens.append(("end", "", len(text)))

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok=None):
        tok = tok or self.peek()
        return ExprSyntaxError(message, self.text, _byte(self.text, tok[2]))

    def expect(self, value: str):
        tok = self.peek()
        if tok[0] != "op" or tok[1] != value:
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(f"expected {value!r}, found {found}")
        self.advance()

    def parse(self) -> Node:
        if self.peek()[0] == "end":
            raise self.error("empty expression")
        node = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            rhs = self.factor()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def factor(self) -> Node:
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.advance()
            return Neg(self.factor())
        node = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.advance()
            tok = self.peek()
            if tok[0] != "number" or not tok[1].isdigit():
                raise self.error("exponent must be a non-negative integer literal")
            self.advance()
            node = Pow(node, int(tok[1]))
        return node

    def atom(self) -> Node:
        tok = self.peek()
        kind, value, _ = tok
        if kind == "number":
            self.advance()
            return Const(float(value))
        if kind == "var":
            self.advance()
            index = int(value[1:])
            if not 1 <= index <= self.n:
                raise IndexRangeError(index, self.n, _byte(self.text, tok[2]))
            return Var(index)
        if kind == "func":
            self.advance()
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Func(value, arg)
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(value)
        raise self.error(f"expected a number, coordinate, function or '(', found {found}")


def _byte(text: str, char_index: int) -> int:
    return len(text[:char_index].encode("utf-8"))


# ---------------------------------------------------------------------------
# ScalarField
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarField:
    """An expression in the coordinates of ``R^nvars``."""

    ast: Node
    nvars: int

    def __post_init__(self):
        if self.nvars < 1:
            raise ValueError("nvars must be positive")
        k = max_index(self.ast)
        if k > self.nvars:
            raise IndexRangeError(k, self.nvars)

    @classmethod
    def constant(cls, c: float, n: int) -> "ScalarField":
        return cls(const(c), n)

    @property
    def is_constant(self) -> bool:
        return max_index(self.ast) == 0

    def text(self) -> str:
        return to_text(self.ast)

    def __str__(self) -> str:
        return self.text()

    def __call__(self, x) -> float:
        return evaluate(self, x)


def parse(text: str, n: int) -> ScalarField:
    """Parse ``text`` into a :class:`ScalarField` over ``n`` coordinates."""
    if n < 1:
        raise ValueError("n must be positive")
    return ScalarField(_Parser(text, n).parse(), n)


# ---------------------------------------------------------------------------
# Jets
# ---------------------------------------------------------------------------


@dataclass
class Jet2:
    """Value, gradient and Hessian, optionally batched over leading axes.

    ``value`` has shape ``S``, ``grad`` ``S + (n,)`` and ``hess`` ``S + (n, n)``.
    Every operation below builds the Hessian from symmetric terms, so it stays
    exactly symmetric.
    """

    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray

    @classmethod
    def constant(cls, c, n: int, shape=()) -> "Jet2":
        return cls(
            np.full(shape, float(c)),
            np.zeros(tuple(shape) + (n,)),
            np.zeros(tuple(shape) + (n, n)),
        )

    @classmethod
    def variable(cls, values, i: int, n: int) -> "Jet2":
        """Jet of the coordinate with 0-based index ``i`` at ``values``."""
        values = np.asarray(values, dtype=float)
        grad = np.zeros(values.shape + (n,))
        grad[..., i] = 1.0
        return cls(values.copy(), grad, np.zeros(values.shape + (n, n)))

    @property
    def n(self) -> int:
        return self.grad.shape[-1]

    def _lift(self, other) -> "Jet2":
        if isinstance(other, Jet2):
            return other
        return Jet2.constant(other, self.n, np.shape(self.value))

    def __add__(self, other):
        o = self._lift(other)
        return Jet2(self.value + o.value, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __sub__(self, other):
        o = self._lift(other)
        return Jet2(self.value - o.value, self.grad - o.grad, self.hess - o.hess)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        u, v = self.value, o.value
        cross = _outer(self.grad, o.grad)
        return Jet2(
            u * v,
            u[..., None] * o.grad + v[..., None] * self.grad,
            u[..., None, None] * o.hess + v[..., None, None] * self.hess + cross + _swap(cross),
        )

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet2":
        if np.any(self.value == 0):
            raise EvaluationError("division by zero")
        t = self.value
        return self.compose(1.0 / t, -1.0 / (t * t), 2.0 / (t * t * t))

    def __truediv__(self, other):
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return self._lift(other) * self.reciprocal()

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        k = int(k)
        if k == 0:
            return Jet2.constant(1.0, self.n, np.shape(self.value))
        if k == 1:
            return Jet2(self.value.copy(), self.grad.copy(), self.hess.copy())
        t = self.value
        d2 = k * (k - 1) * t ** (k - 2)
        return self.compose(t**k, k * t ** (k - 1), d2)

    def compose(self, f0, f1, f2) -> "Jet2":
        """Chain rule for an outer scalar function with derivatives ``f0, f1, f2``."""
        f1 = np.asarray(f1, dtype=float)
        f2 = np.asarray(f2, dtype=float)
        return Jet2(
            np.asarray(f0, dtype=float),
            f1[..., None] * self.grad,
            f1[..., None, None] * self.hess + f2[..., None, None] * _outer(self.grad, self.grad),
        )

    def sin(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self.compose(s, c, -s)

    def cos(self):
        s, c = np.sin(self.value), np.cos(self.value)
        return self.compose(c, -s, -c)

    def exp(self):
        e = np.exp(self.value)
        return self.compose(e, e, e)


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


def _swap(m):
    return np.swapaxes(m, -1, -2)


def _jet(node: Node, X: np.ndarray, n: int) -> Jet2:
    shape = X.shape[:-1]
    if isinstance(node, Const):
        return Jet2.constant(node.value, n, shape)
    if isinstance(node, Var):
        return Jet2.variable(X[..., node.index - 1], node.index - 1, n)
    if isinstance(node, Neg):
        return -_jet(node.arg, X, n)
    if isinstance(node, Func):
        return getattr(_jet(node.arg, X, n), node.name)()
    if isinstance(node, Pow):
        return _jet(node.base, X, n) ** node.exponent
    left = _jet(node.left, X, n)
    right = _jet(node.right, X, n)
    if isinstance(node, Add):
        return left + right
    if isinstance(node, Sub):
        return left - right
    if isinstance(node, Mul):
        return left * right
    if np.any(right.value == 0):
        raise EvaluationError(f"division by zero in subexpression '{to_text(node.right)}'")
    return left * right.reciprocal()


def _points(f: ScalarField, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[-1:] != (f.nvars,):
        raise ValueError(f"expected points with {f.nvars} coordinates, got shape {X.shape}")
    return X


def eval_jet2(f: ScalarField, x) -> Jet2:
    """Exact value, gradient and Hessian of ``f`` at the point ``x``."""
    x = _points(f, x)
    if x.ndim != 1:
        raise ValueError("eval_jet2 takes a single point; use eval_jet2_batch")
    return eval_jet2_batch(f, x)


def eval_jet2_batch(f: ScalarField, X) -> Jet2:
    """Jets of ``f`` at every row of ``X`` (shape ``(..., n)``)."""
    X = _points(f, X)
    try:
        return _jet(f.ast, X, f.nvars)
    except EvaluationError as exc:
        if "subexpression" in str(exc):
            raise
        raise EvaluationError(f"{exc} while evaluating '{f.text()}'") from None


# ---------------------------------------------------------------------------
# Plain evaluation (no derivatives); used by finite-difference oracles
# ---------------------------------------------------------------------------


def _value(node: Node, X: np.ndarray):
    if isinstance(node, Const):
        return np.full(X.shape[:-1], node.value)
    if isinstance(node, Var):
        return X[..., node.index - 1].astype(float)
    if isinstance(node, Neg):
        return -_value(node.arg, X)
    if isinstance(node, Func):
        return getattr(np, node.name)(_value(node.arg, X))
    if isinstance(node, Pow):
        return _value(node.base, X) ** node.exponent
    a = _value(node.left, X)
    b = _value(node.right, X)
    if isinstance(node, Add):
        return a + b
    if isinstance(node, Sub):
        return a - b
    if isinstance(node, Mul):
        return a * b
    if np.any(b == 0):
        raise EvaluationError(f"division by zero in subexpression '{to_text(node.right)}'")
    return a / b


def evaluate(f: ScalarField, x):
    """Value of ``f`` at ``x`` (a point or a stack of points)."""
    X = _points(f, x)
    v = _value(f.ast, X)
    return float(v) if X.ndim == 1 else v
