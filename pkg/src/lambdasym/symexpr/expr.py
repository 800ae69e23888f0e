"""Immutable expression trees and simplifying constructors.

Nodes are hash-consed only in the weak sense that their hash is computed once
at construction; structural equality is recursive. The smart constructors
(`add`, `mul`, ...) do constant folding and the 0/1 identities and nothing
more. Verdicts never depend on simplification.
"""

from __future__ import annotations

import math
from typing import Iterable, Iterator

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")
BINARY_OPS = ("+", "-", "*", "/", "^")


class Expr:
    __slots__ = ("_hash",)

    def __hash__(self) -> int:
        return self._hash

    # operator sugar, routed through the simplifying constructors
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __neg__(self):
        return neg(self)

    def __str__(self) -> str:
        from .printer import to_string

        return to_string(self)

    def children(self) -> tuple["Expr", ...]:
        return ()


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: float):
        self.value = float(value) + 0.0  # folds -0.0
        self._hash = hash(("c", self.value))

    __hash__ = Expr.__hash__

    def __eq__(self, other):
        return isinstance(other, Const) and (
            self.value == other.value or (math.isnan(self.value) and math.isnan(other.value))
        )

    def __repr__(self):
        return f"Const({self.value!r})"


class Sym(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("s", name))

    __hash__ = Expr.__hash__

    def __eq__(self, other):
        return isinstance(other, Sym) and self.name == other.name

    def __repr__(self):
        return f"Sym({self.name!r})"


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        self.arg = arg
        self._hash = hash(("neg", arg._hash))

    __hash__ = Expr.__hash__

    def __eq__(self, other):
        return isinstance(other, Neg) and self._hash == other._hash and self.arg == other.arg

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Neg({self.arg!r})"


class BinOp(Expr):
    __slots__ = ("op", "left", "right")

    def __init__(self, op: str, left: Expr, right: Expr):
        if op not in BINARY_OPS:
            raise ValueError(f"unknown operator {op!r}")
        self.op = op
        self.left = left
        self.right = right
        self._hash = hash((op, left._hash, right._hash))

    __hash__ = Expr.__hash__

    def __eq__(self, other):
        return (
            isinstance(other, BinOp)
            and self._hash == other._hash
            and self.op == other.op
            and self.left == other.left
            and self.right == other.right
        )

    def children(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"BinOp({self.op!r}, {self.left!r}, {self.right!r})"


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")
        self.name = name
        self.arg = arg
        self._hash = hash(("f", name, arg._hash))

    __hash__ = Expr.__hash__

    def __eq__(self, other):
        return (
            isinstance(other, Func)
            and self._hash == other._hash
            and self.name == other.name
            and self.arg == other.arg
        )

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Func({self.name!r}, {self.arg!r})"


ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float)):
        return Const(x)
    if isinstance(x, str):
        return Sym(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def is_const(e: Expr, value: float | None = None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def is_zero(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 0.0


# -- simplifying constructors -------------------------------------------------


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    if isinstance(b, Neg):
        return sub(a, b.arg)
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if is_zero(b):
        return a
    if is_zero(a):
        return neg(b)
    if a == b:
        return ZERO
    if isinstance(b, Neg):
        return add(a, b.arg)
    return BinOp("-", a, b)


def _split(e: Expr) -> tuple[float, Expr]:
    """Peel a numeric coefficient: e == c * rest, looking only at the top."""
    if isinstance(e, Const):
        return e.value, ONE
    if isinstance(e, Neg):
        c, r = _split(e.arg)
        return -c, r
    if isinstance(e, BinOp):
        if e.op == "*" and isinstance(e.left, Const):
            return e.left.value, e.right
        if e.op == "/" and isinstance(e.right, Const) and e.right.value != 0.0:
            c, r = _split(e.left)
            return c / e.right.value, r
    return 1.0, e


def _scaled(c: float, rest: Expr) -> Expr:
    if c == 0.0:
        return ZERO
    if c < 0:
        return neg(_scaled(-c, rest))
    if is_const(rest, 1.0):
        return Const(c)
    if c == 1.0:
        return rest
    return BinOp("*", Const(c), rest)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if is_zero(a) or is_zero(b):
        return ZERO
    if is_const(a, 1.0):
        return b
    if is_const(b, 1.0):
        return a
    if is_const(a, -1.0):
        return neg(b)
    if is_const(b, -1.0):
        return neg(a)
    if isinstance(a, Neg) and isinstance(b, Neg):
        return mul(a.arg, b.arg)
    if isinstance(a, Neg):
        return neg(mul(a.arg, b))
    if isinstance(b, Neg):
        return neg(mul(a, b.arg))
    ca, ra = _split(a)
    cb, rb = _split(b)
    if ca == 1.0 and cb == 1.0:
        return BinOp("*", a, b)
    if is_const(ra, 1.0):
        rest = rb
    elif is_const(rb, 1.0):
        rest = ra
    else:
        rest = BinOp("*", ra, rb)
    return _scaled(ca * cb, rest)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return Const(a.value / b.value)
    if is_zero(a):
        return ZERO
    if is_const(b, 1.0):
        return a
    if is_const(b, -1.0):
        return neg(a)
    if a == b:
        return ONE
    if isinstance(a, Neg):
        return neg(div(a.arg, b))
    if isinstance(b, Const) and b.value != 0.0:
        ca, ra = _split(a)
        if ca != 1.0:
            return _scaled(ca / b.value, ra)
        return BinOp("/", a, b)
    ca, ra = _split(a)
    cb, rb = _split(b)
    if cb == 0.0 or (ca == 1.0 and cb == 1.0):
        return BinOp("/", a, b)
    return _scaled(ca / cb, ra if is_const(rb, 1.0) else BinOp("/", ra, rb))


def power(a: Expr, b: Expr) -> Expr:
    if is_zero(b):
        return ONE
    if is_const(b, 1.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        if a.value > 0 or float(b.value).is_integer():
            try:
                return Const(a.value ** b.value)
            except (OverflowError, ZeroDivisionError):
                pass
    if is_const(a, 1.0):
        return ONE
    return BinOp("^", a, b)


def func(name: str, a: Expr) -> Expr:
    if isinstance(a, Const):
        v = a.value
        if name == "exp" and v == 0.0:
            return ONE
        if name == "log" and v == 1.0:
            return ZERO
        if name in ("sin", "sqrt") and v == 0.0:
            return ZERO
        if name == "cos" and v == 0.0:
            return ONE
    if name == "log" and isinstance(a, Func) and a.name == "exp":
        return a.arg
    return Func(name, a)


def sum_exprs(terms: Iterable[Expr]) -> Expr:
    out: Expr = ZERO
    for t in terms:
        out = add(out, t)
    return out


def binop(op: str, a: Expr, b: Expr) -> Expr:
    return {"+": add, "-": sub, "*": mul, "/": div, "^": power}[op](a, b)


# -- traversal ----------------------------------------------------------------


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal; shared subtrees are visited once."""
    seen: set[int] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        yield node
        stack.extend(reversed(node.children()))


def free_symbols(e: Expr) -> set[str]:
    return {n.name for n in walk(e) if isinstance(n, Sym)}


def free_symbols_all(exprs: Iterable[Expr]) -> set[str]:
    out: set[str] = set()
    for e in exprs:
        out |= free_symbols(e)
    return out


def rebuild(e: Expr, children: tuple[Expr, ...]) -> Expr:
    """Rebuild `e` over new children using the simplifying constructors."""
    if isinstance(e, Neg):
        return neg(children[0])
    if isinstance(e, BinOp):
        return binop(e.op, children[0], children[1])
    if isinstance(e, Func):
        return func(e.name, children[0])
    return e


def substitute(e: Expr, mapping: dict[str, Expr]) -> Expr:
    """Replace symbols by expressions (simultaneous substitution)."""
    if not mapping:
        return e
    memo: dict[int, Expr] = {}

    def go(node: Expr) -> Expr:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Sym):
            out = mapping.get(node.name, node)
        elif isinstance(node, Const):
            out = node
        else:
            kids = node.children()
            new = tuple(go(k) for k in kids)
            out = node if all(a is b for a, b in zip(kids, new)) else rebuild(node, new)
        memo[key] = out
        return out

    return go(e)


def count_nodes(e: Expr) -> int:
    return sum(1 for _ in walk(e))
