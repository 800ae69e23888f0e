"""Exact differentiation, total derivatives and on-shell substitution."""

from __future__ import annotations

from typing import Mapping, Sequence

from .expr import (
    ONE,
    ZERO,
    BinOp,
    Const,
    Expr,
    Func,
    Neg,
    Sym,
    add,
    div,
    free_symbols,
    func,
    mul,
    neg,
    power,
    sub,
    substitute,
    sum_exprs,
)
from .table import SymbolTable


class OrderTooHighError(ValueError):
    pass


def diff(e: Expr, v: str) -> Expr:
    """Partial derivative of `e` with respect to symbol `v`."""
    memo: dict[int, Expr] = {}

    def go(node: Expr) -> Expr:
        key = id(node)
        if key in memo:
            return memo[key]
        out = _d(node)
        memo[key] = out
        return out

    def _d(node: Expr) -> Expr:
        if isinstance(node, Const):
            return ZERO
        if isinstance(node, Sym):
            return ONE if node.name == v else ZERO
        if isinstance(node, Neg):
            return neg(go(node.arg))
        if isinstance(node, Func):
            a = node.arg
            da = go(a)
            if da == ZERO:
                return ZERO
            if node.name == "exp":
                outer = node
            elif node.name == "log":
                return div(da, a)
            elif node.name == "sin":
                outer = func("cos", a)
            elif node.name == "cos":
                outer = neg(func("sin", a))
            elif node.name == "sqrt":
                return div(da, mul(Const(2.0), node))
            else:  # pragma: no cover
                raise ValueError(node.name)
            return mul(outer, da)
        assert isinstance(node, BinOp)
        a, b = node.left, node.right
        if node.op == "+":
            return add(go(a), go(b))
        if node.op == "-":
            return sub(go(a), go(b))
        if node.op == "*":
            return add(mul(go(a), b), mul(a, go(b)))
        if node.op == "/":
            da, db = go(a), go(b)
            if db == ZERO:
                return div(da, b)
            return sub(div(da, b), div(mul(a, db), power(b, Const(2.0))))
        if node.op == "^":
            da, db = go(a), go(b)
            if db == ZERO:
                if da == ZERO:
                    return ZERO
                if isinstance(b, Const):
                    return mul(mul(b, power(a, Const(b.value - 1.0))), da)
                return mul(mul(b, power(a, sub(b, ONE))), da)
            # a^b (b' log a + b a'/a)
            return mul(node, add(mul(db, func("log", a)), div(mul(b, da), a)))
        raise TypeError(type(node))  # pragma: no cover

    if v not in free_symbols(e):
        return ZERO
    return go(e)


def gradient(e: Expr, vars: Sequence[str]) -> list[Expr]:
    return [diff(e, v) for v in vars]


def jacobian(exprs: Sequence[Expr], vars: Sequence[str]) -> list[list[Expr]]:
    return [[diff(e, v) for v in vars] for e in exprs]


def formal_total_derivative(e: Expr, wrt: str, table: SymbolTable) -> Expr:
    """D_wrt e on the jet space of `table`.

    Raises MissingDerivativeError when a needed higher derivative symbol is
    not declared in the table.
    """
    if wrt not in table.indep_vars:
        raise ValueError(f"{wrt!r} is not an independent variable")
    terms = [diff(e, wrt)]
    syms = free_symbols(e)
    for name in table.jet_vars():
        if name in syms:
            d = diff(e, name)
            if d != ZERO:
                terms.append(mul(Sym(table.next_derivative(name, wrt)), d))
    return sum_exprs(terms)


def onshell_substitute(e: Expr, ds, table: SymbolTable | None = None) -> Expr:
    """Replace every first time derivative of a state by the system's rhs.

    `ds` is anything with `states`, `f` and `table` attributes (a
    DynamicalSystem). Second or higher derivatives raise OrderTooHighError.
    """
    table = table or ds.table
    syms = free_symbols(e)
    mapping: dict[str, Expr] = {}
    for name in syms:
        if not table.is_jet(name):
            continue
        base, mi = table.decompose(name)
        if len(mi) >= 2:
            raise OrderTooHighError(f"{name!r} is a derivative of order {len(mi)}")
        if len(mi) == 1 and base in ds.states:
            mapping[name] = ds.f[ds.states.index(base)]
    return substitute(e, mapping)


# -- small symbolic linear algebra --------------------------------------------

Matrix = list  # list[list[Expr]]


def zeros(n: int, m: int | None = None) -> Matrix:
    m = n if m is None else m
    return [[ZERO] * m for _ in range(n)]


def identity(n: int) -> Matrix:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def matmul(a: Matrix, b: Matrix) -> Matrix:
    n, k, m = len(a), len(b), len(b[0]) if b else 0
    return [[sum_exprs(mul(a[i][l], b[l][j]) for l in range(k)) for j in range(m)] for i in range(n)]


def matvec(a: Matrix, v: Sequence[Expr]) -> list[Expr]:
    return [sum_exprs(mul(row[j], v[j]) for j in range(len(v))) for row in a]


def transpose(a: Matrix) -> Matrix:
    return [list(col) for col in zip(*a)] if a else []


def trace(a: Matrix) -> Expr:
    return sum_exprs(a[i][i] for i in range(len(a)))


def madd(a: Matrix, b: Matrix) -> Matrix:
    return [[add(x, y) for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def msub(a: Matrix, b: Matrix) -> Matrix:
    return [[sub(x, y) for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mmap(f, a: Matrix) -> Matrix:
    return [[f(x) for x in row] for row in a]


def dot(u: Sequence[Expr], v: Sequence[Expr]) -> Expr:
    return sum_exprs(mul(x, y) for x, y in zip(u, v))


def det(a: Matrix) -> Expr:
    """Determinant by cofactor expansion (small matrices only)."""
    n = len(a)
    if n == 0:
        return ONE
    if n == 1:
        return a[0][0]
    if n == 2:
        return sub(mul(a[0][0], a[1][1]), mul(a[0][1], a[1][0]))
    terms = []
    for j in range(n):
        if a[0][j] == ZERO:
            continue
        minor = [row[:j] + row[j + 1 :] for row in a[1:]]
        t = mul(a[0][j], det(minor))
        terms.append(t if j % 2 == 0 else neg(t))
    return sum_exprs(terms)


def adjugate(a: Matrix) -> Matrix:
    n = len(a)
    if n == 1:
        return [[ONE]]
    adj = zeros(n)
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1 :] for k, row in enumerate(a) if k != i]
            c = det(minor)
            adj[j][i] = c if (i + j) % 2 == 0 else neg(c)
    return adj


def inverse(a: Matrix) -> tuple[Matrix, Expr]:
    """Symbolic inverse via the adjugate; returns (inverse, determinant)."""
    d = det(a)
    return mmap(lambda x: div(x, d), adjugate(a)), d


def substitute_all(exprs, mapping: Mapping[str, Expr]):
    return [substitute(e, dict(mapping)) for e in exprs]
