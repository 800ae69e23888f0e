"""Numeric evaluation by straight-line code generation.

Each distinct subtree becomes one assignment in a generated function, so deep
trees never hit the parser's nesting limit and shared subexpressions are
computed once. The generated code works on numpy arrays (vectorized over
samples) and on scalars alike.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .expr import BinOp, Const, Expr, Func, Neg, Sym, free_symbols_all


class UnboundSymbolError(KeyError):
    def __init__(self, names):
        self.names = sorted(names)
        super().__init__(f"unbound symbol(s): {', '.join(self.names)}")


def _rpow(a, b):
    # non-integer exponents only for positive bases
    a = np.asarray(a, dtype=float)
    out = np.full(np.broadcast(a, b).shape, np.nan)
    ok = np.broadcast_to(a > 0, out.shape)
    res = np.power(np.where(a > 0, a, 1.0), b)
    out[ok] = np.broadcast_to(res, out.shape)[ok]
    return out if out.shape else float(out)


def _ipow(a, n: int):
    if n == 0:
        return np.ones_like(a) if isinstance(a, np.ndarray) else 1.0
    if n < 0:
        return 1.0 / _ipow(a, -n)
    result = None
    base = a
    while n:
        if n & 1:
            result = base if result is None else result * base
        n >>= 1
        if n:
            base = base * base
    return result


_NAMESPACE = {
    "_exp": np.exp,
    "_log": np.log,
    "_sin": np.sin,
    "_cos": np.cos,
    "_sqrt": np.sqrt,
    "_rpow": _rpow,
    "_ipow": _ipow,
}


class Compiled:
    """A batch of expressions compiled against a fixed argument order."""

    def __init__(self, exprs: Sequence[Expr], argnames: Sequence[str]):
        self.exprs = tuple(exprs)
        self.argnames = tuple(argnames)
        missing = free_symbols_all(self.exprs) - set(self.argnames)
        if missing:
            raise UnboundSymbolError(missing)
        self._fn = _codegen(self.exprs, self.argnames)

    def __call__(self, *args):
        with np.errstate(all="ignore"):
            return self._fn(*args)

    def from_mapping(self, values: Mapping[str, object]):
        missing = [n for n in self.argnames if n not in values]
        if missing:
            raise UnboundSymbolError(missing)
        return self(*(values[n] for n in self.argnames))


def _codegen(exprs: Sequence[Expr], argnames: Sequence[str]):
    lines: list[str] = []
    names: dict[Expr, str] = {}
    argmap = {n: f"a{i}" for i, n in enumerate(argnames)}
    counter = [0]

    def emit(node: Expr) -> str:
        if node in names:
            return names[node]
        # iterative post-order so very deep trees are fine
        stack = [(node, False)]
        while stack:
            cur, ready = stack.pop()
            if cur in names:
                continue
            if not ready:
                stack.append((cur, True))
                for ch in cur.children():
                    if ch not in names:
                        stack.append((ch, False))
                continue
            names[cur] = _emit_one(cur)
        return names[node]

    def _emit_one(cur: Expr) -> str:
        if isinstance(cur, Const):
            return repr(cur.value) if math.isfinite(cur.value) else f"float('{cur.value}')"
        if isinstance(cur, Sym):
            return argmap[cur.name]
        counter[0] += 1
        v = f"v{counter[0]}"
        if isinstance(cur, Neg):
            rhs = f"-{names[cur.arg]}"
        elif isinstance(cur, Func):
            rhs = f"_{cur.name}({names[cur.arg]})"
        else:
            assert isinstance(cur, BinOp)
            a, b = names[cur.left], names[cur.right]
            if cur.op == "^":
                if isinstance(cur.right, Const) and float(cur.right.value).is_integer():
                    rhs = f"_ipow({a}, {int(cur.right.value)})"
                else:
                    rhs = f"_rpow({a}, {b})"
            else:
                rhs = f"{a} {cur.op} {b}"
        lines.append(f"    {v} = {rhs}")
        return v

    outs = [emit(e) for e in exprs]
    src = f"def _f({', '.join(argmap[n] for n in argnames)}):\n"
    src += "\n".join(lines) + ("\n" if lines else "")
    src += f"    return ({', '.join(outs)}{',' if len(outs) == 1 else ''})\n"
    ns = dict(_NAMESPACE)
    exec(compile(src, "<lambdasym>", "exec"), ns)
    return ns["_f"]


def evaluate(e: Expr, point: Mapping[str, float]) -> float:
    """Evaluate at a point in IEEE double precision.

    Non-finite results (log(0), division by zero, ...) are returned as they
    are, never masked.
    """
    comp = Compiled([e], sorted(free_symbols_all([e])))
    vals = {k: np.float64(v) for k, v in point.items()}
    (out,) = comp.from_mapping(vals)
    return float(out)


def evaluate_many(exprs: Sequence[Expr], values: Mapping[str, np.ndarray]) -> list[np.ndarray]:
    """Vectorized evaluation; every value array must share one shape."""
    argnames = sorted(free_symbols_all(exprs))
    comp = Compiled(exprs, argnames)
    shape = None
    for v in values.values():
        shape = np.shape(v)
        break
    outs = comp.from_mapping({k: np.asarray(v, dtype=float) for k, v in values.items()})
    return [np.broadcast_to(np.asarray(o, dtype=float), shape or ()).copy() for o in outs]
