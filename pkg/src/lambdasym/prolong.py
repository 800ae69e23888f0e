"""Vector fields and their standard, lambda- and Lambda-prolongations (first order)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .symexpr import (
    ZERO,
    Expr,
    Sym,
    SymbolTable,
    add,
    as_expr,
    diff,
    formal_total_derivative,
    mul,
    sub,
    sum_exprs,
    zeros,
)


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class VectorField:
    """X = phi_a d/du_a (+ tau d/dt in single-equation mode)."""

    phi: tuple[Expr, ...]
    tau: Expr | None = None

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(as_expr(p) for p in self.phi))
        if self.tau is not None:
            object.__setattr__(self, "tau", as_expr(self.tau))
            if len(self.phi) != 1:
                raise DimensionError("tau is only allowed for a single dependent variable")

    @property
    def m(self) -> int:
        return len(self.phi)

    def __call__(self, e: Expr, table: SymbolTable, states: Sequence[str] | None = None) -> Expr:
        """Action on a function of (t, u) (no derivative symbols)."""
        states = states or table.state_vars
        terms = [mul(p, diff(e, u)) for p, u in zip(self.phi, states)]
        if self.tau is not None and table.time_var is not None:
            terms.append(mul(self.tau, diff(e, table.time_var)))
        return sum_exprs(terms)


SHAPES = ("scalar", "diagonal", "full")


@dataclass(frozen=True)
class LambdaMatrix:
    entries: tuple[tuple[Expr, ...], ...]
    shape: str = "full"

    def __post_init__(self):
        rows = tuple(tuple(as_expr(x) for x in row) for row in self.entries)
        object.__setattr__(self, "entries", rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise DimensionError("Lambda must be square")
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape tag {self.shape!r}")

    @classmethod
    def scalar(cls, lam, m: int) -> "LambdaMatrix":
        lam = as_expr(lam)
        return cls(tuple(tuple(lam if i == j else ZERO for j in range(m)) for i in range(m)), "scalar")

    @classmethod
    def diagonal(cls, diag: Sequence) -> "LambdaMatrix":
        m = len(diag)
        return cls(
            tuple(tuple(as_expr(diag[i]) if i == j else ZERO for j in range(m)) for i in range(m)),
            "diagonal",
        )

    @classmethod
    def zero(cls, m: int) -> "LambdaMatrix":
        return cls(tuple(map(tuple, zeros(m))), "scalar")

    @property
    def m(self) -> int:
        return len(self.entries)

    def rows(self) -> list[list[Expr]]:
        return [list(r) for r in self.entries]

    def apply(self, v: Sequence[Expr]) -> list[Expr]:
        if len(v) != self.m:
            raise DimensionError(f"Lambda is {self.m}x{self.m}, vector has length {len(v)}")
        return [sum_exprs(mul(self.entries[a][b], v[b]) for b in range(self.m)) for a in range(self.m)]

    def map(self, f) -> "LambdaMatrix":
        return LambdaMatrix(tuple(tuple(f(x) for x in row) for row in self.entries), self.shape)

    def __add__(self, other: "LambdaMatrix") -> "LambdaMatrix":
        if other.m != self.m:
            raise DimensionError("Lambda sizes differ")
        return LambdaMatrix(
            tuple(tuple(add(x, y) for x, y in zip(r, s)) for r, s in zip(self.entries, other.entries))
        )

    def perturbed(self, a: int, b: int, delta: float = 1.0) -> "LambdaMatrix":
        rows = self.rows()
        rows[a][b] = add(rows[a][b], as_expr(delta))
        return LambdaMatrix(tuple(map(tuple, rows)))


@dataclass(frozen=True)
class ProlongedField:
    base: VectorField
    dot_coefficients: tuple[Expr, ...]
    states: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "dot_coefficients", tuple(self.dot_coefficients))
        object.__setattr__(self, "states", tuple(self.states))
        if len(self.dot_coefficients) != self.base.m:
            raise DimensionError("one dot coefficient per component is required")

    def apply(self, e: Expr, table: SymbolTable) -> Expr:
        """X^(1) e for e over (t, u, du)."""
        terms = []
        for a, u in enumerate(self.states or table.state_vars):
            terms.append(mul(self.base.phi[a], diff(e, u)))
            terms.append(mul(self.dot_coefficients[a], diff(e, table.dot(u))))
        if self.base.tau is not None:
            terms.append(mul(self.base.tau, diff(e, table.time_var)))
        return sum_exprs(terms)


def _states(X: VectorField, table: SymbolTable, states) -> tuple[str, ...]:
    if table.time_var is None:
        raise ValueError("prolongations here act on time problems")
    states = tuple(states or table.state_vars)
    if X.m != len(states):
        raise DimensionError(f"X has {X.m} components but acts on {len(states)} variables")
    return states


def standard_first_prolongation(
    X: VectorField, table: SymbolTable, states: Sequence[str] | None = None
) -> ProlongedField:
    states = _states(X, table, states)
    t = table.time_var
    coeffs = []
    for a, u in enumerate(states):
        c = formal_total_derivative(X.phi[a], t, table)
        if X.tau is not None:
            c = sub(c, mul(Sym(table.dot(u)), formal_total_derivative(X.tau, t, table)))
        coeffs.append(c)
    return ProlongedField(X, tuple(coeffs), states)


def _characteristic(X: VectorField, table: SymbolTable, states) -> list[Expr]:
    """phi - tau * du (the evolutionary characteristic)."""
    if X.tau is None:
        return list(X.phi)
    return [sub(X.phi[0], mul(X.tau, Sym(table.dot(states[0]))))]


def lambda_prolongation(
    X: VectorField, lam, table: SymbolTable, states: Sequence[str] | None = None
) -> ProlongedField:
    """Scalar lambda-prolongation; for m > 1 lam acts as lam * I."""
    std = standard_first_prolongation(X, table, states)
    lam = as_expr(lam)
    q = _characteristic(X, table, std.states)
    coeffs = tuple(add(c, mul(lam, qa)) for c, qa in zip(std.dot_coefficients, q))
    return ProlongedField(X, coeffs, std.states)


def Lambda_prolongation(
    X: VectorField, L: LambdaMatrix, table: SymbolTable, states: Sequence[str] | None = None
) -> ProlongedField:
    if L.m != X.m:
        raise DimensionError(f"Lambda is {L.m}x{L.m} but X has {X.m} components")
    std = standard_first_prolongation(X, table, states)
    extra = L.apply(_characteristic(X, table, std.states))
    coeffs = tuple(add(c, e) for c, e in zip(std.dot_coefficients, extra))
    return ProlongedField(X, coeffs, std.states)


def apply(Xp: ProlongedField, e: Expr, table: SymbolTable) -> Expr:
    return Xp.apply(e, table)
