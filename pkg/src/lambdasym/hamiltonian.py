"""Hamiltonian systems, generating functions and Lambda-constants of motion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynsys import DynamicalSystem, onshell_lambda
from .prolong import DimensionError, LambdaMatrix, VectorField
from .report import FAIL, Check, VerificationReport, identity_check
from .symexpr import (
    ONE,
    ZERO,
    BinOp,
    Const,
    Expr,
    Func,
    Neg,
    SamplingConfig,
    Sym,
    SymbolTable,
    add,
    as_expr,
    diff,
    div,
    evaluate,
    formal_total_derivative,
    free_symbols,
    func,
    mul,
    neg,
    onshell_substitute,
    power,
    sub,
    substitute,
    sum_exprs,
)


def symplectic_matrix(n: int) -> np.ndarray:
    """J = [[0, I], [-I, 0]] of size 2n."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


def apply_J(v: Sequence[Expr]) -> list[Expr]:
    n = len(v) // 2
    return list(v[n:]) + [neg(x) for x in v[:n]]


@dataclass(frozen=True)
class HamiltonianSystem:
    H: Expr
    table: SymbolTable

    def __post_init__(self):
        object.__setattr__(self, "H", as_expr(self.H))
        if len(self.table.state_vars) % 2:
            raise DimensionError("phase space needs (q_1..q_n, p_1..p_n)")

    @classmethod
    def build(cls, H, q: Sequence[str], p: Sequence[str], time: str = "t", params=None, extra=()):
        if len(q) != len(p):
            raise DimensionError("as many momenta as coordinates are required")
        table = SymbolTable.for_time(list(q) + list(p), time, params, extra, max_order=1)
        return cls(as_expr(H), table)

    @property
    def n(self) -> int:
        return len(self.table.state_vars) // 2

    @property
    def q(self) -> tuple[str, ...]:
        return self.table.state_vars[: self.n]

    @property
    def p(self) -> tuple[str, ...]:
        return self.table.state_vars[self.n :]

    @property
    def ds(self) -> DynamicalSystem:
        return hamilton_equations(self)


def hamilton_equations(hs: HamiltonianSystem) -> DynamicalSystem:
    """f = (grad_p H, -grad_q H)."""
    f = [diff(hs.H, p) for p in hs.p] + [neg(diff(hs.H, q)) for q in hs.q]
    return DynamicalSystem(tuple(f), hs.table)


@dataclass(frozen=True)
class GeneratingFunction:
    G: Expr


@dataclass(frozen=True)
class DivergenceIntegral:
    S: Expr


class ReconstructionUnsupportedError(ValueError):
    """The field is exact but its potential is outside the integrable fragment."""


# -- line integration over Laurent polynomials ---------------------------------


def _laurent(e: Expr, s: str) -> dict[int, Expr]:
    if s not in free_symbols(e):
        return {0: e}
    if isinstance(e, Sym):
        return {1: ONE}
    if isinstance(e, Neg):
        return {k: neg(c) for k, c in _laurent(e.arg, s).items()}
    if isinstance(e, Func):
        raise ReconstructionUnsupportedError(f"{e.name}(...) of the integration variable")
    assert isinstance(e, BinOp)
    if e.op in "+-":
        a, b = _laurent(e.left, s), _laurent(e.right, s)
        out = dict(a)
        combine = add if e.op == "+" else sub
        for k, c in b.items():
            out[k] = combine(out.get(k, ZERO), c)
        return out
    if e.op == "*":
        return _lmul(_laurent(e.left, s), _laurent(e.right, s))
    if e.op == "/":
        num = _laurent(e.left, s)
        den = _laurent(e.right, s)
        if len(den) != 1:
            raise ReconstructionUnsupportedError("division by a non-monomial in the integration variable")
        (k, c), = den.items()
        return {j - k: div(v, c) for j, v in num.items()}
    if e.op == "^":
        if s in free_symbols(e.right) or not (isinstance(e.right, Const) and e.right.value.is_integer()):
            raise ReconstructionUnsupportedError("non-integer power of the integration variable")
        n = int(e.right.value)
        base = _laurent(e.left, s)
        if n < 0:
            if len(base) != 1:
                raise ReconstructionUnsupportedError("negative power of a non-monomial")
            (k, c), = base.items()
            return {k * n: power(c, Const(n))}
        out = {0: ONE}
        for _ in range(n):
            out = _lmul(out, base)
        return out
    raise ReconstructionUnsupportedError(e.op)  # pragma: no cover


def _lmul(a: dict[int, Expr], b: dict[int, Expr]) -> dict[int, Expr]:
    out: dict[int, Expr] = {}
    for i, x in a.items():
        for j, y in b.items():
            out[i + j] = add(out.get(i + j, ZERO), mul(x, y))
    return out


def integrate_segment(e: Expr, s: str, lo: Expr, hi: Expr) -> Expr:
    """Definite integral of e over s from lo to hi (Laurent polynomials in s)."""
    terms = []
    for k, c in sorted(_laurent(e, s).items()):
        if c == ZERO:
            continue
        if k == -1:
            terms.append(mul(c, sub(func("log", hi), func("log", lo))))
        else:
            e1 = Const(k + 1)
            terms.append(mul(div(c, e1), sub(power(hi, e1), power(lo, e1))))
    return sum_exprs(terms)


@dataclass
class GeneratingFunctionResult:
    G: GeneratingFunction | None
    report: VerificationReport
    base_point: dict[str, float]

    @property
    def exists(self) -> bool:
        return self.G is not None


ANCHOR_EXACT = "d(-J Phi)_i/du_j = d(-J Phi)_j/du_i"
ANCHOR_GENFUN = "Phi = J grad G"


def _pairs_sym(v: Sequence[Expr], states: Sequence[str]) -> list[tuple[Expr, Expr]]:
    pairs = []
    for i in range(len(states)):
        for j in range(i + 1, len(states)):
            pairs.append((diff(v[i], states[j]), diff(v[j], states[i])))
    return pairs


def find_generating_function(
    X: VectorField,
    table: SymbolTable,
    cfg: SamplingConfig,
    anchor: Expr | None = None,
) -> GeneratingFunctionResult:
    """Decide whether X is Hamiltonian and rebuild G by line integration.

    The potential is normalized so that G(base) = anchor(base) when an anchor
    is given, and G(base) = 0 otherwise. The base point is the centre of the
    sampling box.
    """
    states = table.state_vars
    if X.m != len(states):
        raise DimensionError("X must have one coefficient per phase-space variable")
    Phi = list(X.phi)
    v = [neg(x) for x in apply_J(Phi)]  # grad G
    params = table.params
    report = VerificationReport()
    chk = identity_check("exactness", ANCHOR_EXACT, _pairs_sym(v, states), cfg, params)
    report.add(chk)
    base_names = [n for n in list(states) + [table.time_var] if n]
    base = {n: 0.5 * sum(cfg.interval(n)) for n in base_names}
    if not chk.passed:
        return GeneratingFunctionResult(None, report, base)
    s = "s__"
    terms = []
    for k, u in enumerate(states):
        path = {states[j]: Sym(states[j]) for j in range(k)}
        path[u] = Sym(s)
        path.update({states[j]: Const(base[states[j]]) for j in range(k + 1, len(states))})
        integrand = substitute(v[k], path)
        terms.append(integrate_segment(integrand, s, Const(base[u]), Sym(u)))
    G = sum_exprs(terms)
    if anchor is not None:
        point = dict(base)
        point.update(params)
        shift = evaluate(anchor, point) - evaluate(G, point)
        G = add(G, Const(shift))
    gchk = identity_check("generating function", ANCHOR_GENFUN, list(zip(apply_J([diff(G, u) for u in states]), Phi)), cfg, params)
    report.add(gchk)
    report.note("G", G)
    return GeneratingFunctionResult(GeneratingFunction(G) if gchk.passed else None, report, base)


def verify_generating_function(X: VectorField, G: Expr, table: SymbolTable, cfg: SamplingConfig) -> VerificationReport:
    """Check a user-supplied G: Phi == J grad G."""
    states = table.state_vars
    report = VerificationReport()
    pairs = list(zip(apply_J([diff(G, u) for u in states]), X.phi))
    report.add(identity_check("generating function", ANCHOR_GENFUN, pairs, cfg, table.params))
    return report


def divergence_S(X: VectorField, table: SymbolTable) -> DivergenceIntegral:
    """S = div Phi = sum_a d Phi_a / du_a."""
    return DivergenceIntegral(sum_exprs(diff(x, u) for x, u in zip(X.phi, table.state_vars)))


def onshell_time_derivative(e: Expr, hs: HamiltonianSystem) -> Expr:
    return onshell_substitute(formal_total_derivative(e, hs.table.time_var, hs.table), hs.ds)


def check_theorem2_case_i(
    hs: HamiltonianSystem,
    X: VectorField,
    L: LambdaMatrix,
    G: Expr,
    cfg: SamplingConfig,
) -> VerificationReport:
    """grad(D_t G) == J Lambda Phi, with Lambda taken on-shell."""
    ds = hs.ds
    DtG = onshell_time_derivative(G, hs)
    rhs = apply_J(onshell_lambda(L, ds).apply(list(X.phi)))
    lhs = [diff(DtG, u) for u in hs.table.state_vars]
    report = VerificationReport()
    report.add(identity_check("Lambda-constant of motion G", "grad(D_t G) = J Lambda Phi", list(zip(lhs, rhs)), cfg, hs.table.params))
    report.note("D_t G", DtG)
    return report


def check_theorem2_case_ii(
    hs: HamiltonianSystem,
    X: VectorField,
    L: LambdaMatrix,
    cfg: SamplingConfig,
    S: Expr | None = None,
) -> VerificationReport:
    """D_t S == -div(Lambda Phi), Lambda substituted on-shell before differentiating."""
    ds = hs.ds
    S = divergence_S(X, hs.table).S if S is None else S
    LPhi = onshell_lambda(L, ds).apply(list(X.phi))
    div_LPhi = sum_exprs(diff(x, u) for x, u in zip(LPhi, hs.table.state_vars))
    DtS = onshell_time_derivative(S, hs)
    report = VerificationReport()
    report.add(identity_check("Lambda-constant of motion S", "D_t S = -div(Lambda Phi)", [(DtS, neg(div_LPhi))], cfg, hs.table.params))
    report.note("S", S)
    report.note("D_t S", DtS)
    return report


def verify_separated_equation(
    G: Expr,
    gamma: Expr,
    hs: HamiltonianSystem,
    cfg: SamplingConfig,
    slot: str = "G",
) -> VerificationReport:
    """On-shell D_t G == gamma(t, G); gamma may only reference t, the G slot and parameters."""
    report = VerificationReport()
    table = hs.table
    allowed = {table.time_var, slot} | set(table.params)
    stray = sorted(free_symbols(gamma) - allowed)
    if stray:
        report.add(
            Check(
                "separated equation",
                "D_t G = gamma(t, G)",
                FAIL,
                float("inf"),
                None,
                f"gamma must depend on (t, {slot}) only; it references {', '.join(stray)}",
            )
        )
        return report
    DtG = onshell_time_derivative(G, hs)
    rhs = substitute(gamma, {slot: G})
    report.add(identity_check("separated equation", "D_t G = gamma(t, G)", [(DtG, rhs)], cfg, table.params))
    return report
