"""Lambda-symmetries of first-order systems, adapted coordinates and reduction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .prolong import DimensionError, LambdaMatrix, VectorField
from .report import VerificationReport, identity_check
from .symexpr import (
    ZERO,
    Expr,
    SamplingConfig,
    Sym,
    SymbolTable,
    add,
    as_expr,
    diff,
    div,
    equiv,
    free_symbols,
    mul,
    neg,
    onshell_substitute,
    sub,
    substitute,
    sum_exprs,
)

ANCHOR_DETERMINING = "[f, phi]_a + d_t phi_a = -(Lambda phi)_a"


@dataclass(frozen=True)
class DynamicalSystem:
    """du_a/dt = f_a(u, t)."""

    f: tuple[Expr, ...]
    table: SymbolTable
    states: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(as_expr(x) for x in self.f))
        object.__setattr__(self, "states", tuple(self.states or self.table.state_vars))
        if len(self.f) != len(self.states):
            raise DimensionError(f"{len(self.f)} right-hand sides for {len(self.states)} states")
        for fa in self.f:
            for name in free_symbols(fa):
                if self.table.is_jet(name) and self.table.order(name) > 0:
                    raise ValueError(f"right-hand side contains derivative symbol {name!r}")

    @property
    def m(self) -> int:
        return len(self.f)

    @property
    def time(self) -> str:
        return self.table.time_var


class InverseMapIncompleteError(ValueError):
    pass


@dataclass(frozen=True)
class CoordinateMap:
    """Adapted coordinates w_j(u, t), z(u, t) with the inverse chart u_a(w, z, t).

    `z` may be omitted when it has no closed form in the expression grammar
    (angles); the rectifying property is then checked through the inverse chart.
    """

    w_names: tuple[str, ...]
    w: tuple[Expr, ...]
    z_name: str
    inverse: tuple[Expr, ...]
    z: Expr | None = None

    def __post_init__(self):
        object.__setattr__(self, "w_names", tuple(self.w_names))
        object.__setattr__(self, "w", tuple(as_expr(x) for x in self.w))
        object.__setattr__(self, "inverse", tuple(as_expr(x) for x in self.inverse))
        if self.z is not None:
            object.__setattr__(self, "z", as_expr(self.z))
        if len(self.w) != len(self.w_names):
            raise DimensionError("one name per invariant is required")
        if len(self.inverse) != len(self.w) + 1:
            raise DimensionError("the inverse chart must give every original variable")

    @property
    def new_names(self) -> tuple[str, ...]:
        return self.w_names + (self.z_name,)

    def pull(self, e: Expr, states: Sequence[str]) -> Expr:
        """Express e(u, t) in the new coordinates."""
        out = substitute(e, dict(zip(states, self.inverse)))
        return out


@dataclass
class ReductionProfile:
    W: list[Expr]
    Z: Expr
    M: list[Expr]
    M_m: Expr
    M_old: list[Expr]  # the same quantities before the change of variables
    classification: str
    report: VerificationReport = field(default_factory=VerificationReport)
    n_vanishing: int = 0


def lie_bracket(f: Sequence[Expr], phi: Sequence[Expr], states: Sequence[str]) -> list[Expr]:
    """[f, phi]_a = f_b d_b phi_a - phi_b d_b f_a."""
    if not (len(f) == len(phi) == len(states)):
        raise DimensionError("f, phi and the state list must have equal lengths")
    out = []
    for a in range(len(f)):
        terms = []
        for b, u in enumerate(states):
            terms.append(mul(f[b], diff(phi[a], u)))
            terms.append(neg(mul(phi[b], diff(f[a], u))))
        out.append(sum_exprs(terms))
    return out


def _no_tau(X: VectorField):
    if X.tau is not None and not X.tau == ZERO:
        raise DimensionError("tau must vanish for systems")


def determining_lhs(ds: DynamicalSystem, X: VectorField) -> list[Expr]:
    """[f, phi]_a + d_t phi_a."""
    _no_tau(X)
    br = lie_bracket(ds.f, X.phi, ds.states)
    return [add(b, diff(p, ds.time)) for b, p in zip(br, X.phi)]


def onshell_lambda(L: LambdaMatrix, ds: DynamicalSystem) -> LambdaMatrix:
    return L.map(lambda e: onshell_substitute(e, ds))


def check_Lambda_symmetry(
    ds: DynamicalSystem,
    X: VectorField,
    L: LambdaMatrix,
    cfg: SamplingConfig,
    name: str = "determining equations",
) -> VerificationReport:
    if X.m != ds.m or L.m != ds.m:
        raise DimensionError(f"system has {ds.m} components, X has {X.m}, Lambda is {L.m}x{L.m}")
    lhs = determining_lhs(ds, X)
    rhs = [neg(x) for x in onshell_lambda(L, ds).apply(list(X.phi))]
    report = VerificationReport()
    report.add(identity_check(name, ANCHOR_DETERMINING, list(zip(lhs, rhs)), cfg, ds.table.params))
    return report


@dataclass
class ScalarLambdaResult:
    lam: Expr | None
    report: VerificationReport
    component: int | None = None

    @property
    def consistent(self) -> bool:
        return self.lam is not None


def solve_scalar_lambda(ds: DynamicalSystem, X: VectorField, cfg: SamplingConfig) -> ScalarLambdaResult:
    """Recover lambda with X a (lambda I)-symmetry, or report the inconsistent component."""
    lhs = determining_lhs(ds, X)
    params = ds.table.params
    pivot = None
    for a, p in enumerate(X.phi):
        if not equiv(p, ZERO, cfg, params).passed:
            pivot = a
            break
    if pivot is None:
        raise ValueError("phi vanishes identically")
    lam = neg(div(lhs[pivot], X.phi[pivot]))
    report = VerificationReport()
    bad = None
    for a in range(ds.m):
        if a == pivot:
            continue
        chk = identity_check(
            f"component {a + 1} with lambda from component {pivot + 1}",
            ANCHOR_DETERMINING,
            [(lhs[a], neg(mul(lam, X.phi[a])))],
            cfg,
            params,
        )
        report.add(chk)
        if not chk.passed and bad is None:
            bad = a
    report.note("lambda", lam)
    if bad is not None:
        return ScalarLambdaResult(None, report, bad)
    return ScalarLambdaResult(lam, report)


def verify_adapted_coordinates(
    X: VectorField,
    cmap: CoordinateMap,
    table: SymbolTable,
    cfg: SamplingConfig,
    states: Sequence[str] | None = None,
    cfg_new: SamplingConfig | None = None,
) -> VerificationReport:
    """X w_j == 0 and X z == 1, plus the round trip of the chart.

    `cfg` samples the original variables, `cfg_new` the adapted ones.
    """
    states = tuple(states or table.state_vars)
    cfg_new = cfg_new or cfg
    params = table.params
    report = VerificationReport()
    # round trip (w, z) -> u -> (w, z)
    back = [(cmap.pull(w, states), Sym(n)) for w, n in zip(cmap.w, cmap.w_names)]
    if cmap.z is not None:
        back.append((cmap.pull(cmap.z, states), Sym(cmap.z_name)))
        # u -> (w, z) -> u
        fwd = dict(zip(cmap.new_names, list(cmap.w) + [cmap.z]))
        there = [(substitute(u_of, fwd), Sym(u)) for u_of, u in zip(cmap.inverse, states)]
        report.add(identity_check("chart round trip u->(w,z)->u", "u(w(u), z(u)) = u", there, cfg, params))
    report.add(identity_check("chart round trip (w,z)->u->(w,z)", "w(u(w, z)) = w", back, cfg_new, params))
    inv = [(X(w, table, states), ZERO) for w in cmap.w]
    report.add(identity_check("invariants", "X w_j = 0", inv, cfg, params))
    if cmap.z is not None:
        report.add(identity_check("rectifying coordinate", "X z = 1", [(X(cmap.z, table, states), as_expr(1.0))], cfg, params))
    else:
        # d u_a / dz at fixed w must be phi_a pulled back to the chart
        pairs = [(diff(u_of, cmap.z_name), cmap.pull(p, states)) for u_of, p in zip(cmap.inverse, X.phi)]
        report.add(identity_check("rectifying coordinate", "du/dz = phi(u(w, z))", pairs, cfg_new, params))
    return report


def _transform_rhs(
    v: Sequence[Expr],
    time_part: bool,
    ds: DynamicalSystem,
    cmap: CoordinateMap,
) -> tuple[list[Expr], Expr]:
    """Components of the vector v (u-space) in the adapted frame.

    With time_part the explicit t-dependence of the chart is included, so
    v = f gives (W_j, Z).
    """
    states = ds.states
    t = ds.time
    Wj = []
    for w in cmap.w:
        e = sum_exprs(mul(diff(w, u), va) for u, va in zip(states, v))
        if time_part:
            e = add(e, diff(w, t))
        Wj.append(cmap.pull(e, states))
    if cmap.z is not None:
        e = sum_exprs(mul(diff(cmap.z, u), va) for u, va in zip(states, v))
        if time_part:
            e = add(e, diff(cmap.z, t))
        return Wj, cmap.pull(e, states)
    # no closed-form z: solve v_a = sum_j du_a/dw_j W_j + du_a/dz Z + d_t u_a
    # for Z using a component where du_a/dz does not vanish
    for a, u_of in enumerate(cmap.inverse):
        dz = diff(u_of, cmap.z_name)
        if dz == ZERO:
            continue
        rest = cmap.pull(v[a], states)
        if time_part:
            rest = sub(rest, diff(u_of, t))
        for wn, Wv in zip(cmap.w_names, Wj):
            rest = sub(rest, mul(diff(u_of, wn), Wv))
        return Wj, div(rest, dz)
    raise InverseMapIncompleteError("the inverse chart does not depend on z")


def _leftover(exprs: Sequence[Expr], states: Sequence[str], cmap: CoordinateMap) -> set[str]:
    names = set()
    for e in exprs:
        names |= free_symbols(e)
    return names & (set(states) - set(cmap.new_names))


def transform_ds(ds: DynamicalSystem, cmap: CoordinateMap) -> tuple[list[Expr], Expr]:
    """Right-hand sides (W_j, Z) of the system written in (t, w, z)."""
    W, Z = _transform_rhs(ds.f, True, ds, cmap)
    left = _leftover(W + [Z], ds.states, cmap)
    if left:
        raise InverseMapIncompleteError(f"original variables remain after substitution: {sorted(left)}")
    return W, Z


def reduction_profile(
    ds: DynamicalSystem,
    X: VectorField,
    L: LambdaMatrix,
    cmap: CoordinateMap,
    cfg: SamplingConfig,
    cfg_new: SamplingConfig | None = None,
) -> ReductionProfile:
    """dW_j/dz == M_j and dZ/dz == M_m, then classify the reduction."""
    cfg_new = cfg_new or cfg
    params = ds.table.params
    W, Z = transform_ds(ds, cmap)
    Lphi = onshell_lambda(L, ds).apply(list(X.phi))
    M_old = [sum_exprs(mul(diff(w, u), x) for u, x in zip(ds.states, Lphi)) for w in cmap.w]
    M, M_m = _transform_rhs(Lphi, False, ds, cmap)
    if cmap.z is not None:
        M_old.append(sum_exprs(mul(diff(cmap.z, u), x) for u, x in zip(ds.states, Lphi)))
    report = VerificationReport()
    z = cmap.z_name
    pairs = [(diff(Wj, z), Mj) for Wj, Mj in zip(W, M)]
    report.add(identity_check("dW_j/dz = M_j", "dW_j/dz = (dw_j/du_a)(Lambda phi)_a", pairs, cfg_new, params))
    report.add(identity_check("dZ/dz = M_m", "dZ/dz = (dz/du_a)(Lambda phi)_a", [(diff(Z, z), M_m)], cfg_new, params))
    zero_j = [equiv(Mj, ZERO, cfg_new, params).passed for Mj in M]
    zero_m = equiv(M_m, ZERO, cfg_new, params).passed
    if all(zero_j) and zero_m:
        cls = "exact"
    elif all(zero_j):
        cls = "uniform-lambda"
    else:
        cls = f"partial({sum(zero_j)})"
    for j, (n, Wj) in enumerate(zip(cmap.w_names, W)):
        report.note(f"W[{n}]", Wj)
        report.note(f"M[{n}]", M[j])
    report.note(f"Z[{z}]", Z)
    report.note("M_m", M_m)
    report.note("classification", cls)
    return ReductionProfile(W, Z, M, M_m, M_old, cls, report, sum(zero_j))
