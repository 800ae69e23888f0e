"""Lambda-invariant Lagrangians: Noether Lambda-conservation, Legendre
transform, the lift to a Lambda-symmetric Hamiltonian system, and the
partial Lagrangian reduction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from . import hamiltonian as ham
from .dynsys import check_Lambda_symmetry
from .prolong import DimensionError, LambdaMatrix, Lambda_prolongation, VectorField
from .report import FAIL, PASS, SKIPPED, Check, VerificationReport, identity_check
from .symexpr import (
    ZERO,
    Expr,
    SamplingConfig,
    Sym,
    SymbolTable,
    add,
    as_expr,
    det,
    diff,
    div,
    equiv,
    formal_total_derivative,
    free_symbols,
    inverse,
    matmul,
    mul,
    neg,
    sub,
    substitute,
    sum_exprs,
    trace,
)


class SingularHessianError(ValueError):
    pass


class SingularMassMatrixError(ValueError):
    pass


class NonAffineMomentaError(ValueError):
    pass


class OrderError(ValueError):
    pass


@dataclass(frozen=True)
class Lagrangian:
    L: Expr
    table: SymbolTable
    order: int = 1

    def __post_init__(self):
        object.__setattr__(self, "L", as_expr(self.L))
        if self.order not in (1, 2):
            raise OrderError("only first- and second-order Lagrangians are supported")
        if self.table.time_var is None:
            raise ValueError("a Lagrangian needs a time problem symbol table")
        if self.table.max_order < self.order + 2:
            raise ValueError(f"the table must declare derivatives up to order {self.order + 2}")
        for name in free_symbols(self.L):
            if self.table.is_jet(name) and self.table.order(name) > self.order:
                raise OrderError(f"{name!r} exceeds the declared order {self.order}")

    @classmethod
    def build(cls, L, q: Sequence[str], order: int = 1, time: str = "t", params=None, extra=()):
        table = SymbolTable.for_time(q, time, params, extra, max_order=order + 2)
        if isinstance(L, str):
            from .symexpr import parse

            L = parse(L, table)
        return cls(L, table, order)

    @property
    def q(self) -> tuple[str, ...]:
        return self.table.state_vars

    @property
    def n(self) -> int:
        return len(self.q)

    @property
    def t(self) -> str:
        return self.table.time_var

    def dq(self, k: int = 1) -> list[str]:
        return [self.table.dot(x, k) for x in self.q]

    def momenta(self) -> list[Expr]:
        return [diff(self.L, v) for v in self.dq()]

    def D(self, e: Expr) -> Expr:
        return formal_total_derivative(e, self.t, self.table)


@dataclass
class NoetherCharge:
    P: Expr
    P_matrix: list[list[Expr]]
    momenta: list[Expr]


@dataclass
class LegendreResult:
    q: tuple[str, ...]
    p: tuple[str, ...]
    momentum_map: list[Expr]  # p_a(q, dq, t)
    velocity_map: list[Expr]  # dq_a(q, p, t)
    H: Expr
    hamiltonian: ham.HamiltonianSystem
    report: VerificationReport = field(default_factory=VerificationReport)

    def to_phase(self, e: Expr, lag: "Lagrangian") -> Expr:
        """Rewrite an expression over (q, dq, t) on phase space (q, p, t)."""
        return substitute(e, dict(zip(lag.dq(), self.velocity_map)))


@dataclass
class ReductionInput:
    w_names: tuple[str, ...]
    w: tuple[Expr, ...]
    zeta_name: str
    zeta: Expr
    L_tilde: Expr


def _params(lag: Lagrangian):
    return lag.table.params


# -- Euler-Lagrange and invariance --------------------------------------------


def euler_lagrange(lag: Lagrangian) -> list[Expr]:
    """D_t(dL/d dq_a) - dL/dq_a for each coordinate."""
    if lag.order != 1:
        raise OrderError("Euler-Lagrange equations are built for first-order Lagrangians only")
    return [sub(lag.D(p), diff(lag.L, q)) for p, q in zip(lag.momenta(), lag.q)]


def onshell_accelerations(lag: Lagrangian, cfg: SamplingConfig) -> dict[str, Expr]:
    """Solve the Euler-Lagrange equations for the accelerations.

    They are linear in ddq with the velocity Hessian as coefficient matrix.
    """
    el = euler_lagrange(lag)
    ddq = lag.dq(2)
    zero = {a: ZERO for a in ddq}
    A = [[diff(e, a) for a in ddq] for e in el]
    rest = [substitute(e, zero) for e in el]
    Ainv, d = inverse(A)
    if equiv(d, ZERO, cfg, _params(lag)).passed:
        raise SingularHessianError("the velocity Hessian is singular; accelerations cannot be eliminated")
    sol = [neg(sum_exprs(mul(Ainv[i][j], rest[j]) for j in range(lag.n))) for i in range(lag.n)]
    return dict(zip(ddq, sol))


def check_Lambda_invariance(
    lag: Lagrangian, X: VectorField, LL: LambdaMatrix, cfg: SamplingConfig
) -> VerificationReport:
    if X.m != lag.n or LL.m != lag.n:
        raise DimensionError(f"Lagrangian has {lag.n} coordinates, X has {X.m}, Lambda is {LL.m}x{LL.m}")
    Xp = Lambda_prolongation(X, LL, lag.table)
    report = VerificationReport()
    report.add(identity_check("Lambda-invariance of L", "X_Lambda^(1) L = 0", [(Xp.apply(lag.L, lag.table), ZERO)], cfg, _params(lag)))
    return report


# -- Noether Lambda-conservation ----------------------------------------------


def noether_charge(
    lag: Lagrangian, X: VectorField, LL: LambdaMatrix, cfg: SamplingConfig
) -> tuple[NoetherCharge, VerificationReport]:
    """P = phi_a p_a with D_t P = -(Lambda phi)_a p_a on solutions."""
    p = lag.momenta()
    phi = list(X.phi)
    Pm = [[mul(phi[a], p[b]) for b in range(lag.n)] for a in range(lag.n)]
    P = sum_exprs(mul(f, pa) for f, pa in zip(phi, p))
    acc = onshell_accelerations(lag, cfg)
    params = _params(lag)
    report = VerificationReport()
    report.add(identity_check("trace of current matrix", "Tr(P_ab) = phi_a p_a", [(trace(Pm), P)], cfg, params))
    DtP = substitute(lag.D(P), acc)
    Lphi = LL.apply(phi)
    deviation = neg(sum_exprs(mul(x, pa) for x, pa in zip(Lphi, p)))
    report.add(identity_check("Noether Lambda-conservation", "D_t P = -(Lambda phi)_a p_a", [(DtP, deviation)], cfg, params))
    # Tr(D^_t P) with (D^_t)_ab = D_t delta_ab + Lambda_ab
    DPm = [[lag.D(x) for x in row] for row in Pm]
    hat = trace(DPm)
    hat = add(hat, trace(matmul(LL.rows(), Pm)))
    report.add(identity_check("deformed-derivative form", "Tr(D^_t P) = 0", [(substitute(hat, acc), ZERO)], cfg, params))
    report.note("P", P)
    report.note("D_t P (on-shell)", DtP)
    return NoetherCharge(P, Pm, p), report


def noether_charge_second_order(
    lag: Lagrangian, X: VectorField, LL: LambdaMatrix, cfg: SamplingConfig
) -> tuple[NoetherCharge, VerificationReport]:
    """Current matrix of a second-order Lagrangian; only its trace identity is checked."""
    if lag.order != 2:
        raise OrderError("a second-order Lagrangian is required")
    n = lag.n
    phi = list(X.phi)
    dL1 = [diff(lag.L, v) for v in lag.dq(1)]
    dL2 = [diff(lag.L, v) for v in lag.dq(2)]
    Lphi = LL.apply(phi)
    hat_phi = [add(lag.D(f), x) for f, x in zip(phi, Lphi)]
    D_dL2 = [lag.D(x) for x in dL2]
    Pm = [
        [sub(add(mul(phi[a], dL1[b]), mul(hat_phi[a], dL2[b])), mul(phi[a], D_dL2[b])) for b in range(n)]
        for a in range(n)
    ]
    P = trace(Pm)
    expected = sum_exprs(
        add(mul(phi[a], sub(dL1[a], D_dL2[a])), mul(hat_phi[a], dL2[a])) for a in range(n)
    )
    report = VerificationReport()
    report.add(
        identity_check(
            "second-order trace identity",
            "Tr P = phi_a (dL/d dq_a - D_t dL/d ddq_a) + (D^_t phi)_a dL/d ddq_a",
            [(P, expected)],
            cfg,
            _params(lag),
        )
    )
    report.note("P", P)
    return NoetherCharge(P, Pm, dL1), report


# -- Legendre transform --------------------------------------------------------


def momentum_names(q: Sequence[str]) -> tuple[str, ...]:
    return tuple("p" + x[1:] if x.startswith("q") else "p_" + x for x in q)


def legendre(
    lag: Lagrangian,
    cfg: SamplingConfig,
    p_names: Sequence[str] | None = None,
    velocity_map: Sequence[Expr] | None = None,
    cfg_phase: SamplingConfig | None = None,
) -> LegendreResult:
    """p = dL/d dq solved for dq (affine momenta), H = p.dq - L."""
    if lag.order != 1:
        raise OrderError("the Legendre transform is built for first-order Lagrangians")
    cfg_phase = cfg_phase or cfg
    n = lag.n
    p_names = tuple(p_names or momentum_names(lag.q))
    params = _params(lag)
    mom = lag.momenta()
    dq = lag.dq()
    ps = [Sym(x) for x in p_names]
    if velocity_map is None:
        hess = [[diff(m, v) for v in dq] for m in mom]
        flat = [diff(h, v) for row in hess for h in row for v in dq]
        if flat and not all(r.passed for r in [equiv(x, ZERO, cfg, params) for x in flat]):
            raise NonAffineMomentaError(
                "momenta are not affine in the velocities; supply velocity_map for verification"
            )
        zero = {v: ZERO for v in dq}
        M = [[substitute(h, zero) for h in row] for row in hess]
        c = [substitute(m, zero) for m in mom]
        Minv, d = inverse(M)
        if equiv(d, ZERO, cfg, params).passed:
            raise SingularMassMatrixError("the velocity Hessian (mass matrix) is singular")
        shifted = [sub(pa, ca) for pa, ca in zip(ps, c)]
        velocity_map = [sum_exprs(mul(Minv[i][j], shifted[j]) for j in range(n)) for i in range(n)]
    velocity_map = [as_expr(v) for v in velocity_map]
    to_phase = dict(zip(dq, velocity_map))
    H = sub(sum_exprs(mul(pa, v) for pa, v in zip(ps, velocity_map)), substitute(lag.L, to_phase))
    hs = ham.HamiltonianSystem.build(H, lag.q, p_names, lag.t, params, lag.table.extra)
    report = VerificationReport()
    back_p = [(substitute(m, to_phase), pa) for m, pa in zip(mom, ps)]
    report.add(identity_check("Legendre round trip p", "p(q, dq(q, p)) = p", back_p, cfg_phase, params))
    to_vel = dict(zip(p_names, mom))
    back_v = [(substitute(v, to_vel), Sym(x)) for v, x in zip(velocity_map, dq)]
    report.add(identity_check("Legendre round trip dq", "dq(q, p(q, dq)) = dq", back_v, cfg, params))
    report.note("momenta", mom)
    report.note("velocities", velocity_map)
    report.note("H", H)
    return LegendreResult(tuple(lag.q), p_names, mom, velocity_map, H, hs, report)


# -- lift to phase space ------------------------------------------------------


def _depends_on_velocity(LL: LambdaMatrix, lag: Lagrangian, cfg: SamplingConfig) -> bool:
    dq = lag.dq()
    for row in LL.entries:
        for x in row:
            for v in dq:
                if v in free_symbols(x) and not equiv(diff(x, v), ZERO, cfg, _params(lag)).passed:
                    return True
    return False


def lift_vector_field(
    lag: Lagrangian,
    X: VectorField,
    LL: LambdaMatrix,
    leg: LegendreResult,
    cfg: SamplingConfig,
) -> tuple[VectorField | None, VerificationReport]:
    """Extend X to phase space: psi_a from the Lambda-prolongation.

    The term of the general formula that vanishes by the Noether rule is
    dropped only after invariance has been verified (and its vanishing is
    checked too).
    """
    report = check_Lambda_invariance(lag, X, LL, cfg)
    if not report.passed:
        return None, report
    n = lag.n
    phi = list(X.phi)
    dq = lag.dq()
    params = _params(lag)
    p = lag.momenta()
    # the dropped bracket: D_t P + Lambda_bc phi_c p_b, on-shell, differentiated in dq
    acc = onshell_accelerations(lag, cfg)
    P = sum_exprs(mul(f, pa) for f, pa in zip(phi, p))
    bracket = add(substitute(lag.D(P), acc), sum_exprs(mul(x, pa) for x, pa in zip(LL.apply(phi), p)))
    report.add(
        identity_check(
            "dropped Noether term",
            "d/d dq_a (D_t P + Lambda_bc phi_c p_b) = 0",
            [(diff(bracket, v), ZERO) for v in dq],
            cfg,
            params,
        )
    )
    ps = [Sym(x) for x in leg.p]
    psi = []
    for a in range(n):
        terms = []
        for b in range(n):
            for c in range(n):
                terms.append(mul(mul(diff(LL.entries[b][c], dq[a]), phi[c]), ps[b]))
            terms.append(mul(ps[b], diff(phi[b], lag.q[a])))
        psi.append(leg.to_phase(neg(sum_exprs(terms)), lag))
    XH = VectorField(tuple(phi) + tuple(psi))
    report.note("psi", psi)
    return XH, report


def build_Lambda_H(
    lag: Lagrangian,
    LL: LambdaMatrix,
    X: VectorField,
    Lambda2: LambdaMatrix,
    leg: LegendreResult,
    cfg: SamplingConfig,
) -> tuple[LambdaMatrix, VerificationReport]:
    """[[Lambda_L, 0], [-(dLambda_L/dq) p, Lambda_2]] on phase space.

    Lambda_2 must satisfy Lambda2_ab dphi_c/dq_b = LambdaL_cb dphi_b/dq_a;
    it is not unique, the supplied one is only verified.
    """
    n = lag.n
    if Lambda2.m != n or LL.m != n:
        raise DimensionError("Lambda_L and Lambda_2 must be n x n")
    phi = list(X.phi)
    ps = [Sym(x) for x in leg.p]
    conv = lambda e: leg.to_phase(e, lag)  # noqa: E731
    top = [[conv(LL.entries[a][b]) for b in range(n)] + [ZERO] * n for a in range(n)]
    bottom = []
    for a in range(n):
        row = []
        for b in range(n):
            row.append(conv(neg(sum_exprs(mul(ps[c], diff(LL.entries[c][b], lag.q[a])) for c in range(n)))))
        row += [conv(Lambda2.entries[a][b]) for b in range(n)]
        bottom.append(row)
    LH = LambdaMatrix(tuple(map(tuple, top + bottom)))
    K = [[diff(phi[c], lag.q[b]) for b in range(n)] for c in range(n)]
    pairs = []
    for a in range(n):
        for c in range(n):
            lhs = sum_exprs(mul(Lambda2.entries[a][b], K[c][b]) for b in range(n))
            rhs = sum_exprs(mul(LL.entries[c][b], K[b][a]) for b in range(n))
            pairs.append((conv(lhs), conv(rhs)))
    report = VerificationReport()
    report.add(
        identity_check(
            "Lambda_2 constraint",
            "Lambda2_ab dphi_c/dq_b = LambdaL_cb dphi_b/dq_a",
            pairs,
            cfg,
            _params(lag),
        )
    )
    report.note("Lambda_H", [x for row in LH.entries for x in row])
    report.note("Lambda_2", "user supplied; the constraint does not determine it uniquely")
    return LH, report


@dataclass
class PipelineResult:
    report: VerificationReport
    legendre: LegendreResult | None = None
    hamiltonian: ham.HamiltonianSystem | None = None
    X_H: VectorField | None = None
    Lambda_H: LambdaMatrix | None = None
    G: Expr | None = None
    S: Expr | None = None
    route: str = ""


def _skip(report: VerificationReport, names: Sequence[str]):
    for n in names:
        report.add(Check(n, "not reached", SKIPPED))


_STAGES = [
    "Legendre transform",
    "lift of X",
    "Lambda_H",
    "Hamiltonian determining equations",
    "Lambda-constant of motion",
    "Lagrangian/Hamiltonian deviation agreement",
]


def theorem4_pipeline(
    lag: Lagrangian,
    X: VectorField,
    LL: LambdaMatrix,
    Lambda2: LambdaMatrix,
    cfg: SamplingConfig,
    cfg_phase: SamplingConfig | None = None,
    p_names: Sequence[str] | None = None,
) -> PipelineResult:
    """Legendre -> lift -> Lambda_H -> Hamiltonian Lambda-symmetry -> G or S.

    A velocity-independent Lambda_L takes the generating-function route
    (G = phi_a p_a); otherwise the divergence route through S.
    """
    cfg_phase = cfg_phase or cfg
    report = VerificationReport()
    out = PipelineResult(report)
    noether, nrep = noether_charge(lag, X, LL, cfg)
    report.extend(nrep)
    try:
        leg = legendre(lag, cfg, p_names, cfg_phase=cfg_phase)
    except (NonAffineMomentaError, SingularMassMatrixError) as exc:
        report.add(Check("Legendre transform", "p = dL/d dq", FAIL, float("inf"), None, str(exc)))
        _skip(report, _STAGES[1:])
        return out
    report.extend(leg.report)
    out.legendre, out.hamiltonian = leg, leg.hamiltonian
    hs = leg.hamiltonian
    XH, lrep = lift_vector_field(lag, X, LL, leg, cfg)
    report.extend(lrep)
    if XH is None or not report.passed:
        _skip(report, _STAGES[2:])
        return out
    out.X_H = XH
    LH, brep = build_Lambda_H(lag, LL, X, Lambda2, leg, cfg_phase)
    report.extend(brep)
    out.Lambda_H = LH
    if not brep.passed:
        _skip(report, _STAGES[3:])
        return out
    srep = check_Lambda_symmetry(hs.ds, XH, LH, cfg_phase, name="Hamiltonian determining equations")
    report.extend(srep)
    if not srep.passed:
        _skip(report, _STAGES[4:])
        return out
    P_phase = sum_exprs(mul(f, Sym(p)) for f, p in zip(X.phi, leg.p))
    gf = ham.find_generating_function(XH, hs.table, cfg_phase, anchor=P_phase)
    if not _depends_on_velocity(LL, lag, cfg):
        out.route = "generating function"
        report.extend(gf.report)
        if gf.G is None:
            _skip(report, _STAGES[4:])
            return out
        G = gf.G.G
        report.add(identity_check("G = phi_a p_a", "G = phi_a p_a", [(G, P_phase)], cfg_phase, hs.table.params))
        report.extend(ham.check_theorem2_case_i(hs, XH, LH, P_phase, cfg_phase))
        out.G = P_phase
    else:
        out.route = "divergence"
        report.add(
            Check(
                "no generating function",
                "X_H is not Hamiltonian when Lambda_L depends on dq",
                PASS if gf.G is None else FAIL,
                0.0,
                gf.report.checks[0].witness,
                "" if gf.G is None else "a generating function was found unexpectedly",
            )
        )
        S = ham.divergence_S(XH, hs.table).S
        report.extend(ham.check_theorem2_case_ii(hs, XH, LH, cfg_phase, S))
        out.S = S
    # Noether on the Lagrangian side vs the Hamiltonian time derivative of P
    DtP_L = leg.to_phase(neg(sum_exprs(mul(x, pa) for x, pa in zip(LL.apply(list(X.phi)), noether.momenta))), lag)
    DtP_H = ham.onshell_time_derivative(P_phase, hs)
    report.add(
        identity_check(
            "Lagrangian/Hamiltonian deviation agreement",
            "D_t P (Lagrangian) = D_t P (Hamiltonian)",
            [(DtP_L, DtP_H)],
            cfg_phase,
            hs.table.params,
        )
    )
    return out


def check_uniform_factor(
    LL: LambdaMatrix,
    X: VectorField,
    c: float,
    cfg: SamplingConfig,
    params=None,
    LH: LambdaMatrix | None = None,
    XH: VectorField | None = None,
    cfg_phase: SamplingConfig | None = None,
) -> VerificationReport:
    """Lambda_L phi = c phi with constant c, and then Lambda_H Phi = c Phi."""
    report = VerificationReport()
    cc = as_expr(float(c))
    pairs = [(x, mul(cc, f)) for x, f in zip(LL.apply(list(X.phi)), X.phi)]
    report.add(identity_check("Lambda_L phi = c phi", "Lambda_L phi = c phi", pairs, cfg, params))
    if LH is not None and XH is not None:
        pairs = [(x, mul(cc, f)) for x, f in zip(LH.apply(list(XH.phi)), XH.phi)]
        report.add(identity_check("Lambda_H Phi = c Phi", "Lambda Phi = c Phi", pairs, cfg_phase or cfg, params))
    return report


# -- partial Lagrangian reduction --------------------------------------------


@dataclass
class PartialReduction:
    equation: Expr  # dL~/dzeta written in (t, q, dq); the reduced equation is equation = 0
    explicit: tuple[str, Expr] | None
    degenerate: bool
    report: VerificationReport


def partial_reduction(
    lag: Lagrangian,
    X: VectorField,
    LL: LambdaMatrix,
    red: ReductionInput,
    cfg: SamplingConfig,
) -> PartialReduction:
    """Verify the invariants and the rewrite L~(t, w, dw, zeta), then emit dL~/dzeta = 0."""
    params = _params(lag)
    report = VerificationReport()
    phi = list(X.phi)
    Lphi = LL.apply(phi)
    pivot = next(a for a, f in enumerate(phi) if not equiv(f, ZERO, cfg, params).passed)
    lam = div(Lphi[pivot], phi[pivot])
    report.add(
        identity_check("Lambda phi = lambda phi", "Lambda phi = lambda phi", [(x, mul(lam, f)) for x, f in zip(Lphi, phi)], cfg, params)
    )
    report.add(identity_check("invariants w_j", "X w_j = 0", [(X(w, lag.table), ZERO) for w in red.w], cfg, params))
    Xp = Lambda_prolongation(X, LL, lag.table)
    report.add(identity_check("differential invariant zeta", "X_Lambda^(1) zeta = 0", [(Xp.apply(red.zeta, lag.table), ZERO)], cfg, params))
    defs: dict[str, Expr] = {red.zeta_name: red.zeta}
    for n, w in zip(red.w_names, red.w):
        defs[n] = w
        defs["d" + n] = lag.D(w)
    rewritten = substitute(red.L_tilde, defs)
    report.add(identity_check("rewrite L~ = L", "L~(t, w, dw, zeta) = L", [(rewritten, lag.L)], cfg, params))
    eq = substitute(diff(red.L_tilde, red.zeta_name), defs)
    degenerate = equiv(eq, ZERO, cfg, params).passed
    explicit = None
    if degenerate:
        report.add(Check("reduced equation", "dL~/dzeta = 0", SKIPPED, 0.0, None, "L~ does not depend on zeta: 0 = 0"))
    else:
        used = [v for v in lag.dq() if v in free_symbols(eq) and not equiv(diff(eq, v), ZERO, cfg, params).passed]
        if len(used) == 1:
            v = used[0]
            coef = diff(eq, v)
            if equiv(diff(coef, v), ZERO, cfg, params).passed:
                rhs = neg(div(substitute(eq, {v: ZERO}), coef))
                explicit = (v, rhs)
                report.note(f"reduced equation {v}", rhs)
    report.note("dL~/dzeta", eq)
    return PartialReduction(eq, explicit, degenerate, report)
