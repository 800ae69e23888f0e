"""mu-symmetries of field Lagrangians.

Several independent variables x_i, fields u_a, one Lambda_i matrix per x_i.
Covers the flatness condition, the gauge factor Gamma, mu-invariance of a
Lagrangian, the Lambda-conserved current densities and the gauge-equivalent
standard symmetry X~ = Gamma X.

A field X may also move an independent variable (components xi_i); this is
only supported for a single field, where Lambda_i reduces to scalars lambda_i.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .prolong import DimensionError, LambdaMatrix
from .report import VerificationReport, identity_check
from .symexpr import (
    ZERO,
    Compiled,
    Expr,
    SamplingConfig,
    Sym,
    SymbolTable,
    add,
    as_expr,
    det,
    diff,
    equiv,
    formal_total_derivative,
    free_symbols_all,
    matmul,
    matvec,
    mul,
    neg,
    parse,
    sub,
    substitute,
    sum_exprs,
    trace,
)


class SingularGammaError(ValueError):
    pass


@dataclass(frozen=True)
class FieldProblem:
    L: Expr
    table: SymbolTable
    phi: tuple[Expr, ...]
    Lambdas: tuple[LambdaMatrix, ...]
    Gamma: tuple[tuple[Expr, ...], ...] | None = None
    xi: tuple[Expr, ...] | None = None
    order: int = 1

    def __post_init__(self):
        object.__setattr__(self, "L", as_expr(self.L))
        object.__setattr__(self, "phi", tuple(as_expr(p) for p in self.phi))
        object.__setattr__(self, "Lambdas", tuple(self.Lambdas))
        s, n = self.s, self.n
        if len(self.phi) != n:
            raise DimensionError(f"phi needs {n} components, got {len(self.phi)}")
        if len(self.Lambdas) != s:
            raise DimensionError(f"one Lambda matrix per independent variable ({s}) is required")
        if any(M.m != n for M in self.Lambdas):
            raise DimensionError(f"every Lambda_i must be {n}x{n}")
        if self.Gamma is not None:
            G = tuple(tuple(as_expr(x) for x in row) for row in self.Gamma)
            if len(G) != n or any(len(r) != n for r in G):
                raise DimensionError(f"Gamma must be {n}x{n}")
            object.__setattr__(self, "Gamma", G)
        if self.xi is not None:
            if n != 1:
                raise DimensionError("components along independent variables need a single field")
            if len(self.xi) != s:
                raise DimensionError(f"xi needs {s} components")
            object.__setattr__(self, "xi", tuple(as_expr(x) for x in self.xi))
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if self.table.max_order < self.order + 1:
            raise ValueError(f"the table must declare derivatives up to order {self.order + 1}")

    @classmethod
    def build(
        cls,
        L: str,
        indep: Sequence[str],
        fields: Sequence[str],
        phi: Sequence[str],
        Lambdas: Sequence[Sequence[Sequence[str]]],
        Gamma: Sequence[Sequence[str]] | None = None,
        xi: Sequence[str] | None = None,
        params=None,
        order: int = 1,
    ) -> "FieldProblem":
        table = SymbolTable.for_fields(indep, fields, params, max_order=order + 1)
        p = lambda x: parse(str(x), table)  # noqa: E731
        return cls(
            p(L),
            table,
            tuple(p(x) for x in phi),
            tuple(LambdaMatrix(tuple(tuple(p(x) for x in row) for row in M)) for M in Lambdas),
            None if Gamma is None else tuple(tuple(p(x) for x in row) for row in Gamma),
            None if xi is None else tuple(p(x) for x in xi),
            order,
        )

    @property
    def x(self) -> tuple[str, ...]:
        return self.table.indep_vars

    @property
    def fields(self) -> tuple[str, ...]:
        return self.table.state_vars

    @property
    def s(self) -> int:
        return len(self.x)

    @property
    def n(self) -> int:
        return len(self.fields)

    @property
    def params(self):
        return self.table.params

    def D(self, e: Expr, i: int) -> Expr:
        return formal_total_derivative(e, self.x[i], self.table)

    def du(self, a: int, *idx: int) -> str:
        return self.table.derivative(self.fields[a], *(self.x[i] for i in idx))

    def with_(self, **kw) -> "FieldProblem":
        args = dict(L=self.L, table=self.table, phi=self.phi, Lambdas=self.Lambdas,
                    Gamma=self.Gamma, xi=self.xi, order=self.order)
        args.update(kw)
        return FieldProblem(**args)


@dataclass
class CurrentDensity:
    P_matrices: list[list[list[Expr]]]  # one n x n matrix per x_i

    @property
    def P(self) -> list[Expr]:
        return [trace(M) for M in self.P_matrices]


# -- flatness and the gauge factor ---------------------------------------------


def _D(table: SymbolTable, e: Expr, i: int) -> Expr:
    return formal_total_derivative(e, table.indep_vars[i], table)


def check_compatibility(
    Lambdas: Sequence[LambdaMatrix], table: SymbolTable, cfg: SamplingConfig
) -> VerificationReport:
    """D_i L_j - D_j L_i + [L_i, L_j] = 0 for every pair i < j."""
    s = len(Lambdas)
    if s < 2:
        raise DimensionError("the compatibility condition needs at least two independent variables")
    pairs = []
    for i in range(s):
        for j in range(i + 1, s):
            A, B = Lambdas[i].rows(), Lambdas[j].rows()
            AB, BA = matmul(A, B), matmul(B, A)
            for a in range(len(A)):
                for b in range(len(A)):
                    lhs = add(_D(table, B[a][b], i), AB[a][b])
                    rhs = add(_D(table, A[a][b], j), BA[a][b])
                    pairs.append((lhs, rhs))
    report = VerificationReport()
    report.add(identity_check("compatibility", "D_i L_j - D_j L_i + [L_i, L_j] = 0", pairs, cfg, table.params))
    return report


def verify_gamma(
    Lambdas: Sequence[LambdaMatrix],
    Gamma: Sequence[Sequence[Expr]],
    table: SymbolTable,
    cfg: SamplingConfig,
) -> VerificationReport:
    """Gamma L_i = D_i Gamma entrywise, so L_i = Gamma^-1 D_i Gamma without inverting."""
    G = [list(map(as_expr, row)) for row in Gamma]
    if equiv(det(G), ZERO, cfg, table.params).passed:
        raise SingularGammaError("det Gamma vanishes identically on the sampling box")
    pairs = []
    for i, Li in enumerate(Lambdas):
        GL = matmul(G, Li.rows())
        for a in range(len(G)):
            for b in range(len(G)):
                pairs.append((GL[a][b], _D(table, G[a][b], i)))
    report = VerificationReport()
    report.add(identity_check("gauge factor", "Gamma L_i = D_i Gamma", pairs, cfg, table.params))
    return report


# -- prolongation and invariance -----------------------------------------------


def characteristic(fp: FieldProblem) -> list[Expr]:
    """Q_a = phi_a - xi_j u_a,j."""
    if fp.xi is None:
        return list(fp.phi)
    return [sub(fp.phi[0], sum_exprs(mul(x, Sym(fp.du(0, j))) for j, x in enumerate(fp.xi)))]


def mu_prolongation(fp: FieldProblem) -> list[list[Expr]]:
    """Coefficients Psi[i][a] on d/du_a,i: D_i Q_a + xi_j u_a,ij + (L_i Q)_a."""
    Q = characteristic(fp)
    out = []
    for i in range(fp.s):
        LQ = fp.Lambdas[i].apply(Q)
        row = []
        for a in range(fp.n):
            c = add(fp.D(Q[a], i), LQ[a])
            if fp.xi is not None:
                c = add(c, sum_exprs(mul(x, Sym(fp.du(a, i, j))) for j, x in enumerate(fp.xi)))
            row.append(c)
        out.append(row)
    return out


def invariance_expression(fp: FieldProblem) -> Expr:
    """X_mu^(1) L, with the deformed divergence of xi when X moves the x_i."""
    Psi = mu_prolongation(fp)
    terms = [mul(fp.phi[a], diff(fp.L, u)) for a, u in enumerate(fp.fields)]
    for i in range(fp.s):
        for a in range(fp.n):
            terms.append(mul(Psi[i][a], diff(fp.L, fp.du(a, i))))
    if fp.xi is not None:
        terms += [mul(x, diff(fp.L, xv)) for x, xv in zip(fp.xi, fp.x)]
        div_xi = sum_exprs(
            add(fp.D(x, i), mul(fp.Lambdas[i].entries[0][0], x)) for i, x in enumerate(fp.xi)
        )
        terms.append(mul(fp.L, div_xi))
    return sum_exprs(terms)


def check_mu_invariance(fp: FieldProblem, cfg: SamplingConfig) -> VerificationReport:
    if fp.order != 1:
        raise ValueError("mu-invariance is checked for first-order field Lagrangians")
    report = VerificationReport()
    report.add(identity_check("mu-invariance", "X_mu^(1) L = 0", [(invariance_expression(fp), ZERO)], cfg, fp.params))
    return report


# -- Euler-Lagrange equations and on-shell projection ---------------------------


def euler_lagrange(fp: FieldProblem) -> list[Expr]:
    """E_a = D_i(dL/du_a,i) - dL/du_a for a first-order Lagrangian."""
    if fp.order != 1:
        raise ValueError("Euler-Lagrange equations are built for first-order field Lagrangians")
    return [
        sub(sum_exprs(fp.D(diff(fp.L, fp.du(a, i)), i) for i in range(fp.s)), diff(fp.L, u))
        for a, u in enumerate(fp.fields)
    ]


def projection_targets(fp: FieldProblem, cfg: SamplingConfig) -> list[str]:
    """Per field, the highest-index pure second derivative giving a nonsingular system."""
    E = euler_lagrange(fp)
    for i in reversed(range(fp.s)):
        targets = [fp.du(a, i, i) for a in range(fp.n)]
        A = [[diff(e, t) for t in targets] for e in E]
        if not equiv(det(A), ZERO, cfg, fp.params).passed:
            return targets
    raise ValueError("no pure second derivatives can be solved from the Euler-Lagrange equations")


class OnShellProjector:
    """Overwrite sampled target derivatives so the Euler-Lagrange equations hold.

    The equations are linear in second derivatives; rows whose coefficient
    matrix is singular become NaN and are redrawn by the sampler.
    """

    def __init__(self, fp: FieldProblem, cfg: SamplingConfig):
        E = euler_lagrange(fp)
        self.targets = projection_targets(fp, cfg)
        zero = {t: ZERO for t in self.targets}
        A = [diff(e, t) for e in E for t in self.targets]
        rest = [substitute(e, zero) for e in E]
        self.params = dict(fp.params)
        self.names = sorted(free_symbols_all(A + rest) - set(self.params))
        self.extra_vars = tuple(sorted(set(self.names) | set(self.targets)))
        self._fn = Compiled(A + rest, self.names + list(self.params))
        self.n = fp.n

    def __call__(self, batch: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        size = len(next(iter(batch.values())))
        args = [batch[k] for k in self.names] + [np.full(size, v) for v in self.params.values()]
        outs = [np.broadcast_to(np.asarray(o, dtype=float), (size,)) for o in self._fn(*args)]
        n = self.n
        A = np.stack(outs[: n * n], axis=-1).reshape(size, n, n)
        r = np.stack(outs[n * n :], axis=-1)
        with np.errstate(all="ignore"):
            d = np.linalg.det(A)
        bad = ~np.isfinite(d) | (np.abs(d) < 1e-12)
        A[bad] = np.eye(n)
        r = np.where(np.isfinite(r), r, 0.0)
        sol = np.linalg.solve(A, -r[..., None])[..., 0]
        sol[bad] = np.nan
        out = dict(batch)
        for k, t in enumerate(self.targets):
            out[t] = sol[:, k]
        return out


# -- current densities ----------------------------------------------------------


def current_matrices(fp: FieldProblem) -> list[list[list[Expr]]]:
    if fp.xi is not None:
        Q = characteristic(fp)[0]
        return [[[add(mul(Q, diff(fp.L, fp.du(0, i))), mul(x, fp.L))]] for i, x in enumerate(fp.xi)]
    return [
        [[mul(fp.phi[a], diff(fp.L, fp.du(b, i))) for b in range(fp.n)] for a in range(fp.n)]
        for i in range(fp.s)
    ]


def current_density(fp: FieldProblem, cfg: SamplingConfig) -> tuple[CurrentDensity, VerificationReport]:
    """P_i from (P_i)_ab = phi_a dL/du_b,i; checks D_i P_i = -Tr(L_i P_i) on solutions."""
    cd = CurrentDensity(current_matrices(fp))
    proj = OnShellProjector(fp, cfg)
    divP = sum_exprs(fp.D(P, i) for i, P in enumerate(cd.P))
    deviation = neg(sum_exprs(trace(matmul(fp.Lambdas[i].rows(), M)) for i, M in enumerate(cd.P_matrices)))
    report = VerificationReport()
    report.add(
        identity_check(
            "mu-conservation", "D_i P_i = -Tr(L_i P_i)", [(divP, deviation)], cfg, fp.params, proj, proj.extra_vars
        )
    )
    if fp.Gamma is not None:
        G = [list(r) for r in fp.Gamma]
        lhs = [[ZERO] * fp.n for _ in range(fp.n)]
        rhs = [[ZERO] * fp.n for _ in range(fp.n)]
        for i, M in enumerate(cd.P_matrices):
            GM = matmul(G, M)
            hat = [
                [add(fp.D(M[a][b], i), x) for b, x in enumerate(row)]
                for a, row in enumerate(matmul(fp.Lambdas[i].rows(), M))
            ]
            GH = matmul(G, hat)
            for a in range(fp.n):
                for b in range(fp.n):
                    lhs[a][b] = add(lhs[a][b], fp.D(GM[a][b], i))
                    rhs[a][b] = add(rhs[a][b], GH[a][b])
        pairs = [(lhs[a][b], rhs[a][b]) for a in range(fp.n) for b in range(fp.n)]
        report.add(
            identity_check("gauge form", "D_i(Gamma P_i) = Gamma D^_i P_i", pairs, cfg, fp.params)
        )
    report.note("P", cd.P)
    report.note("D_i P_i", divP)
    report.note("-Tr(L_i P_i)", deviation)
    report.note("on-shell targets", ", ".join(proj.targets))
    return cd, report


def current_density_second_order(fp: FieldProblem, cfg: SamplingConfig) -> tuple[CurrentDensity, VerificationReport]:
    """(P_i)_ab = phi_b dL/du_a,i + (D^_j phi)_b dL/du_a,ij - phi_b D_j dL/du_a,ij.

    A mixed symbol u_a,ij with i != j stands for both orderings, so the
    derivative of L with respect to one ordering is half the symbol derivative.
    Only the trace identity is verified.
    """
    if fp.xi is not None:
        raise ValueError("second-order currents are built for fields that do not move the x_i")
    n, s = fp.n, fp.s
    phi = list(fp.phi)

    def dL2(a: int, i: int, j: int) -> Expr:
        d = diff(fp.L, fp.du(a, i, j))
        return d if i == j else mul(as_expr(0.5), d)

    hat = [[add(fp.D(f, j), x) for f, x in zip(phi, fp.Lambdas[j].apply(phi))] for j in range(s)]
    mats = []
    for i in range(s):
        M = []
        for a in range(n):
            row = []
            for b in range(n):
                t = mul(phi[b], diff(fp.L, fp.du(a, i)))
                for j in range(s):
                    c = dL2(a, i, j)
                    t = add(t, sub(mul(hat[j][b], c), mul(phi[b], fp.D(c, j))))
                row.append(t)
            M.append(row)
        mats.append(M)
    cd = CurrentDensity(mats)
    expected = []
    for i in range(s):
        terms = []
        for a in range(n):
            terms.append(mul(phi[a], diff(fp.L, fp.du(a, i))))
            for j in range(s):
                c = dL2(a, i, j)
                terms.append(mul(hat[j][a], c))
                terms.append(neg(mul(phi[a], fp.D(c, j))))
        expected.append(sum_exprs(terms))
    report = VerificationReport()
    report.add(
        identity_check(
            "second-order trace identity",
            "Tr P_i = phi_a dL/du_a,i + (D^_j phi)_a dL/du_a,ij - phi_a D_j dL/du_a,ij",
            list(zip(cd.P, expected)),
            cfg,
            fp.params,
        )
    )
    report.note("P", cd.P)
    return cd, report


# -- gauge equivalence ----------------------------------------------------------


def gauge_equivalent_field(fp: FieldProblem, cfg: SamplingConfig) -> tuple[FieldProblem, VerificationReport]:
    """X~ = Gamma X, whose standard prolongation is Gamma times the mu-prolongation of X.

    Checked to first order. For one field the standard invariance of L under
    X~ and the standard conservation of P~ = gamma P are checked too.
    """
    if fp.Gamma is None:
        raise ValueError("a gauge factor Gamma is required")
    G = [list(r) for r in fp.Gamma]
    zero = tuple(LambdaMatrix.zero(fp.n) for _ in range(fp.s))
    if fp.xi is None:
        tilde = fp.with_(phi=tuple(matvec(G, list(fp.phi))), Lambdas=zero)
    else:
        g = G[0][0]
        tilde = fp.with_(phi=(mul(g, fp.phi[0]),), xi=tuple(mul(g, x) for x in fp.xi), Lambdas=zero)
    Psi = mu_prolongation(fp)
    Psi_t = mu_prolongation(tilde)
    pairs = []
    for i in range(fp.s):
        GPsi = matvec(G, Psi[i])
        pairs += list(zip(GPsi, Psi_t[i]))
    report = VerificationReport()
    report.add(
        identity_check("gauge-equivalent prolongation", "Gamma Psi_i = standard coefficient of X~", pairs, cfg, fp.params)
    )
    if fp.n == 1:
        report.add(
            identity_check("standard invariance of X~", "X~^(1) L = 0", [(invariance_expression(tilde), ZERO)], cfg, fp.params)
        )
        g = G[0][0]
        P = [trace(M) for M in current_matrices(fp)]
        Pt = [trace(M) for M in current_matrices(tilde)]
        report.add(identity_check("P~ = gamma P", "P~_i = gamma P_i", [(a, mul(g, b)) for a, b in zip(Pt, P)], cfg, fp.params))
        proj = OnShellProjector(fp, cfg)
        divPt = sum_exprs(fp.D(x, i) for i, x in enumerate(Pt))
        report.add(
            identity_check(
                "standard conservation",
                "D_i P~_i = 0",
                [(divPt, ZERO)],
                cfg,
                fp.params,
                proj,
                proj.extra_vars,
            )
        )
        report.note("P~", Pt)
    report.note("phi~", list(tilde.phi))
    if tilde.xi is not None:
        report.note("xi~", list(tilde.xi))
    return tilde, report
