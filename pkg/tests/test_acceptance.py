"""Acceptance criteria 1-7, each at its stated tolerance."""

import math

import numpy as np

from acceptance_log import criterion
from corpus import CORPUS
from fixtures_util import FIXTURES, MUTATIONS, edited
from lambdasym import problem
from lambdasym.dynsys import CoordinateMap, DynamicalSystem, check_Lambda_symmetry, transform_ds
from lambdasym.fieldtheory import (
    FieldProblem,
    OnShellProjector,
    check_compatibility,
    check_mu_invariance,
    current_density,
    euler_lagrange,
    gauge_equivalent_field,
    verify_gamma,
)
from lambdasym.hamiltonian import find_generating_function, onshell_time_derivative
from lambdasym.lagrangian import (
    Lagrangian,
    ReductionInput,
    check_Lambda_invariance,
    check_uniform_factor,
    noether_charge,
    onshell_accelerations,
    partial_reduction,
    theorem4_pipeline,
)
from lambdasym.numtrace import DeviationCheck, deviation_residual, integrate
from lambdasym.prolong import LambdaMatrix, Lambda_prolongation, VectorField, standard_first_prolongation
from lambdasym.report import identity_check
from lambdasym.symexpr import (
    Const,
    SamplingConfig,
    SymbolTable,
    diff,
    equiv,
    evaluate,
    free_symbols,
    mul,
    neg,
    parse,
    substitute,
    sum_exprs,
)

CFG = SamplingConfig(seed=0, n_samples=64, rel_tol=1e-9, abs_tol=1e-9)
PH2 = SymbolTable.for_time(["q1", "q2", "p1", "p2"], "t")
PH1 = SymbolTable.for_time(["q", "p"], "t")


def _ok(rep, tol=1e-9):
    assert rep.passed, rep.to_text()
    assert all(c.residual <= tol for c in rep.checks if c.verdict == "PASS"), rep.to_text()


def _p(texts, table):
    return [parse(s, table) for s in texts]


def test_criterion_1_intro_system():
    with criterion(1, "intro system: lambda = u2, W = 0, Z = r cos z, r conserved to 1e-8"):
        U = SymbolTable.for_time(["u1", "u2"], "t")
        ds = DynamicalSystem(tuple(_p(["u1*u2", "-u1^2"], U)), U)
        X = VectorField(tuple(_p(["u2", "-u1"], U)))
        _ok(check_Lambda_symmetry(ds, X, LambdaMatrix.scalar(parse("u2", U), 2), CFG))
        assert CFG.n_samples == 64
        prob = problem.load("intro_ds")
        rep = problem.verify(prob)
        _ok(rep)
        RC = SymbolTable.for_time(["r", "z"], "t")
        chart = CoordinateMap(("r",), (parse("sqrt(u1^2 + u2^2)", U),), "z", tuple(_p(["r*cos(z)", "-r*sin(z)"], RC)))
        W, Z = transform_ds(ds, chart)
        cfg_rc = CFG.with_boxes({"z": (0.2, 1.4)})
        assert equiv(W[0], Const(0), cfg_rc).passed
        assert equiv(Z, parse("r*cos(z)", RC), cfg_rc).passed
        traj = integrate(ds, [1.0, 1.0], 0.0, 1e-3, 1000)
        r = np.hypot(traj.column("u1"), traj.column("u2"))
        assert traj.times[-1] == 1.0 and np.max(np.abs(r - r[0])) <= 1e-8


def test_criterion_2_example1():
    with criterion(2, "Example 1: pipeline, psi = (-p1, 0), G = q1 p1 + p2, D_t G = -q1 G"):
        lag = Lagrangian.build("(dq1/q1 - q1)^2/2 + (dq1 - q1*dq2)^2*exp(-2*q2)/2 + q1*exp(-q2)", ["q1", "q2"])
        X = VectorField(tuple(_p(["q1", "1"], lag.table)))
        LL = LambdaMatrix.diagonal(_p(["q1", "q1"], lag.table))
        res = theorem4_pipeline(lag, X, LL, LambdaMatrix.diagonal(_p(["q1", "0"], lag.table)), CFG)
        _ok(res.report)
        for name in ("Legendre round trip p", "Legendre round trip dq", "Lambda_2 constraint", "Hamiltonian determining equations"):
            chk = res.report.get(name)
            assert chk.passed and chk.residual <= 1e-9
        assert all(equiv(a, b, CFG).passed for a, b in zip(res.X_H.phi, _p(["q1", "1", "-p1", "0"], PH2)))
        assert res.route == "generating function"
        G = parse("q1*p1 + p2", PH2)
        assert equiv(res.G, G, CFG).passed
        DtG = onshell_time_derivative(res.G, res.hamiltonian)
        chk = identity_check("D_t G", "", [(DtG, neg(mul(parse("q1"), G)))], CFG)
        assert chk.passed and chk.residual <= 1e-9
        traj, rep = problem.trace(problem.load("example1"), h=1e-3, steps=1000)
        assert rep.passed and rep.checks[0].residual < 1e-5


def test_criterion_3_example2():
    with criterion(3, "Example 2: D_t P = -P, Lambda_H = I4, reduced equation, particular solution, reduced flow"):
        lag = Lagrangian.build(
            "(dq1/q1 - log(q1))^2/2 + (dq1/q1 + dq2/q2)^2/2", ["q1", "q2"], extra=("w", "dw", "zeta")
        )
        X = VectorField(tuple(_p(["q1", "-q2"], lag.table)))
        I = LambdaMatrix.diagonal([1, 1])
        _ok(check_Lambda_invariance(lag, X, I, CFG))
        charge, rep = noether_charge(lag, X, I, CFG)
        _ok(rep)
        DtP = substitute(lag.D(charge.P), onshell_accelerations(lag, CFG))
        assert equiv(DtP, neg(charge.P), CFG).passed
        res = theorem4_pipeline(lag, X, I, I, CFG)
        _ok(res.report)
        assert all(
            equiv(res.Lambda_H.entries[i][j], Const(float(i == j)), CFG).passed for i in range(4) for j in range(4)
        )
        _ok(check_uniform_factor(I, X, 1.0, CFG, {}, res.Lambda_H, res.X_H))
        t = lag.table
        red = ReductionInput(
            ("w",), (parse("q1*q2", t),), "zeta", parse("dq1/q1 - log(q1)", t), parse("zeta^2/2 + (dw/w)^2/2", t)
        )
        pr = partial_reduction(lag, X, I, red, CFG)
        _ok(pr.report)
        var, rhs = pr.explicit
        assert var == "dq1" and equiv(rhs, parse("q1*log(q1)"), CFG).passed
        for c in (0.5, 1.0):
            for tt in np.linspace(0.0, 1.0, 11):
                q1 = math.exp(c * math.exp(tt))
                dq1 = c * math.exp(tt) * q1
                assert abs(dq1 - evaluate(rhs, {"q1": q1})) <= 1e-8 * max(1.0, abs(dq1))
        # reduced flow in (w1, w2, w3, z), plus G = w2 - w3 decaying
        rep = problem.verify(problem.load("example2"))
        _ok(rep)
        for name in ("expected W", "expected Z", "separated equation"):
            assert rep.get(name).passed and rep.get(name).residual <= 1e-9


def test_criterion_4_example3():
    with criterion(4, "Example 3: psi = -qp - p, S = -q, case (ii), no generating function"):
        lag = Lagrangian.build("(dq/q + 1)^2*exp(-2*q)/2", ["q"])
        X = VectorField((parse("q", lag.table),))
        LL = LambdaMatrix(((parse("q + dq", lag.table),),))
        res = theorem4_pipeline(lag, X, LL, LL, CFG)
        _ok(res.report)
        assert equiv(res.X_H.phi[1], parse("-q*p - p", PH1), CFG).passed
        assert equiv(res.S, parse("-q"), CFG).passed
        assert res.report.get("Lambda-constant of motion S").residual <= 1e-9
        found = find_generating_function(res.X_H, PH1, CFG)
        assert not found.exists
        assert found.report.get("exactness").witness is not None


EX4 = "(u_x^2 + u_y^2)/2 - (u_x*v_x + u_y*v_y)/u + u^2*exp(-2*v)"


def test_criterion_5_example4():
    with criterion(5, "Example 4: compatibility, Gamma, mu-invariance, D_i P_i = u_x^2 + u_y^2 on shell"):
        fp = FieldProblem.build(
            EX4, ["x", "y"], ["u", "v"], ["u", "1"],
            [[["0", "0"], ["u_x", "0"]], [["0", "0"], ["u_y", "0"]]], Gamma=[["1", "0"], ["u", "1"]],
        )
        _ok(check_compatibility(fp.Lambdas, fp.table, CFG))
        _ok(verify_gamma(fp.Lambdas, fp.Gamma, fp.table, CFG))
        _ok(check_mu_invariance(fp, CFG))
        cd, rep = current_density(fp, CFG)
        _ok(rep, 1e-8)
        proj = OnShellProjector(fp, CFG)
        div = sum_exprs(fp.D(P, i) for i, P in enumerate(cd.P))
        chk = identity_check("div", "", [(div, parse("u_x^2 + u_y^2", fp.table))], CFG, None, proj, proj.extra_vars)
        assert chk.passed and chk.residual <= 1e-8


def test_criterion_6_example5():
    with criterion(6, "Example 5: mu-invariance, D_i P_i = -eps P_2, gauge conservation, EL equation (eps = 0.1, 1)"):
        cfg = CFG.with_boxes({"x1": (0.5, 2.0), "x2": (0.2, 1.5)})
        for eps in (0.1, 1.0):
            fp = FieldProblem.build(
                "x1^2*exp(-eps*x2)*u_x1^2/2 + exp(eps*x2)*u_x2^2/2", ["x1", "x2"], ["u"], ["0"],
                [[["0"]], [["eps"]]], Gamma=[["exp(eps*x2)"]], xi=["0", "1"], params={"eps": eps},
            )
            _ok(check_mu_invariance(fp, cfg))
            cd, rep = current_density(fp, cfg)
            _ok(rep, 1e-8)
            proj = OnShellProjector(fp, cfg)
            div = sum_exprs(fp.D(P, i) for i, P in enumerate(cd.P))
            chk = identity_check("div", "", [(div, neg(mul(Const(eps), cd.P[1])))], cfg, fp.params, proj, proj.extra_vars)
            assert chk.passed and chk.residual <= 1e-8
            tilde, grep = gauge_equivalent_field(fp, cfg)
            _ok(grep, 1e-8)
            assert equiv(tilde.xi[1], parse("exp(eps*x2)", fp.table), cfg, fp.params).passed
            assert grep.get("standard conservation").residual <= 1e-8
            (E,) = euler_lagrange(fp)
            shown = parse("x1^2*u_x1x1 + 2*x1*u_x1 + exp(2*eps*x2)*(u_x2x2 + eps*u_x2)", fp.table)
            assert equiv(mul(parse("exp(eps*x2)", fp.table), E), shown, cfg, fp.params).passed


def test_criterion_7_properties(tmp_path):
    with criterion(7, "properties: Lambda = 0 degeneration, diff vs finite differences, mutation, h-halving, determinism"):
        # Lambda = 0 gives the standard prolongation on every time fixture
        for states, phi in [(["u1", "u2"], ["u2", "-u1"]), (["q1", "q2"], ["q1", "1"]), (["q1", "q2"], ["q1", "-q2"]), (["q"], ["q"])]:
            t = SymbolTable.for_time(states, "t", max_order=2)
            X = VectorField(tuple(_p(phi, t)))
            assert Lambda_prolongation(X, LambdaMatrix.zero(len(states)), t).dot_coefficients == (
                standard_first_prolongation(X, t).dot_coefficients
            )
        # derivatives against central differences
        rng = np.random.default_rng(0)
        for e in CORPUS:
            names = sorted(free_symbols(e))
            for _ in range(10):
                pt = {n: float(rng.uniform(0.3, 1.5)) for n in names}
                for v in names:
                    hi, lo = dict(pt), dict(pt)
                    hi[v] += 1e-6
                    lo[v] -= 1e-6
                    fd = (evaluate(e, hi) - evaluate(e, lo)) / 2e-6
                    exact = evaluate(diff(e, v), pt)
                    assert abs(exact - fd) <= 1e-5 * max(1.0, abs(exact))
        # every fixture passes, and a single-entry Lambda mutation makes it fail
        for name in FIXTURES:
            first = problem.verify(problem.load(name)).to_json()
            assert problem.verify(problem.load(name)).to_json() == first
            assert '"overall": "PASS"' in first
            mutated = problem.verify(problem.load(edited(tmp_path, name, *MUTATIONS[name])))
            assert not mutated.passed, name
        # halving the step improves the deviation residual at least 3.5x
        for name in ("example1", "example2", "example3"):
            prob = problem.load(name)
            coarse, _ = problem.trace(prob, h=2e-3, steps=500)
            fine, _ = problem.trace(prob, h=1e-3, steps=1000)
            for dc in prob.trace.deviations:
                assert deviation_residual(coarse, dc) / deviation_residual(fine, dc) >= 3.5
        prob = problem.load("intro_ds")
        law = DeviationCheck("u1", parse("u1", prob.state_table), parse("u1*u2", prob.state_table))
        coarse, _ = problem.trace(prob, h=2e-3, steps=500)
        fine, _ = problem.trace(prob, h=1e-3, steps=1000)
        assert deviation_residual(coarse, law) / deviation_residual(fine, law) >= 3.5
