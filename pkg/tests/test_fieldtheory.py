import pytest

from lambdasym.fieldtheory import (
    FieldProblem,
    OnShellProjector,
    SingularGammaError,
    check_compatibility,
    check_mu_invariance,
    current_density,
    current_density_second_order,
    euler_lagrange,
    gauge_equivalent_field,
    mu_prolongation,
    verify_gamma,
)
from lambdasym.prolong import DimensionError
from lambdasym.report import identity_check
from lambdasym.symexpr import Const, SamplingConfig, equiv, mul, neg, parse, sum_exprs

EX4_L = "(u_x^2 + u_y^2)/2 - (u_x*v_x + u_y*v_y)/u + u^2*exp(-2*v)"
EX4_LAMBDAS = [[["0", "0"], ["u_x", "0"]], [["0", "0"], ["u_y", "0"]]]
EX5_L = "x1^2*exp(-eps*x2)*u_x1^2/2 + exp(eps*x2)*u_x2^2/2"
BOXES5 = {"x1": (0.5, 2.0), "x2": (0.2, 1.5)}


def _ex4(**kw):
    args = dict(Lambdas=EX4_LAMBDAS, Gamma=[["1", "0"], ["u", "1"]])
    args.update(kw)
    return FieldProblem.build(EX4_L, ["x", "y"], ["u", "v"], ["u", "1"], **args)


def _ex5(eps, **kw):
    args = dict(Lambdas=[[["0"]], [["eps"]]], Gamma=[["exp(eps*x2)"]], xi=["0", "1"], params={"eps": eps})
    args.update(kw)
    return FieldProblem.build(EX5_L, ["x1", "x2"], ["u"], ["0"], **args)


@pytest.fixture
def cfg5():
    return SamplingConfig().with_boxes(BOXES5)


def test_compatibility_example4(cfg):
    fp = _ex4()
    assert check_compatibility(fp.Lambdas, fp.table, cfg).passed


@pytest.mark.parametrize("eps", [0.1, 1.0])
def test_compatibility_example5(eps, cfg5):
    fp = _ex5(eps)
    assert check_compatibility(fp.Lambdas, fp.table, cfg5).passed


def test_incompatible_pair(cfg):
    fp = _ex4(Lambdas=[[["0", "0"], ["u_x", "0"]], [["0", "0"], ["u_x", "0"]]], Gamma=None)
    assert not check_compatibility(fp.Lambdas, fp.table, cfg).passed


def test_gamma_examples(cfg, cfg5):
    fp = _ex4()
    assert verify_gamma(fp.Lambdas, fp.Gamma, fp.table, cfg).passed
    f5 = _ex5(0.1)
    assert verify_gamma(f5.Lambdas, f5.Gamma, f5.table, cfg5).passed
    assert not verify_gamma(fp.Lambdas, ((Const(1), Const(0)), (Const(0), Const(1))), fp.table, cfg).passed


def test_singular_gamma_rejected(cfg):
    fp = _ex4()
    with pytest.raises(SingularGammaError):
        verify_gamma(fp.Lambdas, ((Const(1), Const(1)), (Const(1), Const(1))), fp.table, cfg)


def test_mu_invariance(cfg, cfg5):
    assert check_mu_invariance(_ex4(), cfg).passed
    assert check_mu_invariance(_ex5(0.1), cfg5).passed


@pytest.mark.parametrize("eps", [0.1, 1.0])
def test_example5_not_invariant_without_Lambda(eps, cfg5):
    fp = _ex5(eps, Lambdas=[[["0"]], [["0"]]], Gamma=None)
    assert not check_mu_invariance(fp, cfg5).passed


def test_example4_current(cfg):
    fp = _ex4()
    cd, rep = current_density(fp, cfg)
    assert rep.passed
    want = [parse("u*u_x - v_x - u_x/u", fp.table), parse("u*u_y - v_y - u_y/u", fp.table)]
    assert all(equiv(a, b, cfg).passed for a, b in zip(cd.P, want))
    div = sum_exprs(fp.D(P, i) for i, P in enumerate(cd.P))
    proj = OnShellProjector(fp, cfg)
    chk = identity_check("div", "", [(div, parse("u_x^2 + u_y^2", fp.table))], cfg, None, proj, proj.extra_vars)
    assert chk.passed and chk.residual <= 1e-8
    # the identity holds only on solutions
    assert not equiv(div, parse("u_x^2 + u_y^2", fp.table), cfg).passed


@pytest.mark.parametrize("eps", [0.1, 1.0])
def test_example5_current(eps, cfg5):
    fp = _ex5(eps)
    cd, rep = current_density(fp, cfg5)
    assert rep.passed
    proj = OnShellProjector(fp, cfg5)
    div = sum_exprs(fp.D(P, i) for i, P in enumerate(cd.P))
    chk = identity_check("div", "", [(div, neg(mul(parse("eps", fp.table), cd.P[1])))], cfg5, fp.params, proj, proj.extra_vars)
    assert chk.passed and chk.residual <= 1e-8


@pytest.mark.parametrize("eps", [0.1, 1.0])
def test_example5_euler_lagrange(eps, cfg5):
    fp = _ex5(eps)
    (E,) = euler_lagrange(fp)
    shown = parse("x1^2*u_x1x1 + 2*x1*u_x1 + exp(2*eps*x2)*(u_x2x2 + eps*u_x2)", fp.table)
    assert equiv(mul(parse("exp(eps*x2)", fp.table), E), shown, cfg5, fp.params).passed


def test_exact_symmetry_current_is_conserved(cfg):
    fp = FieldProblem.build("(u_x^2 + u_y^2)/2", ["x", "y"], ["u"], ["1"], [[["0"]], [["0"]]])
    cd, rep = current_density(fp, cfg)
    assert rep.passed
    proj = OnShellProjector(fp, cfg)
    div = sum_exprs(fp.D(P, i) for i, P in enumerate(cd.P))
    assert identity_check("div", "", [(div, Const(0))], cfg, None, proj, proj.extra_vars).passed


def test_projector_targets():
    fp = _ex4()
    assert OnShellProjector(fp, SamplingConfig()).targets == ["u_yy", "v_yy"]


@pytest.mark.parametrize("eps", [0.1, 1.0])
def test_example5_gauge(eps, cfg5):
    fp = _ex5(eps)
    tilde, rep = gauge_equivalent_field(fp, cfg5)
    assert rep.passed, rep.to_text()
    assert equiv(tilde.xi[1], parse("exp(eps*x2)", fp.table), cfg5, fp.params).passed


def test_example4_gauge(cfg):
    fp = _ex4()
    tilde, rep = gauge_equivalent_field(fp, cfg)
    assert rep.passed
    want = [parse("u", fp.table), parse("u^2 + 1", fp.table)]
    assert all(equiv(a, b, cfg).passed for a, b in zip(tilde.phi, want))


def test_identity_gauge_gives_standard_prolongation(cfg):
    fp = FieldProblem.build("(u_x^2 + u_y^2)/2", ["x", "y"], ["u"], ["1"], [[["0"]], [["0"]]], Gamma=[["1"]])
    tilde, rep = gauge_equivalent_field(fp, cfg)
    assert rep.passed and tilde.phi == fp.phi
    assert mu_prolongation(tilde) == mu_prolongation(fp)


def test_second_order_current(cfg):
    fp = FieldProblem.build("u_xx^2/2", ["x"], ["u"], ["1"], [[["0"]]], order=2)
    cd, rep = current_density_second_order(fp, cfg)
    assert rep.passed and equiv(cd.P[0], parse("-u_xxx", fp.table), cfg).passed
    zero = fp.with_(phi=(Const(0),))
    assert equiv(current_density_second_order(zero, cfg)[0].P[0], Const(0), cfg).passed


def test_second_order_collapses_to_first(cfg):
    fp = FieldProblem.build("(u_x^2 + u_y^2)/2", ["x", "y"], ["u"], ["u"], [[["0"]], [["0"]]], order=2)
    cd2, rep = current_density_second_order(fp, cfg)
    cd1, _ = current_density(fp.with_(order=1), cfg)
    assert rep.passed and all(equiv(a, b, cfg).passed for a, b in zip(cd2.P, cd1.P))


def test_mixed_second_derivative_weighting(cfg):
    fp = FieldProblem.build("u_xy^2/2", ["x", "y"], ["u"], ["1"], [[["0"]], [["0"]]], order=2)
    cd, rep = current_density_second_order(fp, cfg)
    # dL/du_xy = u_xy counts for both orderings: P_x = -D_y(u_xy)/2
    assert rep.passed and equiv(cd.P[0], parse("-u_xyy/2", fp.table), cfg).passed


def test_shape_validation():
    with pytest.raises(DimensionError):
        FieldProblem.build(EX4_L, ["x", "y"], ["u", "v"], ["u"], EX4_LAMBDAS)
    with pytest.raises(DimensionError):
        FieldProblem.build(EX4_L, ["x", "y"], ["u", "v"], ["u", "1"], EX4_LAMBDAS[:1])
    with pytest.raises(DimensionError):
        FieldProblem.build(EX4_L, ["x", "y"], ["u", "v"], ["u", "1"], EX4_LAMBDAS, xi=["0", "1"])
