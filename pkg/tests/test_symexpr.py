import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from corpus import CORPUS, CORPUS_TABLE
from lambdasym.dynsys import DynamicalSystem
from lambdasym.symexpr import (
    BinOp,
    Const,
    ExprSyntaxError,
    Func,
    SamplingConfig,
    Sym,
    SymbolTable,
    SymbolTableError,
    UnknownSymbolError,
    add,
    diff,
    equiv,
    evaluate,
    formal_total_derivative,
    free_symbols,
    mul,
    onshell_substitute,
    parse,
    to_string,
)


# -- symbol tables ---------------------------------------------------------------


def test_time_table_names():
    t = SymbolTable.for_time(["q1", "q2"], "t", max_order=2)
    assert t.dot("q1") == "dq1" and t.dot("q2", 2) == "ddq2"
    assert t.decompose("ddq1") == ("q1", ("t", "t"))
    assert t.order("dq2") == 1


def test_field_table_mixed_derivatives_are_symmetrized():
    t = SymbolTable.for_fields(["x", "y"], ["u", "v"], max_order=2)
    assert t.derivative("u", "y", "x") == t.derivative("u", "x", "y") == "u_xy"
    assert t.decompose("v_yy") == ("v", ("y", "y"))


@pytest.mark.parametrize("states", [["q", "q"], ["1q"], [""], ["t"]])
def test_bad_declarations_rejected(states):
    with pytest.raises(SymbolTableError):
        SymbolTable.for_time(states, "t")


# -- parsing and printing --------------------------------------------------------


def test_parse_product():
    e = parse("u1*u2")
    assert isinstance(e, BinOp) and e.op == "*"
    assert (e.left, e.right) == (Sym("u1"), Sym("u2"))


def test_parse_lagrangian_term():
    t = SymbolTable.for_time(["q1"], "t")
    e = parse("(dq1/q1 - q1)^2 / 2", t)
    assert free_symbols(e) == {"dq1", "q1"}
    assert evaluate(e, {"q1": 2.0, "dq1": 6.0}) == pytest.approx(0.5)


def test_parse_nested_exp():
    e = parse("exp(c*exp(t))")
    assert isinstance(e, Func) and e.name == "exp" and isinstance(e.arg, BinOp)
    assert evaluate(e, {"c": 1.0, "t": 0.0}) == pytest.approx(math.e, abs=1e-9)


def test_unknown_symbol_reports_position():
    with pytest.raises(UnknownSymbolError) as info:
        parse("q1 + qq", SymbolTable.for_time(["q1"], "t"))
    assert info.value.name == "qq" and info.value.pos == 5


@pytest.mark.parametrize("text", ["1 +", "(q1", "q1 q2", "exp()", "2 ** 3", "foo(1)"])
def test_syntax_errors(text):
    with pytest.raises((ExprSyntaxError, UnknownSymbolError)):
        parse(text)


def test_unary_minus_binds_looser_than_power():
    assert evaluate(parse("-2^2"), {}) == -4.0


_names = st.sampled_from(["q1", "q2", "p1", "dq1", "t"])
_leaves = st.one_of(_names.map(Sym), st.integers(-5, 9).map(lambda v: Const(v)))


def _trees(children):
    ops = st.sampled_from(["+", "-", "*", "/", "^"])
    return st.one_of(
        st.builds(BinOp, ops, children, children),
        st.builds(Func, st.sampled_from(["exp", "sin", "log", "sqrt"]), children),
    )


exprs = st.recursive(_leaves, _trees, max_leaves=12)


@given(exprs)
def test_print_parse_round_trip(e):
    s = to_string(e)
    assert to_string(parse(s)) == s


# -- differentiation -------------------------------------------------------------


def test_diff_square():
    assert equiv(diff(parse("u1^2"), "u1"), parse("2*u1")).passed


def test_diff_lagrangian_velocity_derivative(cfg):
    t = SymbolTable.for_time(["q"], "t")
    got = diff(parse("(dq/q + 1)^2*exp(-2*q)/2", t), "dq")
    assert equiv(got, parse("(dq/q + 1)*exp(-2*q)/q", t), cfg).passed


def test_diff_of_unrelated_symbol_is_zero():
    assert diff(parse("exp(t)"), "u1") == Const(0)


def _finite_difference(e, v, point, step=1e-6):
    hi, lo = dict(point), dict(point)
    hi[v] += step
    lo[v] -= step
    return (evaluate(e, hi) - evaluate(e, lo)) / (2 * step)


@pytest.mark.parametrize("e", CORPUS, ids=lambda e: to_string(e)[:30])
def test_diff_matches_finite_differences(e):
    rng = np.random.default_rng(7)
    names = sorted(free_symbols(e))
    for _ in range(10):
        point = {n: float(rng.uniform(0.3, 1.5)) for n in names}
        for v in names:
            exact = evaluate(diff(e, v), point)
            approx = _finite_difference(e, v, point)
            assert abs(exact - approx) <= 1e-5 * max(1.0, abs(exact)), (v, point)


# -- total derivatives and on-shell substitution ---------------------------------

TIME = SymbolTable.for_time(["q1", "p1"], "t", max_order=2)


def test_total_derivative_basics():
    assert formal_total_derivative(Sym("q1"), "t", TIME) == Sym("dq1")
    got = formal_total_derivative(parse("q1*p1", TIME), "t", TIME)
    assert equiv(got, parse("dq1*p1 + q1*dp1", TIME)).passed


def test_total_derivative_field():
    t = SymbolTable.for_fields(["x", "y"], ["u"], max_order=2)
    got = formal_total_derivative(parse("u*u_x", t), "x", t)
    assert equiv(got, parse("u_x^2 + u*u_xx", t)).passed


def test_total_derivative_field_by_finite_differences():
    # u(x, y) = sin(x) * exp(y): compare D_x(u u_x) with a numeric x-derivative
    t = SymbolTable.for_fields(["x", "y"], ["u"], max_order=2)
    D = formal_total_derivative(parse("u*u_x", t), "x", t)
    field = {
        "u": lambda x, y: math.sin(x) * math.exp(y),
        "u_x": lambda x, y: math.cos(x) * math.exp(y),
        "u_xx": lambda x, y: -math.sin(x) * math.exp(y),
    }
    x, y, h = 0.7, 0.3, 1e-6
    g = lambda x: field["u"](x, y) * field["u_x"](x, y)  # noqa: E731
    point = {k: f(x, y) for k, f in field.items()}
    assert evaluate(D, point) == pytest.approx((g(x + h) - g(x - h)) / (2 * h), rel=1e-6)


@given(st.sampled_from(CORPUS), st.sampled_from(CORPUS))
def test_leibniz_rule(f, g):
    t = CORPUS_TABLE
    lhs = formal_total_derivative(mul(f, g), "t", t)
    rhs = add(mul(formal_total_derivative(f, "t", t), g), mul(f, formal_total_derivative(g, "t", t)))
    assert equiv(lhs, rhs, SamplingConfig(n_samples=16, box=(0.3, 1.5))).passed


INTRO = SymbolTable.for_time(["u1", "u2"], "t")
INTRO_DS = DynamicalSystem((parse("u1*u2", INTRO), parse("-u1^2", INTRO)), INTRO)


def test_onshell_substitution():
    assert onshell_substitute(Sym("du1"), INTRO_DS) == parse("u1*u2")
    e = parse("u1 + sin(u2)")
    assert onshell_substitute(e, INTRO_DS) is e or onshell_substitute(e, INTRO_DS) == e
    r2 = formal_total_derivative(parse("u1^2 + u2^2", INTRO), "t", INTRO)
    assert equiv(onshell_substitute(r2, INTRO_DS), Const(0)).passed


@given(st.floats(0.2, 2.0), st.floats(0.2, 2.0), st.floats(0.2, 2.0))
def test_onshell_commutes_with_evaluation(a, b, t):
    e = parse("du1*u2 - du2^2 + t*du1", INTRO)
    point = {"u1": a, "u2": b, "t": t}
    extended = dict(point, du1=a * b, du2=-a * a)
    assert evaluate(onshell_substitute(e, INTRO_DS), point) == evaluate(e, extended)


# -- sampling oracle and evaluation ----------------------------------------------


def test_equiv_trig_identity():
    assert equiv(parse("sin(t)^2 + cos(t)^2"), Const(1)).passed


def test_equiv_detects_small_offset():
    r = equiv(parse("u1"), parse("u1 + 0.001"))
    assert not r.passed
    assert r.residual == pytest.approx(1e-3, rel=1e-6)
    assert set(r.witness) == {"u1"}


def test_equiv_is_deterministic(cfg):
    a, b = parse("exp(u1)*u2"), parse("exp(u1)*u2*(1 + 1e-7)")
    r1, r2 = equiv(a, b, cfg), equiv(a, b, cfg)
    assert r1 == r2


def test_evaluate_values():
    assert evaluate(parse("u1*u2"), {"u1": 2, "u2": 3}) == 6
    assert not math.isfinite(evaluate(parse("log(q1)"), {"q1": 0.0}))


@pytest.mark.parametrize(
    "kw",
    [{"n_samples": 0}, {"rel_tol": 0.0}, {"abs_tol": -1.0}, {"box": (1.0, 1.0)}],
)
def test_sampling_config_validation(kw):
    with pytest.raises(ValueError):
        SamplingConfig(**kw)
