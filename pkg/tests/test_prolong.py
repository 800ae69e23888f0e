import pytest
from hypothesis import given
from hypothesis import strategies as st

from lambdasym.prolong import (
    DimensionError,
    LambdaMatrix,
    Lambda_prolongation,
    VectorField,
    lambda_prolongation,
    standard_first_prolongation,
)
from lambdasym.symexpr import Const, SamplingConfig, SymbolTable, add, equiv, parse, sub

U = SymbolTable.for_time(["u1", "u2"], "t")
Q = SymbolTable.for_time(["q1", "q2"], "t")
Q1 = SymbolTable.for_time(["q"], "t")
ROT = VectorField((parse("u2", U), parse("-u1", U)))


def _same(a, b, cfg=None):
    return all(equiv(x, y, cfg).passed for x, y in zip(a, b, strict=True))


def _p(texts, table):
    return [parse(s, table) for s in texts]


def test_standard_prolongation_of_rotation():
    std = standard_first_prolongation(ROT, U)
    assert _same(std.dot_coefficients, _p(["du2", "-du1"], U))


def test_constant_field_has_zero_dot_coefficients():
    std = standard_first_prolongation(VectorField((Const(1), Const(0))), U)
    assert all(c == Const(0) for c in std.dot_coefficients)


def test_prolongation_of_example1_field():
    std = standard_first_prolongation(VectorField(_p(["q1", "1"], Q)), Q)
    assert _same(std.dot_coefficients, _p(["dq1", "0"], Q))


def test_lambda_prolongation_zero_is_standard():
    std = standard_first_prolongation(ROT, U)
    lam = lambda_prolongation(ROT, Const(0), U)
    assert lam.dot_coefficients == std.dot_coefficients


def test_lambda_prolongation_rotation():
    Xp = lambda_prolongation(ROT, parse("u2", U), U)
    assert _same(Xp.dot_coefficients, _p(["du2 + u2*u2", "-du1 - u2*u1"], U))


def test_lambda_prolongation_velocity_dependent():
    Xp = lambda_prolongation(VectorField((parse("q", Q1),)), parse("q + dq", Q1), Q1)
    assert _same(Xp.dot_coefficients, _p(["dq + (q + dq)*q"], Q1))


def test_Lambda_prolongation_example1_added_terms():
    X = VectorField(_p(["q1", "1"], Q))
    L = LambdaMatrix.diagonal(_p(["q1", "q1"], Q))
    std = standard_first_prolongation(X, Q)
    Xp = Lambda_prolongation(X, L, Q)
    added = [sub(a, b) for a, b in zip(Xp.dot_coefficients, std.dot_coefficients)]
    assert _same(added, _p(["q1*q1", "q1"], Q))


def test_Lambda_zero_is_standard_node_for_node():
    std = standard_first_prolongation(ROT, U)
    assert Lambda_prolongation(ROT, LambdaMatrix.zero(2), U).dot_coefficients == std.dot_coefficients


def test_scalar_Lambda_matches_lambda_prolongation():
    lam = parse("u1*u2 + t", U)
    a = Lambda_prolongation(ROT, LambdaMatrix.scalar(lam, 2), U)
    b = lambda_prolongation(ROT, lam, U)
    assert _same(a.dot_coefficients, b.dot_coefficients)


def test_apply_examples():
    Xp = standard_first_prolongation(ROT, U)
    assert Xp.apply(Const(3), U) == Const(0)
    assert equiv(Xp.apply(parse("u1^2 + u2^2"), U), Const(0)).passed


def test_apply_example1_lagrangian_vanishes():
    T = SymbolTable.for_time(["q1", "q2"], "t", max_order=2)
    L = parse("(dq1/q1 - q1)^2/2 + (dq1 - q1*dq2)^2*exp(-2*q2)/2 + q1*exp(-q2)", T)
    X = VectorField(_p(["q1", "1"], T))
    Xp = Lambda_prolongation(X, LambdaMatrix.diagonal(_p(["q1", "q1"], T)), T)
    assert equiv(Xp.apply(L, T), Const(0)).passed
    assert not equiv(standard_first_prolongation(X, T).apply(L, T), Const(0)).passed


def test_dimension_checks():
    with pytest.raises(DimensionError):
        Lambda_prolongation(ROT, LambdaMatrix.zero(3), U)
    with pytest.raises(DimensionError):
        LambdaMatrix(((Const(1), Const(2)),))
    with pytest.raises(DimensionError):
        VectorField((Const(1), Const(1)), tau=Const(1))


def test_tau_enters_single_equation_prolongation():
    X = VectorField((parse("q", Q1),), tau=parse("t", Q1))
    std = standard_first_prolongation(X, Q1)
    assert _same(std.dot_coefficients, _p(["dq - dq"], Q1))


_entries = st.sampled_from(["0", "1", "u1", "u2*t", "du1", "u1*du2"])


@given(st.lists(_entries, min_size=8, max_size=8))
def test_prolongation_is_linear_in_Lambda(ents):
    A = LambdaMatrix(tuple(tuple(parse(x, U) for x in ents[:4][2 * i : 2 * i + 2]) for i in range(2)))
    B = LambdaMatrix(tuple(tuple(parse(x, U) for x in ents[4:][2 * i : 2 * i + 2]) for i in range(2)))
    std = standard_first_prolongation(ROT, U).dot_coefficients
    ca = Lambda_prolongation(ROT, A, U).dot_coefficients
    cb = Lambda_prolongation(ROT, B, U).dot_coefficients
    cab = Lambda_prolongation(ROT, A + B, U).dot_coefficients
    # (std + A phi) + (std + B phi) = (std + (A + B) phi) + std
    cfg = SamplingConfig(n_samples=16)
    assert _same([add(x, y) for x, y in zip(ca, cb)], [add(x, y) for x, y in zip(cab, std)], cfg)
