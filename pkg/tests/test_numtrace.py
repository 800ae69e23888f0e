import io
import math

import numpy as np
import pytest

from lambdasym import problem
from lambdasym.dynsys import DynamicalSystem
from lambdasym.numtrace import (
    DeviationCheck,
    NonFiniteStateError,
    check_deviation_law,
    deviation_residual,
    integrate,
    trace_quantity,
)
from lambdasym.symexpr import Const, SymbolTable, parse

X = SymbolTable.for_time(["x"], "t")
U = SymbolTable.for_time(["u1", "u2"], "t")
GROWTH = DynamicalSystem((parse("x", X),), X)
INTRO = DynamicalSystem((parse("u1*u2", U), parse("-u1^2", U)), U)


def test_exponential_growth():
    traj = integrate(GROWTH, [1.0], 0.0, 1e-3, 1000)
    assert traj.times[-1] == pytest.approx(1.0)
    assert abs(traj.column("x")[-1] - math.e) <= 1e-8


def test_radius_is_constant_on_intro_system():
    traj = integrate(INTRO, [1.0, 1.0], 0.0, 1e-3, 1000)
    r = np.hypot(traj.column("u1"), traj.column("u2"))
    assert np.max(np.abs(r - r[0])) <= 1e-8
    r2 = trace_quantity(traj, parse("u1^2 + u2^2", U))
    assert np.ptp(r2) <= 1e-8


def test_constant_quantity_is_constant_series():
    traj = integrate(INTRO, [1.0, 1.0], 0.0, 1e-2, 10)
    assert np.all(trace_quantity(traj, Const(2.5)) == 2.5)


def test_decay_law():
    G = SymbolTable.for_time(["G"], "t")
    traj = integrate(DynamicalSystem((parse("-G", G),), G), [1.0], 0.0, 1e-3, 1000)
    assert traj.column("G")[-1] == pytest.approx(math.exp(-1), abs=1e-10)


def test_integration_is_bit_reproducible():
    a = integrate(INTRO, [1.0, 0.3], 0.0, 1e-3, 200)
    b = integrate(INTRO, [1.0, 0.3], 0.0, 1e-3, 200)
    assert np.array_equal(a.states, b.states)


def test_blow_up_reports_step():
    blow = DynamicalSystem((parse("x^2", X),), X)
    with pytest.raises(NonFiniteStateError) as info:
        integrate(blow, [1.0], 0.0, 0.1, 100)
    assert 10 <= info.value.step <= 100


@pytest.mark.parametrize("h, n", [(0.0, 10), (-1e-3, 10), (1e-3, 0)])
def test_invalid_steps(h, n):
    with pytest.raises(ValueError):
        integrate(GROWTH, [1.0], 0.0, h, n)


def test_write_table():
    traj = integrate(GROWTH, [1.0], 0.0, 0.5, 2)
    buf = io.StringIO()
    traj.write(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t\tx"
    assert len(lines) == 4
    t, x = map(float, lines[-1].split("\t"))
    assert t == 1.0 and x == traj.states[-1, 0]


def _example(name):
    prob = problem.load(name)
    traj, rep = problem.trace(prob)
    return prob, traj, rep


def test_example1_deviation_law():
    prob, traj, rep = _example("example1")
    assert rep.passed and rep.checks[0].residual < 1e-5


def test_example1_G_matches_its_own_ode():
    # integrate dG/dt = -q1 G alongside the trajectory with the same RK4 grid
    prob, traj, _ = _example("example1")
    G = trace_quantity(traj, parse("q1*p1 + p2", prob.state_table))
    q1 = traj.column("q1")
    h = traj.h
    g = G[0]
    for k in range(traj.n_steps):
        # trapezoidal step on the sampled q1 is accurate to O(h^2)
        g *= math.exp(-0.5 * h * (q1[k] + q1[k + 1]))
    assert abs(g - G[-1]) <= 1e-6


def test_example3_deviation_law():
    _, _, rep = _example("example3")
    assert rep.passed


def test_conservation_law_check():
    traj = integrate(INTRO, [1.0, 1.0], 0.0, 1e-3, 1000)
    dc = DeviationCheck("r", parse("u1^2 + u2^2", U), Const(0), 1e-8)
    assert check_deviation_law(traj, dc).passed


def test_wrong_law_fails():
    traj = integrate(INTRO, [1.0, 1.0], 0.0, 1e-3, 1000)
    dc = DeviationCheck("bad", parse("u1", U), parse("u1", U))
    rep = check_deviation_law(traj, dc)
    assert not rep.passed and rep.checks[0].residual > 1e-2


def test_deviation_residual_needs_two_steps():
    traj = integrate(GROWTH, [1.0], 0.0, 1e-3, 1)
    with pytest.raises(ValueError):
        deviation_residual(traj, DeviationCheck("x", parse("x", X), parse("x", X)))


def test_reduced_equation_holds_only_on_the_particular_solution():
    # dq1 = q1 log q1 is satisfied by exp(c e^t) ...
    Q = SymbolTable.for_time(["q1"], "t")
    red = DynamicalSystem((parse("q1*log(q1)", Q),), Q)
    traj = integrate(red, [math.exp(0.5)], 0.0, 1e-3, 1000)
    exact = np.exp(0.5 * np.exp(traj.times))
    assert np.max(np.abs(traj.column("q1") - exact)) <= 1e-8
    # ... but a generic Hamiltonian trajectory of the full system violates it
    prob = problem.load("example2")
    full, _ = problem.trace(prob, x0=[1.5, 0.7, 0.4, 0.3])
    dc = DeviationCheck("reduced", parse("q1", prob.state_table), parse("q1*log(q1)", prob.state_table))
    assert deviation_residual(full, dc) > 1e-3
