"""Fixed-step RK4 trajectories and trajectory-level deviation checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .dynsys import DynamicalSystem
from .report import FAIL, PASS, Check, VerificationReport
from .symexpr import Compiled, Expr, as_expr


class NonFiniteStateError(ArithmeticError):
    def __init__(self, step: int):
        self.step = step
        super().__init__(f"state became non-finite at step {step}")


@dataclass(frozen=True)
class Trajectory:
    t0: float
    h: float
    states: np.ndarray  # (N + 1) x m
    names: tuple[str, ...]
    time_var: str = "t"

    @property
    def n_steps(self) -> int:
        return len(self.states) - 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(len(self.states))

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.names.index(name)]

    def write(self, out: TextIO) -> None:
        """Tab-separated table: t then the states, 17 significant digits."""
        out.write("\t".join((self.time_var,) + self.names) + "\n")
        for t, row in zip(self.times, self.states):
            out.write("\t".join(f"{v:.17g}" for v in (t, *row)) + "\n")


def _rhs(ds: DynamicalSystem):
    comp = Compiled(list(ds.f), [ds.time] + list(ds.states) + list(ds.table.params))
    pvals = list(ds.table.params.values())

    def f(t: float, x: np.ndarray) -> np.ndarray:
        return np.array([float(v) for v in comp(t, *x, *pvals)])

    return f


def integrate(ds: DynamicalSystem, x0: Sequence[float], t0: float, h: float, n_steps: int) -> Trajectory:
    """Classical fourth-order Runge-Kutta with a fixed step."""
    if h <= 0:
        raise ValueError("step h must be positive")
    if n_steps < 1:
        raise ValueError("at least one step is required")
    x = np.asarray(x0, dtype=float)
    if x.shape != (ds.m,):
        raise ValueError(f"initial state needs {ds.m} components, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteStateError(0)
    f = _rhs(ds)
    out = np.empty((n_steps + 1, ds.m))
    out[0] = x
    for k in range(n_steps):
        t = t0 + k * h
        k1 = f(t, x)
        k2 = f(t + h / 2, x + h / 2 * k1)
        k3 = f(t + h / 2, x + h / 2 * k2)
        k4 = f(t + h, x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise NonFiniteStateError(k + 1)
        out[k + 1] = x
    return Trajectory(float(t0), float(h), out, tuple(ds.states), ds.time)


def trace_quantity(traj: Trajectory, e: Expr, params=None) -> np.ndarray:
    """Evaluate e(t, states) at every grid point."""
    params = dict(params or {})
    comp = Compiled([as_expr(e)], [traj.time_var, *traj.names, *params])
    n = len(traj.states)
    args = [traj.times] + [traj.states[:, i] for i in range(len(traj.names))]
    args += [np.full(n, v) for v in params.values()]
    vals = np.broadcast_to(np.asarray(comp(*args)[0], dtype=float), (n,)).copy()
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        raise NonFiniteStateError(int(bad[0]))
    return vals


@dataclass(frozen=True)
class DeviationCheck:
    name: str
    quantity: Expr
    rhs: Expr
    tolerance: float = 1e-5


def deviation_residual(traj: Trajectory, dc: DeviationCheck, params=None) -> float:
    """max over interior points of |centered difference of the quantity - rhs|."""
    if traj.n_steps < 2:
        raise ValueError("centered differences need at least two steps")
    q = trace_quantity(traj, dc.quantity, params)
    r = trace_quantity(traj, dc.rhs, params)
    dq = (q[2:] - q[:-2]) / (2 * traj.h)
    return float(np.max(np.abs(dq - r[1:-1])))


def check_deviation_law(traj: Trajectory, dc: DeviationCheck, params=None) -> VerificationReport:
    report = VerificationReport()
    anchor = f"d/dt {dc.quantity} = {dc.rhs}"
    try:
        res = deviation_residual(traj, dc, params)
    except NonFiniteStateError as exc:
        report.add(Check(dc.name, anchor, FAIL, float("inf"), None, str(exc)))
        return report
    report.add(Check(dc.name, anchor, PASS if res <= dc.tolerance else FAIL, res, None,
                     f"tolerance {dc.tolerance:g}, h = {traj.h:g}"))
    return report
