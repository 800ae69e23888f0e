"""Declarative problem files (TOML) and the pipelines they drive.

Every expression is parsed while loading, so malformed input is reported
with its location before any check runs.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import fieldtheory as ft
from . import hamiltonian as ham
from . import lagrangian as lg
from .dynsys import (
    CoordinateMap,
    DynamicalSystem,
    check_Lambda_symmetry,
    reduction_profile,
    verify_adapted_coordinates,
)
from .numtrace import DeviationCheck, NonFiniteStateError, Trajectory, check_deviation_law, integrate
from .prolong import DimensionError, LambdaMatrix, VectorField
from .report import FAIL, PASS, Check, VerificationReport, identity_check
from .symexpr import (
    ExprSyntaxError,
    SamplingConfig,
    SymbolTable,
    SymbolTableError,
    UnknownSymbolError,
    as_expr,
    mul,
    parse,
    substitute,
    sum_exprs,
    trace as mtrace,
)

KINDS = ("dynamical_system", "lagrangian", "hamiltonian", "field")
FIXTURES = ("intro_ds", "example1", "example2", "example3", "example4", "example5")


class ProblemError(ValueError):
    """Invalid problem file; the message names the file and the offending key."""


# -- locating and reading ------------------------------------------------------


def resolve(name: str) -> tuple[str, str]:
    """Return (label, TOML text) for a path or the name of a bundled fixture."""
    p = Path(name)
    if p.is_file():
        return str(p), p.read_text(encoding="utf-8")
    stem = p.name[:-5] if p.name.endswith(".toml") else p.name
    if stem in FIXTURES and not p.exists():
        res = resources.files("lambdasym") / "fixtures" / f"{stem}.toml"
        return f"<fixture {stem}>", res.read_text(encoding="utf-8")
    raise ProblemError(f"{name}: no such file (bundled fixtures: {', '.join(FIXTURES)})")


class _Reader:
    """Typed access to the raw TOML tree with located error messages."""

    def __init__(self, label: str, data: dict):
        self.label = label
        self.data = data

    def fail(self, where: str, msg: str):
        raise ProblemError(f"{self.label}: {where}: {msg}")

    def section(self, *path: str, required: bool = True) -> dict | None:
        node: Any = self.data
        for k in path:
            if not isinstance(node, dict) or k not in node:
                if required:
                    self.fail("[" + ".".join(path) + "]", "missing section")
                return None
            node = node[k]
        if not isinstance(node, dict):
            self.fail("[" + ".".join(path) + "]", "expected a table")
        return node

    def get(self, sec: dict, where: str, key: str, typ, default=...):
        if key not in sec:
            if default is ...:
                self.fail(f"{where}.{key}", "missing key")
            return default
        val = sec[key]
        if typ is float and isinstance(val, int) and not isinstance(val, bool):
            val = float(val)
        if not isinstance(val, typ) or (typ is int and isinstance(val, bool)):
            name = typ.__name__ if isinstance(typ, type) else "/".join(t.__name__ for t in typ)
            self.fail(f"{where}.{key}", f"expected {name}, got {type(val).__name__}")
        return val

    def names(self, sec: dict, where: str, key: str, default=...) -> list[str]:
        val = self.get(sec, where, key, list, default)
        if val is None:
            return val
        if not all(isinstance(x, str) for x in val):
            self.fail(f"{where}.{key}", "expected a list of names")
        return list(val)

    def expr(self, text, where: str, table: SymbolTable):
        if isinstance(text, (int, float)) and not isinstance(text, bool):
            return as_expr(float(text))
        if not isinstance(text, str):
            self.fail(where, f"expected an expression string, got {type(text).__name__}")
        try:
            return parse(text, table)
        except ExprSyntaxError as exc:
            self.fail(where, f"{exc} (column {exc.pos + 1})")
        except UnknownSymbolError as exc:
            self.fail(where, f"{exc} in {text!r}")

    def exprs(self, sec: dict, where: str, key: str, table: SymbolTable, n: int | None = None, default=...):
        val = self.get(sec, where, key, list, default)
        if val is None:
            return None
        if n is not None and len(val) != n:
            self.fail(f"{where}.{key}", f"expected {n} entries, got {len(val)}")
        return [self.expr(x, f"{where}.{key}[{i}]", table) for i, x in enumerate(val)]

    def matrix(self, sec: dict, where: str, key: str, table: SymbolTable, n: int, default=...):
        val = self.get(sec, where, key, list, default)
        if val is None:
            return None
        if len(val) != n or not all(isinstance(r, list) and len(r) == n for r in val):
            self.fail(f"{where}.{key}", f"expected a {n}x{n} matrix (list of {n} rows)")
        return [[self.expr(x, f"{where}.{key}[{i}][{j}]", table) for j, x in enumerate(r)] for i, r in enumerate(val)]


def _sampling(rd: _Reader, seed=None, samples=None, tol=None) -> SamplingConfig:
    sec = rd.section("sampling", required=False) or {}
    w = "[sampling]"
    cfg = SamplingConfig(
        seed=rd.get(sec, w, "seed", int, 0),
        n_samples=rd.get(sec, w, "samples", int, 64),
        rel_tol=rd.get(sec, w, "rel_tol", float, 1e-9),
        abs_tol=rd.get(sec, w, "abs_tol", float, 1e-9),
    )
    box = rd.get(sec, w, "box", list, None)
    if box is not None:
        cfg = cfg.replace(box=_interval(rd, f"{w}.box", box))
    boxes = rd.get(sec, w, "boxes", dict, {})
    cfg = cfg.with_boxes({k: _interval(rd, f"{w}.boxes.{k}", v) for k, v in boxes.items()})
    over = {}
    if seed is not None:
        over["seed"] = seed
    if samples is not None:
        if samples < 1:
            raise ProblemError("--samples must be positive")
        over["n_samples"] = samples
    if tol is not None:
        if tol <= 0:
            raise ProblemError("--tol must be positive")
        over["rel_tol"] = over["abs_tol"] = tol
    return cfg.replace(**over) if over else cfg


def _interval(rd: _Reader, where: str, v) -> tuple[float, float]:
    if not (isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v)) or not v[0] < v[1]:
        rd.fail(where, "expected [lo, hi] with lo < hi")
    return float(v[0]), float(v[1])


# -- problem objects -------------------------------------------------------------


@dataclass
class TraceSettings:
    t0: float = 0.0
    h: float = 1e-3
    steps: int = 1000
    x0: list[float] | None = None
    deviations: list[DeviationCheck] = field(default_factory=list)


@dataclass
class Problem:
    name: str
    kind: str
    cfg: SamplingConfig
    run: Callable[[], VerificationReport]
    system: Callable[[], DynamicalSystem] | None
    trace: TraceSettings
    state_table: SymbolTable | None = None


def load(name: str, seed: int | None = None, samples: int | None = None, tol: float | None = None,
         params: dict[str, float] | None = None) -> Problem:
    label, text = resolve(name)
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ProblemError(f"{label}: {exc}") from None
    rd = _Reader(label, data)
    kind = rd.get(data, "top level", "kind", str)
    if kind not in KINDS:
        rd.fail("top level.kind", f"unknown kind {kind!r} (expected one of {', '.join(KINDS)})")
    title = rd.get(data, "top level", "name", str, Path(label).stem.strip("<>").replace("fixture ", ""))
    cfg = _sampling(rd, seed, samples, tol)
    builder = {
        "dynamical_system": _build_ds,
        "lagrangian": _build_lagrangian,
        "hamiltonian": _build_hamiltonian,
        "field": _build_field,
    }[kind]
    try:
        return builder(rd, title, cfg, params or {})
    except (SymbolTableError, DimensionError) as exc:
        raise ProblemError(f"{label}: {exc}") from None


def _params(rd: _Reader, sym: dict, override: dict[str, float]) -> dict[str, float]:
    raw = rd.get(sym, "[symbols]", "params", dict, {})
    out = {}
    for k, v in raw.items():
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            rd.fail(f"[symbols].params.{k}", "expected a number")
        out[k] = float(v)
    for k, v in override.items():
        if k not in out:
            raise ProblemError(f"{rd.label}: unknown parameter {k!r}")
        out[k] = float(v)
    return out


def _trace_settings(rd: _Reader, table: SymbolTable) -> TraceSettings:
    sec = rd.section("trace", required=False) or {}
    w = "[trace]"
    ts = TraceSettings(
        t0=rd.get(sec, w, "t0", float, 0.0),
        h=rd.get(sec, w, "h", float, 1e-3),
        steps=rd.get(sec, w, "steps", int, 1000),
        x0=None,
    )
    x0 = rd.get(sec, w, "x0", list, None)
    if x0 is not None:
        if len(x0) != len(table.state_vars) or not all(isinstance(v, (int, float)) for v in x0):
            rd.fail(f"{w}.x0", f"expected {len(table.state_vars)} numbers")
        ts.x0 = [float(v) for v in x0]
    devs = data_list(rd, "deviation")
    for k, d in enumerate(devs):
        where = f"[[deviation]][{k}]"
        ts.deviations.append(
            DeviationCheck(
                rd.get(d, where, "name", str, f"deviation {k + 1}"),
                rd.expr(rd.get(d, where, "quantity", str), f"{where}.quantity", table),
                rd.expr(rd.get(d, where, "rhs", (str, int, float)), f"{where}.rhs", table),
                rd.get(d, where, "tolerance", float, 1e-5),
            )
        )
    return ts


def data_list(rd: _Reader, key: str) -> list[dict]:
    val = rd.data.get(key, [])
    if not isinstance(val, list) or not all(isinstance(x, dict) for x in val):
        rd.fail(f"[[{key}]]", "expected an array of tables")
    return val


def _expect(report: VerificationReport, name: str, got, want, cfg: SamplingConfig, params) -> None:
    if not isinstance(got, list):
        got, want = [got], [want]
    report.add(identity_check(f"expected {name}", f"{name} as declared", list(zip(got, want)), cfg, params))


def _coordinates(rd: _Reader, table: SymbolTable, m: int, base_cfg: SamplingConfig):
    sec = rd.section("coordinates", required=False)
    if sec is None:
        return None
    w = "[coordinates]"
    w_names = rd.names(sec, w, "w_names")
    z_name = rd.get(sec, w, "z_name", str)
    if len(w_names) != m - 1:
        rd.fail(f"{w}.w_names", f"expected {m - 1} invariants")
    new_table = SymbolTable.for_time(w_names + [z_name], table.time_var, table.params)
    cmap = CoordinateMap(
        tuple(w_names),
        tuple(rd.exprs(sec, w, "w", table, m - 1)),
        z_name,
        tuple(rd.exprs(sec, w, "inverse", new_table, m)),
        None if "z" not in sec else rd.expr(sec["z"], f"{w}.z", table),
    )
    boxes = rd.get(sec, w, "boxes", dict, {})
    cfg_new = base_cfg.with_boxes({k: _interval(rd, f"{w}.boxes.{k}", v) for k, v in boxes.items()})
    exp = rd.get(sec, w, "expect", dict, {})
    expected = {}
    for key in ("W", "M"):
        if key in exp:
            expected[key] = rd.exprs(exp, f"{w}.expect", key, new_table, m - 1)
    for key in ("Z", "M_m"):
        if key in exp:
            expected[key] = rd.expr(exp[key], f"{w}.expect.{key}", new_table)
    if "classification" in exp:
        expected["classification"] = rd.get(exp, f"{w}.expect", "classification", str)
    return cmap, cfg_new, expected


def _run_coordinates(report, ds, X, L, coords, cfg):
    cmap, cfg_new, expected = coords
    report.extend(verify_adapted_coordinates(X, cmap, ds.table, cfg, ds.states, cfg_new))
    prof = reduction_profile(ds, X, L, cmap, cfg, cfg_new)
    report.extend(prof.report)
    params = ds.table.params
    if "W" in expected:
        _expect(report, "W", prof.W, expected["W"], cfg_new, params)
    if "Z" in expected:
        _expect(report, "Z", prof.Z, expected["Z"], cfg_new, params)
    if "M" in expected:
        _expect(report, "M", prof.M, expected["M"], cfg_new, params)
    if "M_m" in expected:
        _expect(report, "M_m", prof.M_m, expected["M_m"], cfg_new, params)
    if "classification" in expected:
        want = expected["classification"]
        ok = prof.classification == want
        report.add(Check("expected classification", "classification as declared", PASS if ok else FAIL, 0.0, None,
                         "" if ok else f"got {prof.classification}, expected {want}"))
    return prof


# -- dynamical systems -----------------------------------------------------------


def _lambda_matrix(rd: _Reader, sec: dict, where: str, table: SymbolTable, m: int) -> LambdaMatrix:
    if "lambda" in sec and "Lambda" in sec:
        rd.fail(where, "give either lambda (scalar) or Lambda (matrix), not both")
    if "lambda" in sec:
        return LambdaMatrix.scalar(rd.expr(sec["lambda"], f"{where}.lambda", table), m)
    return LambdaMatrix(tuple(map(tuple, rd.matrix(sec, where, "Lambda", table, m))))


def _build_ds(rd: _Reader, title: str, cfg: SamplingConfig, override) -> Problem:
    sym = rd.section("symbols")
    states = rd.names(sym, "[symbols]", "states")
    time = rd.get(sym, "[symbols]", "time", str, "t")
    table = SymbolTable.for_time(states, time, _params(rd, sym, override), max_order=1)
    sec = rd.section("system")
    w = "[system]"
    m = len(states)
    ds = DynamicalSystem(tuple(rd.exprs(sec, w, "f", table, m)), table)
    X = VectorField(tuple(rd.exprs(sec, w, "phi", table, m)))
    L = _lambda_matrix(rd, sec, w, table, m)
    coords = _coordinates(rd, table, m, cfg)
    trace = _trace_settings(rd, table)

    def run() -> VerificationReport:
        report = VerificationReport(title)
        report.extend(check_Lambda_symmetry(ds, X, L, cfg))
        if coords is not None and report.passed:
            _run_coordinates(report, ds, X, L, coords, cfg)
        return report

    return Problem(title, "dynamical_system", cfg, run, lambda: ds, trace, table)


# -- Hamiltonian systems ---------------------------------------------------------


def _build_hamiltonian(rd: _Reader, title: str, cfg: SamplingConfig, override) -> Problem:
    sym = rd.section("symbols")
    q = rd.names(sym, "[symbols]", "coordinates")
    p = rd.names(sym, "[symbols]", "momenta")
    time = rd.get(sym, "[symbols]", "time", str, "t")
    if len(q) != len(p):
        rd.fail("[symbols]", "as many momenta as coordinates are required")
    table = SymbolTable.for_time(q + p, time, _params(rd, sym, override), max_order=1)
    sec = rd.section("system")
    w = "[system]"
    m = 2 * len(q)
    hs = ham.HamiltonianSystem(rd.expr(rd.get(sec, w, "H", str), f"{w}.H", table), table)
    X = VectorField(tuple(rd.exprs(sec, w, "phi", table, m)))
    L = _lambda_matrix(rd, sec, w, table, m)
    G = None if "G" not in sec else rd.expr(sec["G"], f"{w}.G", table)
    gamma = _gamma(rd, sec, w, table)
    coords = _coordinates(rd, table, m, cfg)
    trace = _trace_settings(rd, table)

    def run() -> VerificationReport:
        report = VerificationReport(title)
        ds = hs.ds
        report.extend(check_Lambda_symmetry(ds, X, L, cfg))
        _hamiltonian_tail(report, hs, X, L, G, gamma, cfg)
        if coords is not None:
            _run_coordinates(report, ds, X, L, coords, cfg)
        return report

    return Problem(title, "hamiltonian", cfg, run, lambda: hs.ds, trace, table)


def _gamma(rd: _Reader, sec: dict, where: str, table: SymbolTable):
    if "gamma" not in sec:
        return None
    return rd.expr(sec["gamma"], f"{where}.gamma", table.with_extra(["G"]))


def _hamiltonian_tail(report, hs, X, L, G, gamma, cfg):
    """Generating function or divergence route, then the Lambda-constant of motion."""
    found = ham.find_generating_function(X, hs.table, cfg, anchor=G)
    report.extend(found.report)
    if found.G is not None:
        GG = G if G is not None else found.G.G
        if G is not None:
            report.extend(ham.verify_generating_function(X, G, hs.table, cfg))
        report.extend(ham.check_theorem2_case_i(hs, X, L, GG, cfg))
        if gamma is not None:
            report.extend(ham.verify_separated_equation(GG, gamma, hs, cfg))
    else:
        report.extend(ham.check_theorem2_case_ii(hs, X, L, cfg))


# -- Lagrangians -----------------------------------------------------------------


def _build_lagrangian(rd: _Reader, title: str, cfg: SamplingConfig, override) -> Problem:
    sym = rd.section("symbols")
    q = rd.names(sym, "[symbols]", "coordinates")
    p_names = rd.names(sym, "[symbols]", "momenta", None) or list(lg.momentum_names(q))
    time = rd.get(sym, "[symbols]", "time", str, "t")
    params = _params(rd, sym, override)
    n = len(q)
    red_sec = rd.section("partial_reduction", required=False)
    extra: list[str] = []
    if red_sec is not None:
        wn = rd.names(red_sec, "[partial_reduction]", "w_names")
        extra = wn + ["d" + x for x in wn] + [rd.get(red_sec, "[partial_reduction]", "zeta_name", str)]
    ltab = SymbolTable.for_time(q, time, params, extra, max_order=3)
    sec = rd.section("system")
    w = "[system]"
    order = rd.get(sec, w, "order", int, 1)
    lag = lg.Lagrangian(rd.expr(rd.get(sec, w, "L", str), f"{w}.L", ltab), ltab, order)
    X = VectorField(tuple(rd.exprs(sec, w, "phi", ltab, n)))
    LL = _lambda_matrix(rd, sec, w, ltab, n)
    L2 = None if "Lambda2" not in sec else LambdaMatrix(tuple(map(tuple, rd.matrix(sec, w, "Lambda2", ltab, n))))
    c = rd.get(sec, w, "uniform_factor", float, None)
    htab = SymbolTable.for_time(q + p_names, time, params, max_order=1)
    gamma = _gamma(rd, sec, w, htab)
    exp = rd.get(sec, w, "expect", dict, {})
    expected: dict[str, Any] = {}
    for key in ("psi",):
        if key in exp:
            expected[key] = rd.exprs(exp, f"{w}.expect", key, htab, n)
    for key in ("G", "S", "DtG", "H"):
        if key in exp:
            expected[key] = rd.expr(exp[key], f"{w}.expect.{key}", htab)
    if "DtP" in exp:
        expected["DtP"] = rd.expr(exp["DtP"], f"{w}.expect.DtP", ltab)
    if "Lambda_H" in exp:
        expected["Lambda_H"] = rd.matrix(exp, f"{w}.expect", "Lambda_H", htab, 2 * n)
    red = None
    red_expect = None
    if red_sec is not None:
        wr = "[partial_reduction]"
        wn = rd.names(red_sec, wr, "w_names")
        red = lg.ReductionInput(
            tuple(wn),
            tuple(rd.exprs(red_sec, wr, "w", ltab, len(wn))),
            rd.get(red_sec, wr, "zeta_name", str),
            rd.expr(rd.get(red_sec, wr, "zeta", str), f"{wr}.zeta", ltab),
            rd.expr(rd.get(red_sec, wr, "L_tilde", str), f"{wr}.L_tilde", ltab),
        )
        if "expect" in red_sec:
            red_expect = rd.expr(red_sec["expect"], f"{wr}.expect", ltab)
    coords = _coordinates(rd, htab, 2 * n, cfg)
    trace = _trace_settings(rd, htab)
    pipeline = rd.get(sec, w, "pipeline", bool, order == 1 and L2 is not None)
    state: dict[str, Any] = {}

    def legendre() -> lg.LegendreResult:
        if "leg" not in state:
            state["leg"] = lg.legendre(lag, cfg, p_names)
        return state["leg"]

    def run() -> VerificationReport:
        report = VerificationReport(title)
        report.extend(lg.check_Lambda_invariance(lag, X, LL, cfg))
        if order == 2:
            report.extend(lg.noether_charge_second_order(lag, X, LL, cfg)[1])
            return report
        _, nrep = lg.noether_charge(lag, X, LL, cfg)
        if "DtP" in expected:
            DtP = substitute(lag.D(_charge(lag, X)), lg.onshell_accelerations(lag, cfg))
            _expect(report, "D_t P", DtP, expected["DtP"], cfg, params)
        if pipeline:
            res = lg.theorem4_pipeline(lag, X, LL, L2, cfg, p_names=p_names)
            report.extend(res.report)
            state["leg"] = res.legendre
            hs = res.hamiltonian
            if res.X_H is not None and "psi" in expected:
                _expect(report, "psi", list(res.X_H.phi[n:]), expected["psi"], cfg, params)
            if res.Lambda_H is not None and "Lambda_H" in expected:
                got = [x for row in res.Lambda_H.entries for x in row]
                want = [x for row in expected["Lambda_H"] for x in row]
                _expect(report, "Lambda_H", got, want, cfg, params)
            if hs is not None and res.G is not None:
                if "G" in expected:
                    _expect(report, "G", res.G, expected["G"], cfg, params)
                if "DtG" in expected:
                    _expect(report, "D_t G", ham.onshell_time_derivative(res.G, hs), expected["DtG"], cfg, params)
                if gamma is not None:
                    report.extend(ham.verify_separated_equation(res.G, gamma, hs, cfg))
            if res.S is not None and "S" in expected:
                _expect(report, "S", res.S, expected["S"], cfg, params)
            if c is not None and res.Lambda_H is not None:
                report.extend(lg.check_uniform_factor(LL, X, c, cfg, params, res.Lambda_H, res.X_H))
            if coords is not None and res.X_H is not None and res.Lambda_H is not None and report.passed:
                _run_coordinates(report, hs.ds, res.X_H, res.Lambda_H, coords, cfg)
        else:
            report.extend(nrep)
        if "H" in expected:
            _expect(report, "H", legendre().H, expected["H"], cfg, params)
        if red is not None:
            pr = lg.partial_reduction(lag, X, LL, red, cfg)
            report.extend(pr.report)
            if red_expect is not None:
                if pr.explicit is None:
                    report.add(Check("expected reduced equation", "reduced equation as declared", FAIL, float("inf"),
                                     None, "no explicit first-order equation was obtained"))
                else:
                    _expect(report, f"reduced equation {pr.explicit[0]}", pr.explicit[1], red_expect, cfg, params)
        return report

    return Problem(title, "lagrangian", cfg, run, lambda: legendre().hamiltonian.ds, trace, htab)


def _charge(lag: lg.Lagrangian, X: VectorField):
    return sum_exprs(mul(f, pa) for f, pa in zip(X.phi, lag.momenta()))


# -- fields ----------------------------------------------------------------------


def _build_field(rd: _Reader, title: str, cfg: SamplingConfig, override) -> Problem:
    sym = rd.section("symbols")
    indep = rd.names(sym, "[symbols]", "independent")
    fields = rd.names(sym, "[symbols]", "fields")
    params = _params(rd, sym, override)
    sec = rd.section("system")
    w = "[system]"
    order = rd.get(sec, w, "order", int, 1)
    table = SymbolTable.for_fields(indep, fields, params, max_order=order + 1)
    s, n = len(indep), len(fields)
    raw = rd.get(sec, w, "Lambda", list)
    if len(raw) != s:
        rd.fail(f"{w}.Lambda", f"expected {s} matrices, one per independent variable")
    Lambdas = []
    for i, M in enumerate(raw):
        rows = rd.matrix({"m": M}, f"{w}.Lambda[{i}]", "m", table, n)
        Lambdas.append(LambdaMatrix(tuple(map(tuple, rows))))
    fp = ft.FieldProblem(
        rd.expr(rd.get(sec, w, "L", str), f"{w}.L", table),
        table,
        tuple(rd.exprs(sec, w, "phi", table, n)),
        tuple(Lambdas),
        None if "Gamma" not in sec else tuple(map(tuple, rd.matrix(sec, w, "Gamma", table, n))),
        None if "xi" not in sec else tuple(rd.exprs(sec, w, "xi", table, s)),
        order,
    )
    exp = rd.get(sec, w, "expect", dict, {})
    expected: dict[str, Any] = {}
    for key, size in (("P", s), ("P_tilde", s), ("EL", n), ("phi_tilde", n)):
        if key in exp:
            expected[key] = rd.exprs(exp, f"{w}.expect", key, table, size)
    if "divergence" in exp:
        expected["divergence"] = rd.expr(exp["divergence"], f"{w}.expect.divergence", table)

    def run() -> VerificationReport:
        report = VerificationReport(title)
        if s >= 2:
            report.extend(ft.check_compatibility(fp.Lambdas, table, cfg))
        if fp.Gamma is not None:
            try:
                report.extend(ft.verify_gamma(fp.Lambdas, fp.Gamma, table, cfg))
            except ft.SingularGammaError as exc:
                report.add(Check("gauge factor", "Gamma L_i = D_i Gamma", FAIL, float("inf"), None, str(exc)))
        if order == 2:
            report.extend(ft.current_density_second_order(fp, cfg)[1])
            return report
        report.extend(ft.check_mu_invariance(fp, cfg))
        cd, crep = ft.current_density(fp, cfg)
        report.extend(crep)
        proj = ft.OnShellProjector(fp, cfg)
        if "P" in expected:
            _expect(report, "P", cd.P, expected["P"], cfg, params)
        if "divergence" in expected:
            divP = sum_exprs(fp.D(P, i) for i, P in enumerate(cd.P))
            report.add(identity_check("expected D_i P_i", "D_i P_i as declared (on solutions)",
                                      [(divP, expected["divergence"])], cfg, params, proj, proj.extra_vars))
        if "EL" in expected:
            _expect(report, "Euler-Lagrange", ft.euler_lagrange(fp), expected["EL"], cfg, params)
        if fp.Gamma is not None and report.passed:
            tilde, grep = ft.gauge_equivalent_field(fp, cfg)
            report.extend(grep)
            if "phi_tilde" in expected:
                _expect(report, "phi~", list(tilde.phi), expected["phi_tilde"], cfg, params)
            if "P_tilde" in expected:
                Pt = [mtrace(M) for M in ft.current_matrices(tilde)]
                _expect(report, "P~", Pt, expected["P_tilde"], cfg, params)
        return report

    trace = TraceSettings()
    return Problem(title, "field", cfg, run, None, trace, table)


# -- entry points ----------------------------------------------------------------


def verify(problem: Problem) -> VerificationReport:
    return problem.run()


def trace(problem: Problem, t0=None, h=None, steps=None, x0=None) -> tuple[Trajectory, VerificationReport]:
    if problem.system is None:
        raise ProblemError(f"{problem.name}: kind {problem.kind!r} has no time evolution to trace")
    ts = problem.trace
    t0 = ts.t0 if t0 is None else t0
    h = ts.h if h is None else h
    steps = ts.steps if steps is None else steps
    x0 = ts.x0 if x0 is None else x0
    if x0 is None:
        raise ProblemError(f"{problem.name}: no initial state (give --x0 or [trace].x0)")
    if h <= 0:
        raise ProblemError("step h must be positive")
    if steps < 2:
        raise ProblemError("at least two steps are required")
    ds = problem.system()
    if len(x0) != ds.m:
        raise ProblemError(f"initial state needs {ds.m} components, got {len(x0)}")
    traj = integrate(ds, x0, t0, h, steps)
    report = VerificationReport(problem.name)
    for dc in ts.deviations:
        report.extend(check_deviation_law(traj, dc, ds.table.params))
    return traj, report


__all__ = [
    "FIXTURES",
    "KINDS",
    "NonFiniteStateError",
    "Problem",
    "ProblemError",
    "load",
    "resolve",
    "trace",
    "verify",
]
