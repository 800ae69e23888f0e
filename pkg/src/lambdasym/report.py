"""Verification records shared by every pipeline."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .symexpr import DomainExhaustedError, EquivResult, Expr, SamplingConfig, equiv_many, to_string

PASS = "PASS"
FAIL = "FAIL"
SKIPPED = "SKIPPED"


@dataclass
class Check:
    name: str
    anchor: str
    verdict: str
    residual: float = 0.0
    witness: dict[str, float] | None = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "verdict": self.verdict,
            "residual": _json_float(self.residual),
            "witness": None
            if self.witness is None
            else {k: _json_float(v) for k, v in self.witness.items()},
        }


def _json_float(x: float):
    x = float(x)
    if math.isfinite(x):
        return x
    return str(x)


@dataclass
class VerificationReport:
    problem: str = ""
    checks: list[Check] = field(default_factory=list)
    # synthesized quantities (momenta, psi, S, currents...) shown in text reports
    quantities: dict[str, str] = field(default_factory=dict)

    @property
    def overall(self) -> str:
        ran = [c for c in self.checks if c.verdict != SKIPPED]
        return PASS if all(c.passed for c in ran) else FAIL

    @property
    def passed(self) -> bool:
        return self.overall == PASS

    def __bool__(self) -> bool:
        return self.passed

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, other: "VerificationReport") -> "VerificationReport":
        self.checks.extend(other.checks)
        self.quantities.update(other.quantities)
        return self

    def note(self, name: str, value) -> None:
        if isinstance(value, Expr):
            value = to_string(value)
        elif isinstance(value, (list, tuple)):
            value = "[" + ", ".join(_fmt(v) for v in value) + "]"
        self.quantities[name] = str(value)

    def get(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def max_residual(self) -> float:
        vals = [c.residual for c in self.checks if c.verdict != SKIPPED]
        return max(vals) if vals else 0.0

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "checks": [c.to_dict() for c in self.checks],
            "overall": self.overall,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    def to_text(self) -> str:
        rows = [("check", "verdict", "residual", "identity")]
        for c in self.checks:
            res = "-" if c.verdict == SKIPPED else f"{c.residual:.3e}"
            rows.append((c.name, c.verdict, res, c.anchor))
        widths = [max(len(r[i]) for r in rows) for i in range(3)]
        lines = [f"problem: {self.problem}"]
        for i, r in enumerate(rows):
            lines.append("  ".join(r[k].ljust(widths[k]) for k in range(3)) + "  " + r[3])
            if i == 0:
                lines.append("  ".join("-" * w for w in widths) + "  " + "-" * 8)
        for c in self.checks:
            if c.witness:
                pt = ", ".join(f"{k}={v:.6g}" for k, v in c.witness.items())
                lines.append(f"  witness[{c.name}]: {pt}")
            if c.detail and not c.passed:
                lines.append(f"  note[{c.name}]: {c.detail}")
        if self.quantities:
            lines.append("quantities:")
            for k, v in self.quantities.items():
                lines.append(f"  {k} = {v}")
        lines.append(f"overall: {self.overall}")
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    return to_string(v) if isinstance(v, Expr) else str(v)


def identity_check(
    name: str,
    anchor: str,
    pairs: Sequence[tuple[Expr, Expr]],
    cfg: SamplingConfig,
    params=None,
    projector=None,
    extra_vars=(),
) -> Check:
    """One check made of component identities lhs_k == rhs_k, all on shared samples."""
    if not pairs:
        return Check(name, anchor, PASS, 0.0)
    try:
        results = equiv_many(list(pairs), cfg, params, projector, extra_vars)
    except DomainExhaustedError as exc:
        return Check(name, anchor, FAIL, math.inf, None, str(exc))
    return combine(name, anchor, results)


def combine(name: str, anchor: str, results: Iterable[EquivResult]) -> Check:
    results = list(results)
    residual = max((r.residual for r in results), default=0.0)
    failing = [(i, r) for i, r in enumerate(results) if not r.passed]
    if not failing:
        return Check(name, anchor, PASS, residual)
    i, worst = max(failing, key=lambda ir: ir[1].ratio)
    return Check(name, anchor, FAIL, residual, worst.witness, f"component {i + 1} differs")
