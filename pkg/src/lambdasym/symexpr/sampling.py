"""Randomized numeric equivalence: the "identity holds" decision procedure."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .evaluate import Compiled
from .expr import Expr, as_expr, free_symbols_all

# A projector receives the sampled values (name -> array) and returns the
# values to evaluate at; used to put jet samples on-shell.
Projector = Callable[[dict[str, np.ndarray]], dict[str, np.ndarray]]


class DomainExhaustedError(RuntimeError):
    def __init__(self, found: int, wanted: int):
        self.found = found
        self.wanted = wanted
        super().__init__(f"only {found} of {wanted} samples gave finite values")


@dataclass(frozen=True)
class SamplingConfig:
    seed: int = 0
    n_samples: int = 64
    box: tuple[float, float] = (0.2, 2.0)
    boxes: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    rel_tol: float = 1e-9
    abs_tol: float = 1e-9
    max_retries: int = 20

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        for name, (lo, hi) in [("default", self.box), *self.boxes.items()]:
            if not lo < hi:
                raise ValueError(f"empty sampling interval for {name}: [{lo}, {hi}]")
        object.__setattr__(self, "boxes", dict(self.boxes))

    def interval(self, name: str) -> tuple[float, float]:
        return self.boxes.get(name, self.box)

    def replace(self, **kw) -> "SamplingConfig":
        d = dict(
            seed=self.seed,
            n_samples=self.n_samples,
            box=self.box,
            boxes=self.boxes,
            rel_tol=self.rel_tol,
            abs_tol=self.abs_tol,
            max_retries=self.max_retries,
        )
        d.update(kw)
        return SamplingConfig(**d)

    def with_boxes(self, boxes: Mapping[str, tuple[float, float]]) -> "SamplingConfig":
        merged = dict(self.boxes)
        merged.update(boxes)
        return self.replace(boxes=merged)


@dataclass(frozen=True)
class EquivResult:
    passed: bool
    residual: float  # worst |a - b| over accepted samples
    witness: dict[str, float] | None  # worst-violation point on FAIL
    n_samples: int
    ratio: float  # worst |a - b| / (abs_tol + rel_tol * max(|a|, |b|))

    def __bool__(self) -> bool:
        return self.passed


def draw_points(
    names: Sequence[str],
    cfg: SamplingConfig,
    evaluator: Callable[[dict[str, np.ndarray]], list[np.ndarray]],
    projector: Projector | None = None,
):
    """Sample points, reject non-finite evaluations, resample as needed.

    Returns (points, outputs) restricted to exactly n_samples accepted rows.
    Deterministic for a fixed seed.
    """
    rng = np.random.default_rng(cfg.seed)
    names = sorted(names)
    kept_pts: list[dict[str, np.ndarray]] = []
    kept_out: list[list[np.ndarray]] = []
    found = 0
    for _ in range(cfg.max_retries + 1):
        batch = {}
        for n in names:
            lo, hi = cfg.interval(n)
            batch[n] = rng.uniform(lo, hi, cfg.n_samples)
        if projector is not None:
            batch = projector(batch)
        outs = evaluator(batch)
        ok = np.ones(cfg.n_samples, dtype=bool)
        for arr in batch.values():
            ok &= np.isfinite(arr)
        for o in outs:
            ok &= np.isfinite(o)
        if ok.any():
            kept_pts.append({k: v[ok] for k, v in batch.items()})
            kept_out.append([o[ok] for o in outs])
            found += int(ok.sum())
        if found >= cfg.n_samples:
            break
    if found < cfg.n_samples:
        raise DomainExhaustedError(found, cfg.n_samples)
    pts = {k: np.concatenate([p[k] for p in kept_pts])[: cfg.n_samples] for k in kept_pts[0]}
    outs = [
        np.concatenate([o[i] for o in kept_out])[: cfg.n_samples]
        for i in range(len(kept_out[0]))
    ]
    return pts, outs


def _vector_evaluator(exprs: Sequence[Expr], names: Sequence[str], params: Mapping[str, float]):
    argnames = list(names) + list(params)
    comp = Compiled(exprs, argnames)

    def run(batch: dict[str, np.ndarray]) -> list[np.ndarray]:
        n = len(next(iter(batch.values()))) if batch else 1
        vals = dict(batch)
        for k, v in params.items():
            vals[k] = np.full(n, float(v))
        outs = comp.from_mapping(vals)
        return [np.broadcast_to(np.asarray(o, dtype=float), (n,)).copy() for o in outs]

    return run


def equiv_many(
    pairs: Sequence[tuple[Expr, Expr]],
    cfg: SamplingConfig,
    params: Mapping[str, float] | None = None,
    projector: Projector | None = None,
    extra_vars: Sequence[str] = (),
) -> list[EquivResult]:
    """Check several identities a_k == b_k on one shared set of samples."""
    params = dict(params or {})
    flat: list[Expr] = []
    for a, b in pairs:
        flat.extend([as_expr(a), as_expr(b)])
    names = sorted((free_symbols_all(flat) | set(extra_vars)) - set(params))
    if not names:
        # constant identity: one evaluation is enough, but keep the shape
        names = []
    run = _vector_evaluator(flat, names, params)
    if names:
        pts, outs = draw_points(names, cfg, run, projector)
    else:
        outs = run({})
        if not all(np.all(np.isfinite(o)) for o in outs):
            raise DomainExhaustedError(0, cfg.n_samples)
        pts = {}
    results = []
    for k in range(len(pairs)):
        a, b = outs[2 * k], outs[2 * k + 1]
        diff = np.abs(a - b)
        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(a), np.abs(b))
        ratio = diff / scale
        worst = int(np.argmax(ratio)) if ratio.size else 0
        passed = bool(np.all(diff <= scale))
        witness = None
        if not passed:
            witness = {n: float(pts[n][worst]) for n in sorted(pts)}
        results.append(
            EquivResult(
                passed=passed,
                residual=float(diff.max()) if diff.size else 0.0,
                witness=witness,
                n_samples=int(diff.size),
                ratio=float(ratio[worst]) if ratio.size else 0.0,
            )
        )
    return results


def equiv(
    a: Expr,
    b: Expr,
    cfg: SamplingConfig | None = None,
    params: Mapping[str, float] | None = None,
    projector: Projector | None = None,
) -> EquivResult:
    """Decide a == b by seeded sampling over the configured box."""
    return equiv_many([(a, b)], cfg or SamplingConfig(), params, projector)[0]
