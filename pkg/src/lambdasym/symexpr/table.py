"""Symbol tables for time problems and field problems.

Derivative symbols are generated, never declared by hand:

* time problems (single independent variable): ``dq1``, ``ddq1``, ``dddq1``
* field problems: ``u_x``, ``u_xy`` (mixed indices sorted by declaration
  order of the independent variables, so ``u_xy`` and ``u_yx`` coincide)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

IDENT = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")


class SymbolTableError(ValueError):
    pass


class MissingDerivativeError(KeyError):
    def __init__(self, base: str, multi_index: tuple[str, ...]):
        self.base = base
        self.multi_index = multi_index
        super().__init__(
            f"derivative of {base!r} of order {len(multi_index)} "
            f"({', '.join(multi_index)}) is not declared"
        )


@dataclass(frozen=True)
class SymbolTable:
    indep_vars: tuple[str, ...]
    state_vars: tuple[str, ...]
    time_var: str | None = None
    params: Mapping[str, float] = field(default_factory=dict)
    extra: tuple[str, ...] = ()
    max_order: int = 2

    def __post_init__(self):
        object.__setattr__(self, "indep_vars", tuple(self.indep_vars))
        object.__setattr__(self, "state_vars", tuple(self.state_vars))
        object.__setattr__(self, "extra", tuple(self.extra))
        object.__setattr__(self, "params", dict(self.params))
        if self.time_var is not None and self.indep_vars != (self.time_var,):
            raise SymbolTableError("a time problem has exactly one independent variable")
        if not self.indep_vars:
            raise SymbolTableError("at least one independent variable is required")
        deriv: dict[str, tuple[str, tuple[str, ...]]] = {}
        for base in self.state_vars:
            for k in range(1, self.max_order + 1):
                for mi in _multi_indices(self.indep_vars, k):
                    deriv[self._name(base, mi)] = (base, mi)
        object.__setattr__(self, "_deriv", deriv)
        object.__setattr__(self, "_lookup", {v: k for k, v in deriv.items()})
        names = (
            list(self.indep_vars)
            + list(self.state_vars)
            + list(deriv)
            + list(self.params)
            + list(self.extra)
        )
        seen: set[str] = set()
        for n in names:
            if not n or not IDENT.match(n):
                raise SymbolTableError(f"invalid identifier {n!r}")
            if n in seen:
                raise SymbolTableError(f"duplicate symbol {n!r}")
            seen.add(n)
        object.__setattr__(self, "_names", tuple(names))

    @classmethod
    def for_time(
        cls,
        states: Sequence[str],
        time: str = "t",
        params: Mapping[str, float] | None = None,
        extra: Sequence[str] = (),
        max_order: int = 2,
    ) -> "SymbolTable":
        return cls((time,), tuple(states), time, params or {}, tuple(extra), max_order)

    @classmethod
    def for_fields(
        cls,
        indep: Sequence[str],
        fields: Sequence[str],
        params: Mapping[str, float] | None = None,
        extra: Sequence[str] = (),
        max_order: int = 2,
    ) -> "SymbolTable":
        return cls(tuple(indep), tuple(fields), None, params or {}, tuple(extra), max_order)

    def _name(self, base: str, mi: tuple[str, ...]) -> str:
        if self.time_var is not None:
            return "d" * len(mi) + base
        return base + "_" + "".join(mi)

    def all_names(self) -> tuple[str, ...]:
        return self._names

    @property
    def derivative_vars(self) -> tuple[str, ...]:
        return tuple(self._deriv)

    def jet_vars(self) -> tuple[str, ...]:
        """State symbols together with every declared derivative symbol."""
        return self.state_vars + self.derivative_vars

    def is_jet(self, name: str) -> bool:
        return name in self.state_vars or name in self._deriv

    def decompose(self, name: str) -> tuple[str, tuple[str, ...]]:
        """(base variable, multi-index) for a state or derivative symbol."""
        if name in self.state_vars:
            return name, ()
        try:
            return self._deriv[name]
        except KeyError:
            raise SymbolTableError(f"{name!r} is not a jet symbol") from None

    def order(self, name: str) -> int:
        return len(self.decompose(name)[1])

    def derivative(self, base: str, *wrt: str) -> str:
        """Name of the derivative of state `base` with respect to `wrt`."""
        if base not in self.state_vars:
            raise SymbolTableError(f"{base!r} is not a state variable")
        if not wrt:
            return base
        mi = self._sort(wrt)
        try:
            return self._lookup[(base, mi)]
        except KeyError:
            raise MissingDerivativeError(base, mi) from None

    def next_derivative(self, name: str, wrt: str) -> str:
        base, mi = self.decompose(name)
        return self.derivative(base, *(mi + (wrt,)))

    def dot(self, base: str, order: int = 1) -> str:
        """Time derivative name (time problems only)."""
        if self.time_var is None:
            raise SymbolTableError("dot() is only defined for time problems")
        return self.derivative(base, *([self.time_var] * order))

    def _sort(self, wrt: Sequence[str]) -> tuple[str, ...]:
        for w in wrt:
            if w not in self.indep_vars:
                raise SymbolTableError(f"{w!r} is not an independent variable")
        pos = {v: i for i, v in enumerate(self.indep_vars)}
        return tuple(sorted(wrt, key=pos.__getitem__))

    def with_extra(self, names: Sequence[str]) -> "SymbolTable":
        new = [n for n in names if n not in self._names]
        return SymbolTable(
            self.indep_vars,
            self.state_vars,
            self.time_var,
            self.params,
            self.extra + tuple(new),
            self.max_order,
        )

    def with_params(self, params: Mapping[str, float]) -> "SymbolTable":
        merged = dict(self.params)
        merged.update(params)
        return SymbolTable(
            self.indep_vars, self.state_vars, self.time_var, merged, self.extra, self.max_order
        )


def _multi_indices(indep: tuple[str, ...], k: int) -> list[tuple[str, ...]]:
    out: list[tuple[str, ...]] = []

    def rec(start: int, prefix: tuple[str, ...]):
        if len(prefix) == k:
            out.append(prefix)
            return
        for i in range(start, len(indep)):
            rec(i, prefix + (indep[i],))

    rec(0, ())
    return out
