"""Solver-agnostic linear model container."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

CONTINUOUS = "continuous"
BINARY = "binary"
SENSES = ("<=", ">=", "=")

Number = float  # ints are kept as ints wherever possible


def _clean(v):
    """Integral floats become ints so that emitted text stays canonical."""
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float) and v.is_integer():
        return int(v)
    return v


@dataclass(frozen=True)
class Variable:
    name: str
    lower: Number = 0
    upper: Number = math.inf
    kind: str = CONTINUOUS

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, BINARY):
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind == BINARY and (self.lower != 0 or self.upper != 1):
            raise ValueError(f"binary {self.name} must have bounds [0, 1]")
        object.__setattr__(self, "lower", _clean(self.lower) if math.isfinite(self.lower) else self.lower)
        object.__setattr__(self, "upper", _clean(self.upper) if math.isfinite(self.upper) else self.upper)


@dataclass(frozen=True)
class Constraint:
    """``sum(coef * var) <sense> rhs`` with terms sorted by variable name."""

    name: str
    terms: tuple[tuple[str, Number], ...]
    sense: str
    rhs: Number

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"unknown sense {self.sense!r}")
        merged: dict[str, Number] = {}
        for var, coef in self.terms:
            merged[var] = merged.get(var, 0) + coef
        object.__setattr__(self, "terms", tuple(sorted((v, _clean(c)) for v, c in merged.items() if c)))
        object.__setattr__(self, "rhs", _clean(self.rhs))

    def activity(self, values: Mapping[str, Number]) -> Number:
        return sum(c * values.get(v, 0) for v, c in self.terms)

    def violation(self, values: Mapping[str, Number]) -> Number:
        """Amount by which ``values`` violate the row (0 when satisfied)."""
        lhs = self.activity(values)
        if self.sense == "<=":
            return max(0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass(frozen=True)
class MipModel:
    """Variables and constraints kept sorted by name.

    ``kind`` and ``meta`` describe how the model was built and do not take
    part in equality; neither does the warm start.
    """

    name: str
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: tuple[tuple[str, Number], ...]
    maximize: bool = False
    warm_start: Mapping[str, Number] | None = field(default=None, compare=False)
    kind: str = field(default="generic", compare=False)
    meta: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        variables = tuple(sorted(self.variables, key=lambda v: v.name))
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names")
        constraints = tuple(sorted(self.constraints, key=lambda c: c.name))
        cnames = [c.name for c in constraints]
        if len(set(cnames)) != len(cnames):
            raise ValueError("duplicate constraint names")
        declared = set(names)
        for c in constraints:
            for v, _ in c.terms:
                if v not in declared:
                    raise ValueError(f"constraint {c.name} uses undeclared variable {v}")
        objective = Constraint("obj", tuple(self.objective), "=", 0).terms
        for v, _ in objective:
            if v not in declared:
                raise ValueError(f"objective uses undeclared variable {v}")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "constraints", constraints)
        object.__setattr__(self, "objective", objective)

    @property
    def variable_map(self) -> dict[str, Variable]:
        return {v.name: v for v in self.variables}

    @property
    def num_binaries(self) -> int:
        return sum(1 for v in self.variables if v.kind == BINARY)

    def count(self, prefix: str, rows: bool = True) -> int:
        """Number of rows (or variables) whose name starts with ``prefix_``."""
        items = self.constraints if rows else self.variables
        return sum(1 for c in items if c.name.split("_", 1)[0] == prefix)

    def objective_value(self, values: Mapping[str, Number]) -> Number:
        return sum(c * values.get(v, 0) for v, c in self.objective)

    def with_warm_start(self, values: Mapping[str, Number] | None) -> "MipModel":
        return MipModel(self.name, self.variables, self.constraints, self.objective, self.maximize,
                        dict(values) if values is not None else None, self.kind, self.meta)

    def relaxed(self) -> "MipModel":
        """LP relaxation: binaries become continuous in [0, 1]."""
        vs = tuple(Variable(v.name, v.lower, v.upper) for v in self.variables)
        return MipModel(self.name, vs, self.constraints, self.objective, self.maximize,
                        self.warm_start, self.kind, self.meta)


def check_assignment(model: MipModel, values: Mapping[str, Number], tol: float = 1e-6) -> list[str]:
    """Human-readable list of bound, integrality and row violations."""
    problems = []
    for v in model.variables:
        if v.name not in values:
            problems.append(f"{v.name} unassigned")
            continue
        a = values[v.name]
        if a < v.lower - tol or a > v.upper + tol:
            problems.append(f"{v.name}={a} outside [{v.lower}, {v.upper}]")
        if v.kind == BINARY and min(abs(a), abs(a - 1)) > tol:
            problems.append(f"{v.name}={a} not binary")
    for c in model.constraints:
        gap = c.violation(values)
        if gap > tol:
            problems.append(f"row {c.name} violated by {gap}")
    return problems

