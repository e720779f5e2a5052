"""Schedules of arc-weighted DAGs and RCPSP feasibility checks."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

from .instances import InstanceError, ProjectInstance, to_units, topological_order


@dataclass(frozen=True)
class Schedule:
    """Start times per node, in half-units."""

    start: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(self.start))
        if any(v < 0 for v in self.start):
            raise ValueError("start times must be non-negative")

    def __getitem__(self, v: int):
        return self.start[v]

    def __len__(self):
        return len(self.start)

    def __iter__(self):
        return iter(self.start)

    @property
    def makespan(self):
        return self.start[-1]


@dataclass(frozen=True)
class WeightedDag:
    """Nodes ``0..num_nodes-1`` and arcs ``(u, v, length)``."""

    num_nodes: int
    arcs: tuple[tuple[int, int, int], ...]

    def order(self) -> list[int]:
        return topological_order(self.num_nodes, ((u, v) for u, v, _ in self.arcs))


def precedence_dag(instance: ProjectInstance, arcs: Iterable[tuple[int, int]] | None = None,
                   durations: Sequence[int] | None = None) -> WeightedDag:
    """``(V, arcs, p)``: arc ``(i, j)`` has length ``p_i``."""
    p = instance.durations if durations is None else durations
    arcs = instance.arcs if arcs is None else arcs
    return WeightedDag(instance.num_nodes, tuple((i, j, p[i]) for i, j in arcs))


def check_precedence(x: Sequence[int], g: WeightedDag) -> bool:
    if len(x) != g.num_nodes:
        raise ValueError(f"schedule has {len(x)} entries, graph has {g.num_nodes} nodes")
    return all(x[v] - x[u] >= w for u, v, w in g.arcs)


def active_set(x: Sequence[int], instance: ProjectInstance, d: int) -> set[int]:
    """Jobs in execution at date ``d``: ``x_i <= d < x_i + p_i``."""
    p = instance.durations
    return {i for i in instance.jobs if x[i] <= d < x[i] + p[i]}


def check_resources(x: Sequence[int], instance: ProjectInstance) -> bool:
    """Resource usage at every job start date stays within capacity."""
    p = instance.durations
    K = instance.num_resources
    jobs = list(instance.jobs)
    for d in sorted({x[v] for v in instance.nodes}):
        usage = [0] * K
        for i in jobs:
            if x[i] <= d < x[i] + p[i]:
                row = instance.demands[i]
                for k in range(K):
                    usage[k] += row[k]
        if any(u > c for u, c in zip(usage, instance.capacities)):
            return False
    return True


def earliest_schedule(g: WeightedDag) -> Schedule:
    pred: list[list[tuple[int, int]]] = [[] for _ in range(g.num_nodes)]
    for u, v, w in g.arcs:
        pred[v].append((u, w))
    x = [0] * g.num_nodes
    for v in g.order():
        best = 0
        for u, w in pred[v]:
            if x[u] + w > best:
                best = x[u] + w
        x[v] = best
    return Schedule(x)


def latest_schedule(g: WeightedDag, horizon: int, sink: int | None = None) -> Schedule:
    """Component-wise maximal schedule whose sink (last node) starts at ``horizon``.

    Nodes without outgoing arcs other than the sink are also capped at
    ``horizon``.
    """
    sink = g.num_nodes - 1 if sink is None else sink
    shortest = earliest_schedule(g)
    if shortest[sink] > horizon:
        raise ValueError(f"horizon {horizon} below minimum makespan {shortest[sink]}")
    succ: list[list[tuple[int, int]]] = [[] for _ in range(g.num_nodes)]
    for u, v, w in g.arcs:
        succ[u].append((v, w))
    x = [horizon] * g.num_nodes
    for u in reversed(g.order()):
        for v, w in succ[u]:
            if x[v] - w < x[u]:
                x[u] = x[v] - w
    if min(x) < 0:
        raise ValueError("horizon too small for a non-negative latest schedule")
    return Schedule(x)


def makespan(x: Schedule | Sequence[int]) -> int:
    return x[len(x) - 1]


def schedule_to_csv(x: Sequence[int]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node_id", "start", "start_original_units"])
    for v, value in enumerate(x):
        w.writerow([v, value, to_units(value)])
    return buf.getvalue()


def schedule_from_csv(text: str) -> Schedule:
    rows = list(csv.DictReader(io.StringIO(text)))
    ids = [int(r["node_id"]) for r in rows]
    if ids != list(range(len(rows))):
        raise InstanceError("schedule CSV must list nodes 0..N-1 in order")
    return Schedule(int(r["start"]) for r in rows)
