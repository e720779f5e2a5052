"""Layered graph for budgeted uncertainty: worst-case makespan and anchored sets.

Layer ``g`` holds a copy ``i@g`` of every node.  Horizontal arcs
``(i@g, j@g)`` weigh ``p_i``; transversal arcs ``(i@(g+1), j@g)`` weigh
``p_i + dhat_i``; vertical arcs ``(j@g, j@G)`` weigh 0 for anchored ``j``.
Walking down from the top layer ``G`` spends one unit of budget per
transversal arc, hence the top layer sees the worst case.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Collection, Iterable, Sequence

from .instances import InstanceError, ProjectInstance, UncertaintySet, topological_order
from .scheduling import Schedule, WeightedDag
from .sgs import SequencingDecision


@dataclass(frozen=True)
class LayeredGraph:
    gamma: int
    num_base_nodes: int
    dag: WeightedDag
    horizontal: int
    transversal: int
    vertical: int

    def node(self, j: int, g: int) -> int:
        return g * self.num_base_nodes + j

    def split(self, u: int) -> tuple[int, int]:
        g, j = divmod(u, self.num_base_nodes)
        return j, g

    @property
    def num_nodes(self) -> int:
        return self.dag.num_nodes

    @property
    def num_arcs(self) -> int:
        return len(self.dag.arcs)

    def to_dot(self) -> str:
        lines = ["digraph layered {"]
        for u in range(self.num_nodes):
            j, g = self.split(u)
            lines.append(f'  n{u} [label="{j}@{g}"];')
        for u, v, w in self.dag.arcs:
            lines.append(f'  n{u} -> n{v} [label="{w}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class AnchoredSolution:
    baseline: Schedule
    sigma: SequencingDecision
    anchored: frozenset

    @property
    def num_anchored_jobs(self) -> int:
        """Anchored real jobs, i.e. excluding the dummies."""
        n = len(self.baseline) - 2
        return sum(1 for j in self.anchored if 1 <= j <= n)


@dataclass(frozen=True)
class AnchorViolation:
    """Why a baseline fails the layered test."""

    kind: str  # "horizontal" or "vertical"
    arc: tuple
    required: int
    actual: int

    def __str__(self):
        return f"{self.kind} arc {self.arc}: needs {self.required}, baseline gives {self.actual}"


def _arcs(sigma) -> Collection[tuple[int, int]]:
    return sigma.arcs if isinstance(sigma, SequencingDecision) else set(sigma)


def build_layered(sigma, hbar: Iterable[int], p: Sequence[int], dhat: Sequence[int], gamma: int) -> LayeredGraph:
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    N = len(p)
    arcs = sorted(_arcs(sigma))
    topological_order(N, arcs)
    hbar = sorted(set(hbar))
    out = []
    for g in range(gamma + 1):
        for i, j in arcs:
            out.append((g * N + i, g * N + j, p[i]))
    for g in range(gamma):
        for i, j in arcs:
            out.append(((g + 1) * N + i, g * N + j, p[i] + dhat[i]))
    for g in range(gamma):
        for j in hbar:
            out.append((g * N + j, gamma * N + j, 0))
    return LayeredGraph(
        gamma=gamma, num_base_nodes=N, dag=WeightedDag((gamma + 1) * N, tuple(out)),
        horizontal=(gamma + 1) * len(arcs), transversal=gamma * len(arcs), vertical=gamma * len(hbar),
    )


def _preds(num_nodes: int, arcs) -> list[list[int]]:
    pred: list[list[int]] = [[] for _ in range(num_nodes)]
    for i, j in arcs:
        pred[j].append(i)
    return pred


def layered_earliest(sigma, hbar: Iterable[int], p: Sequence[int], dhat: Sequence[int], gamma: int
                     ) -> list[list[int]]:
    """Earliest schedule of the layered graph, as ``x[g][j]``.

    Dynamic programming over a topological order of ``sigma``; every node
    copy starts no earlier than 0.
    """
    N = len(p)
    arcs = _arcs(sigma)
    order = topological_order(N, arcs)
    pred = _preds(N, arcs)
    anchored = set(hbar)
    x = [[0] * N for _ in range(gamma + 1)]
    for j in order:
        preds = pred[j]
        for g in range(gamma + 1):
            best = 0
            row, up = x[g], x[g + 1] if g < gamma else None
            for i in preds:
                v = row[i] + p[i]
                if v > best:
                    best = v
                if up is not None:
                    v = up[i] + p[i] + dhat[i]
                    if v > best:
                        best = v
            x[g][j] = best
        if j in anchored:
            top = x[gamma][j]
            for g in range(gamma):
                if x[g][j] > top:
                    top = x[g][j]
            x[gamma][j] = top
    return x


def q_gamma(sigma, instance: ProjectInstance, delta_set: UncertaintySet) -> int:
    """Worst-case makespan of ``sigma`` over the budgeted set (half-units)."""
    x = layered_earliest(sigma, (instance.sink,), instance.durations, delta_set.dhat, delta_set.gamma)
    return x[delta_set.gamma][instance.sink]


def anchor_violation(z: Sequence[int], sigma, hbar: Iterable[int], instance: ProjectInstance,
                     delta_set: UncertaintySet) -> AnchorViolation | None:
    """First arc showing that ``hbar`` is not anchored w.r.t. ``(z, sigma)``.

    Nodes of ``hbar`` are pinned to ``z`` in the top layer; every other layered
    node takes its earliest value; then each vertical arc into a pinned node is
    checked.  Non-anchored nodes may start before their baseline value.
    """
    p, dhat, G = instance.durations, delta_set.dhat, delta_set.gamma
    N = instance.num_nodes
    if len(z) != N:
        raise ValueError(f"baseline has {len(z)} entries, instance has {N} nodes")
    arcs = _arcs(sigma)
    for i, j in sorted(arcs):
        if z[j] - z[i] < p[i]:
            return AnchorViolation("horizontal", (i, j), z[i] + p[i], z[j])
    if G == 0:
        return None
    order = topological_order(N, arcs)
    pred = _preds(N, arcs)
    pinned = set(hbar)
    x = [[0] * N for _ in range(G + 1)]
    for j in order:
        x[G][j] = z[j] if j in pinned else max((x[G][i] + p[i] for i in pred[j]), default=0)
        for g in range(G):
            best = 0
            row, up = x[g], x[g + 1]
            for i in pred[j]:
                v = row[i] + p[i]
                if v > best:
                    best = v
                v = up[i] + p[i] + dhat[i]
                if v > best:
                    best = v
            x[g][j] = best
    for j in sorted(pinned):
        for g in range(G):
            if x[g][j] > z[j]:
                return AnchorViolation("vertical", ((j, g), (j, G)), x[g][j], z[j])
    return None


def check_anchored(z: Sequence[int], sigma, hbar: Iterable[int], instance: ProjectInstance,
                   delta_set: UncertaintySet) -> bool:
    return anchor_violation(z, sigma, hbar, instance, delta_set) is None


def static_robust_equivalence(instance: ProjectInstance, delta_set: UncertaintySet):
    """Evaluator ``(z, sigma) -> bool``: does full anchoring under the budget
    agree with full anchoring under the box set?"""
    if delta_set.gamma < 1:
        raise ValueError("the comparison needs a budget of at least 1")
    box = delta_set.with_gamma(instance.n)
    full = list(instance.nodes)

    def evaluate(z: Sequence[int], sigma) -> bool:
        return (check_anchored(z, sigma, full, instance, delta_set)
                == check_anchored(z, sigma, full, instance, box))

    return evaluate


def baseline_for(sigma, anchored: Iterable[int], instance: ProjectInstance, delta_set: UncertaintySet
                 ) -> Schedule:
    """Top layer of the earliest layered schedule: the minimal baseline
    anchoring ``anchored`` (pass the sink to bound the makespan)."""
    x = layered_earliest(sigma, anchored, instance.durations, delta_set.dhat, delta_set.gamma)
    return Schedule(x[delta_set.gamma])


def require_acyclic(sigma, num_nodes: int) -> None:
    try:
        topological_order(num_nodes, _arcs(sigma))
    except InstanceError as exc:
        raise InstanceError("sequencing decision is cyclic") from exc
