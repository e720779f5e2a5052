"""Priority rules, Parallel SGS with resource-flow output, sequencing decisions."""
from __future__ import annotations

import bisect
import heapq
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

from .instances import InstanceError, ProjectInstance, topological_order, transitive_closure
from .scheduling import Schedule, earliest_schedule, latest_schedule, precedence_dag

RULES = ("ID", "SPT", "MTS", "LFT", "LST", "MSLK", "GRPW")


@dataclass(frozen=True)
class PriorityVector:
    """``pi[i]`` for every node (dummy entries unused).

    Time-based rules (SPT, LFT, LST, MSLK, GRPW) are in half-units; only the
    ordering matters to the SGS.
    """

    pi: tuple
    rule: str


@dataclass(frozen=True)
class ResourceFlow:
    """Sparse flow ``f[(i, j, k)] = amount`` with positive amounts only."""

    amounts: Mapping[tuple[int, int, int], int]

    def __post_init__(self):
        object.__setattr__(self, "amounts", {key: int(v) for key, v in sorted(self.amounts.items()) if v})

    def support(self) -> set[tuple[int, int]]:
        return {(i, j) for i, j, _ in self.amounts}

    def to_text(self) -> str:
        return "".join(f"{i} {j} {k} {a}\n" for (i, j, k), a in self.amounts.items())

    @classmethod
    def from_text(cls, text: str) -> "ResourceFlow":
        amounts = {}
        for line in text.splitlines():
            if line.strip():
                i, j, k, a = (int(v) for v in line.split())
                amounts[(i, j, k)] = amounts.get((i, j, k), 0) + a
        return cls(amounts)


@dataclass(frozen=True)
class SequencingDecision:
    """The arc set ``A_sigma`` over the node set of an instance."""

    arcs: frozenset

    def __init__(self, arcs: Iterable[tuple[int, int]]):
        object.__setattr__(self, "arcs", frozenset((int(i), int(j)) for i, j in arcs))

    def __contains__(self, arc) -> bool:
        return arc in self.arcs

    def __iter__(self):
        return iter(sorted(self.arcs))

    def __len__(self):
        return len(self.arcs)

    @cached_property
    def sorted_arcs(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.arcs))

    def is_acyclic(self, num_nodes: int) -> bool:
        try:
            topological_order(num_nodes, self.arcs)
        except InstanceError:
            return False
        return True

    def to_text(self) -> str:
        return "".join(f"{i} {j}\n" for i, j in self.sorted_arcs)

    @classmethod
    def from_text(cls, text: str) -> "SequencingDecision":
        return cls(tuple(int(v) for v in line.split()) for line in text.splitlines() if line.strip())


def compute_priority(instance: ProjectInstance, rule: str, classic_urgency: bool = False) -> PriorityVector:
    """Static priority of every job; the SGS picks the *highest* value.

    With ``classic_urgency`` LFT and LST are negated, i.e. the job with the
    smallest latest finish/start time is preferred.
    """
    p = instance.durations
    N = instance.num_nodes
    rule = rule.upper()
    if rule == "ID":
        pi = list(range(N))
    elif rule == "SPT":
        pi = [-p[i] for i in range(N)]
    elif rule == "MTS":
        reach = transitive_closure(instance)
        pi = [len(reach[i]) for i in range(N)]
    elif rule == "GRPW":
        pi = [p[i] + sum(p[j] for j in instance.successors[i]) for i in range(N)]
    elif rule in ("LFT", "LST", "MSLK"):
        g = precedence_dag(instance)
        early = earliest_schedule(g)
        late = latest_schedule(g, early.makespan, sink=instance.sink)
        if rule == "LFT":
            pi = [late[i] + p[i] for i in range(N)]
        elif rule == "LST":
            pi = list(late.start)
        else:
            pi = [-(late[i] - early[i]) for i in range(N)]
        if classic_urgency and rule in ("LFT", "LST"):
            pi = [-v for v in pi]
    else:
        raise ValueError(f"unknown priority rule {rule!r}; expected one of {RULES}")
    return PriorityVector(tuple(pi), rule)


def parallel_sgs(instance: ProjectInstance, priority: PriorityVector
                 ) -> tuple[Schedule, ResourceFlow, SequencingDecision]:
    """Parallel schedule generation with resource-flow bookkeeping.

    At each decision time, the eligible jobs are those whose predecessors
    are all completed and whose demand fits in the free capacity; the one
    with highest priority (lowest index on ties) starts.  Time jumps to the
    next completion when nothing is eligible.  A starting job takes its units
    from completed jobs in order of (completion time, index) and then from the
    source.
    """
    K = instance.num_resources
    p = instance.durations
    s, t = instance.source, instance.sink
    pi = priority.pi
    for i in instance.jobs:
        for k in range(K):
            if instance.demands[i][k] > instance.capacities[k]:
                raise InstanceError(f"job {i} needs more of resource {k} than available")

    start = [0] * instance.num_nodes
    finish = [0] * instance.num_nodes
    flow: dict[tuple[int, int, int], int] = {}
    # units held by completed jobs and by the source, per resource
    held: dict[int, list[int]] = {}
    source_pool = list(instance.capacities)
    free = list(instance.capacities)

    missing_preds = [len(instance.predecessors[v]) for v in instance.nodes]
    for j in instance.successors[s]:
        missing_preds[j] -= 1
    ready = {j for j in instance.jobs if missing_preds[j] == 0}
    running: list[tuple[int, int]] = []  # heap of (finish, job)
    completed: list[tuple[int, int]] = []  # (finish, job), kept sorted
    unscheduled = set(instance.jobs)
    now = 0

    def complete(j: int) -> None:
        bisect.insort(completed, (finish[j], j))
        held[j] = list(instance.demands[j])
        for k in range(K):
            free[k] += instance.demands[j][k]
        for w in instance.successors[j]:
            missing_preds[w] -= 1
            if missing_preds[w] == 0 and w != t:
                ready.add(w)

    def draw(j: int) -> None:
        for k in range(K):
            need = instance.demands[j][k]
            if not need:
                continue
            for _, i in completed:
                have = held[i][k]
                if have:
                    take = min(have, need)
                    held[i][k] -= take
                    flow[(i, j, k)] = flow.get((i, j, k), 0) + take
                    need -= take
                    if not need:
                        break
            if need:
                source_pool[k] -= need
                flow[(s, j, k)] = flow.get((s, j, k), 0) + need
            free[k] -= instance.demands[j][k]

    while unscheduled:
        while running and running[0][0] <= now:
            _, j = heapq.heappop(running)
            complete(j)
        eligible = [j for j in ready
                    if all(instance.demands[j][k] <= free[k] for k in range(K))]
        if eligible:
            j = max(eligible, key=lambda v: (pi[v], -v))
            ready.discard(j)
            unscheduled.discard(j)
            start[j] = now
            finish[j] = now + p[j]
            draw(j)
            heapq.heappush(running, (finish[j], j))
            continue
        if not running:
            raise InstanceError("parallel SGS stalled: no eligible and no running job")
        now = running[0][0]

    while running:
        _, j = heapq.heappop(running)
        complete(j)
    start[t] = max((finish[i] for i in instance.predecessors[t]), default=0)
    for k in range(K):
        for _, i in completed:
            if held[i][k]:
                flow[(i, t, k)] = flow.get((i, t, k), 0) + held[i][k]
                held[i][k] = 0
        if source_pool[k]:
            flow[(s, t, k)] = flow.get((s, t, k), 0) + source_pool[k]
            source_pool[k] = 0

    f = ResourceFlow(flow)
    sigma = SequencingDecision(set(instance.arcs) | f.support())
    return Schedule(start), f, sigma


def verify_flow(instance: ProjectInstance, f: ResourceFlow, sigma: SequencingDecision) -> bool:
    """Whether ``(sigma, f)`` satisfies the flow-formulation constraints (2)-(7)."""
    return not flow_violations(instance, f, sigma)


def flow_violations(instance: ProjectInstance, f: ResourceFlow, sigma: SequencingDecision) -> list[str]:
    problems = []
    N, K = instance.num_nodes, instance.num_resources
    s, t = instance.source, instance.sink
    missing = set(instance.arcs) - sigma.arcs
    if missing:
        problems.append(f"precedence arcs missing from sigma: {sorted(missing)}")
    if any(i == j for i, j in sigma.arcs):
        problems.append("sigma contains a self-loop")
    if not sigma.is_acyclic(N):
        problems.append("sigma is cyclic")
    out = [[0] * K for _ in range(N)]
    inn = [[0] * K for _ in range(N)]
    for (i, j, k), a in f.amounts.items():
        if not (0 <= i < N and 0 <= j < N and 0 <= k < K) or i == j:
            problems.append(f"flow entry {(i, j, k)} out of range")
            continue
        if a < 0:
            problems.append(f"negative flow on {(i, j, k)}")
        cap = min(instance.flow_amount(i, k), instance.flow_amount(j, k))
        if a > cap * ((i, j) in sigma.arcs):
            problems.append(f"flow {a} on {(i, j, k)} exceeds {cap if (i, j) in sigma.arcs else 0}")
        out[i][k] += a
        inn[j][k] += a
    for k in range(K):
        for i in instance.nodes:
            need = instance.flow_amount(i, k)
            if i != t and out[i][k] != need:
                problems.append(f"outflow of node {i} for resource {k} is {out[i][k]}, expected {need}")
            if i != s and inn[i][k] != need:
                problems.append(f"inflow of node {i} for resource {k} is {inn[i][k]}, expected {need}")
    return problems


def sequencing_from_flow(instance: ProjectInstance, f: ResourceFlow) -> SequencingDecision:
    sigma = SequencingDecision(set(instance.arcs) | f.support())
    if not sigma.is_acyclic(instance.num_nodes):
        raise InstanceError("flow support induces a cycle")
    return sigma


def find_flow(instance: ProjectInstance, sigma: SequencingDecision) -> ResourceFlow | None:
    """A resource flow supported on ``sigma``, or None if ``sigma`` is not in Sigma.

    Each resource is an independent feasibility problem: node ``i`` must pass
    exactly ``r~_ik`` units, arcs of ``sigma`` carry at most
    ``min(r~_ik, r~_jk)``.  Solved as a transportation problem with networkx.
    """
    import networkx as nx

    s, t = instance.source, instance.sink
    amounts: dict[tuple[int, int, int], int] = {}
    for k in range(instance.num_resources):
        g = nx.DiGraph()
        total = 0
        for i in instance.nodes:
            amt = instance.flow_amount(i, k)
            if i != t and amt:
                g.add_node(("out", i), demand=-amt)
                total += amt
            if i != s and amt:
                g.add_node(("in", i), demand=amt)
        for i, j in sigma.arcs:
            cap = min(instance.flow_amount(i, k), instance.flow_amount(j, k))
            if cap and i != t and j != s:
                g.add_edge(("out", i), ("in", j), capacity=cap)
        if total == 0:
            continue
        try:
            _, flow_dict = nx.network_simplex(g)
        except nx.NetworkXUnfeasible:
            return None
        for (tag, i), targets in flow_dict.items():
            if tag != "out":
                continue
            for (_, j), a in targets.items():
                if a:
                    amounts[(i, j, k)] = a
    return ResourceFlow(amounts)
