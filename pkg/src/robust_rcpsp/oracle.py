"""Brute-force reference implementations for small instances.

These enumerate the uncertainty set, anchored subsets or job permutations
directly and never go through the layered graph (except where the
anchored-subset search needs a feasibility test for a given subset).
"""
from __future__ import annotations

import itertools
import random
from typing import Iterable, Iterator, Sequence

from .instances import InstanceError, ProjectInstance, UncertaintySet, topological_order
from .layered import baseline_for, q_gamma
from .scheduling import Schedule

MAX_ENUM_JOBS = 25
MAX_SUBSET_JOBS = 12
MAX_SERIAL_JOBS = 8


def _guard(instance_or_n, limit: int = MAX_ENUM_JOBS) -> None:
    n = instance_or_n if isinstance(instance_or_n, int) else instance_or_n.n
    if n > limit:
        raise ValueError(f"brute force refused for {n} jobs (limit {limit})")


def enumerate_deviations(delta_set: UncertaintySet) -> Iterator[tuple[int, ...]]:
    """All deviation vectors (indexed over nodes), smallest subsets first."""
    n = delta_set.num_jobs
    _guard(n)
    jobs = range(1, n + 1)
    for size in range(min(delta_set.gamma, n) + 1):
        for subset in itertools.combinations(jobs, size):
            delta = [0] * (n + 2)
            for i in subset:
                delta[i] = delta_set.dhat[i]
            yield tuple(delta)


def _earliest(num_nodes: int, order, pred, p) -> list[int]:
    x = [0] * num_nodes
    for j in order:
        x[j] = max((x[i] + p[i] for i in pred[j]), default=0)
    return x


def _structure(sigma, num_nodes: int):
    arcs = sigma.arcs if hasattr(sigma, "arcs") else set(sigma)
    order = topological_order(num_nodes, arcs)
    pred: list[list[int]] = [[] for _ in range(num_nodes)]
    for i, j in arcs:
        pred[j].append(i)
    return order, pred


def q_gamma_bruteforce(sigma, instance: ProjectInstance, delta_set: UncertaintySet) -> int:
    _guard(instance)
    order, pred = _structure(sigma, instance.num_nodes)
    p = instance.durations
    worst = 0
    for delta in enumerate_deviations(delta_set):
        x = _earliest(instance.num_nodes, order, pred, [a + b for a, b in zip(p, delta)])
        worst = max(worst, x[instance.sink])
    return worst


def anchored_bruteforce(z: Sequence[int], sigma, hbar: Iterable[int], instance: ProjectInstance,
                        delta_set: UncertaintySet) -> bool:
    """Anchoring checked scenario by scenario.

    For each deviation, anchored nodes are pinned to their baseline value and
    the others take earliest start times; the set is anchored iff no pinned
    node is ever pushed past its baseline.
    """
    _guard(instance)
    order, pred = _structure(sigma, instance.num_nodes)
    fixed = set(hbar)
    p = instance.durations
    for delta in enumerate_deviations(delta_set):
        q = [a + b for a, b in zip(p, delta)]
        x = [0] * instance.num_nodes
        for j in order:
            lb = max((x[i] + q[i] for i in pred[j]), default=0)
            if j in fixed:
                if lb > z[j]:
                    return False
                x[j] = z[j]
            else:
                x[j] = lb
    return True


def max_anchored_bruteforce(sigma, instance: ProjectInstance, delta_set: UncertaintySet, deadline: int
                            ) -> tuple[Schedule, frozenset]:
    """Largest job subset anchorable together with the sink within ``deadline``.

    Returns the baseline and the anchored set (sink included).  Subsets are
    tried largest first, lexicographically within a size.
    """
    _guard(instance, MAX_SUBSET_JOBS)
    t = instance.sink
    if q_gamma(sigma, instance, delta_set) > deadline:
        raise InstanceError("deadline below the worst-case makespan of sigma")
    jobs = list(instance.jobs)
    for size in range(len(jobs), -1, -1):
        for subset in itertools.combinations(jobs, size):
            hbar = (*subset, t)
            z = baseline_for(sigma, hbar, instance, delta_set)
            if z.makespan <= deadline:
                return z, frozenset(hbar)
    raise AssertionError("unreachable: the empty subset is always feasible")


def is_serial(instance: ProjectInstance) -> bool:
    return (instance.num_resources == 1 and instance.capacities[0] == 1
            and all(instance.demands[i][0] == 1 for i in instance.jobs))


def linear_extensions(instance: ProjectInstance) -> Iterator[tuple[int, ...]]:
    """Job orders compatible with the precedence arcs."""
    pred = [set(instance.predecessors[j]) - {instance.source} for j in instance.nodes]
    jobs = list(instance.jobs)

    def extend(prefix: list[int], placed: set[int]):
        if len(prefix) == len(jobs):
            yield tuple(prefix)
            return
        for j in jobs:
            if j not in placed and pred[j] <= placed:
                prefix.append(j)
                placed.add(j)
                yield from extend(prefix, placed)
                placed.discard(j)
                prefix.pop()

    yield from extend([], set())


def serial_sequencing(instance: ProjectInstance, order: Sequence[int]) -> set[tuple[int, int]]:
    """Precedence arcs plus the single resource unit's path s -> order -> t."""
    chain = [instance.source, *order, instance.sink]
    return set(instance.arcs) | set(zip(chain, chain[1:]))


def adj_opt_bruteforce_serial(instance: ProjectInstance, delta_set: UncertaintySet) -> int:
    """Adjustable-robust optimum when every job needs the one unit of one resource."""
    if not is_serial(instance):
        raise ValueError("serial oracle needs one resource of capacity 1 and unit demands")
    _guard(instance, MAX_SERIAL_JOBS)
    return min(q_gamma_bruteforce(serial_sequencing(instance, order), instance, delta_set)
               for order in linear_extensions(instance))


def random_instance(seed: int, n: int, K: int = 1, density: float = 0.3, slack: float = 0.3,
                    max_duration: int = 10, max_demand: int = 5) -> ProjectInstance:
    """Seeded random instance; durations in [1, max_duration] whole units.

    Arc ``(i, j)`` for ``i < j`` appears with probability ``density``; jobs
    without predecessors hang off s, jobs without successors feed t.
    Capacity of each resource is ``max demand + slack * (total - max demand)``.
    """
    rng = random.Random(seed)
    t = n + 1
    arcs = set()
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < density:
                arcs.add((i, j))
    has_pred = {j for _, j in arcs}
    has_succ = {i for i, _ in arcs}
    for j in range(1, n + 1):
        if j not in has_pred:
            arcs.add((0, j))
        if j not in has_succ:
            arcs.add((j, t))
    if n == 0:
        arcs.add((0, t))
    durations = [0] + [2 * rng.randint(1, max_duration) for _ in range(n)] + [0]
    demands = [[0] * K] + [[rng.randint(0, max_demand) for _ in range(K)] for _ in range(n)] + [[0] * K]
    caps = []
    for k in range(K):
        col = [demands[i][k] for i in range(1, n + 1)]
        peak, total = max(col, default=0), sum(col)
        caps.append(peak + int(round(slack * (total - peak))))
    return ProjectInstance(n=n, arcs=tuple(arcs), durations=tuple(durations),
                           demands=tuple(tuple(r) for r in demands), capacities=tuple(caps),
                           name=f"rand{seed}_n{n}")


def random_serial_instance(seed: int, n: int, density: float = 0.3) -> ProjectInstance:
    base = random_instance(seed, n, K=1, density=density)
    return ProjectInstance(n=n, arcs=base.arcs, durations=base.durations,
                           demands=((0,),) + ((1,),) * n + ((0,),), capacities=(1,),
                           name=f"serial{seed}_n{n}")


def random_deviations(seed: int, instance: ProjectInstance, gamma: int, max_dev: int = 6) -> UncertaintySet:
    rng = random.Random(seed * 7919 + 17)
    dhat = [rng.randint(0, max_dev) for _ in instance.jobs]
    return UncertaintySet((0, *dhat, 0), min(gamma, instance.n))
