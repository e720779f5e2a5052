"""Seeded agreement checks between the layered algorithms and the brute-force oracles."""
from __future__ import annotations

import random
from dataclasses import dataclass

from ..heuristics import best_rule
from ..instances import ProjectInstance, topological_order
from ..layered import baseline_for, check_anchored, q_gamma, static_robust_equivalence
from ..oracle import (adj_opt_bruteforce_serial, anchored_bruteforce, q_gamma_bruteforce, random_deviations,
                      random_instance, random_serial_instance)
from ..sgs import RULES, SequencingDecision, compute_priority, parallel_sgs

CHECKS = ("q-gamma", "anchored", "box", "serial")


@dataclass(frozen=True)
class CheckSummary:
    name: str
    cases: int
    failures: tuple

    @property
    def ok(self) -> bool:
        return not self.failures

    def __str__(self):
        status = "PASS" if self.ok else "FAIL"
        return f"{self.name}: {status} ({self.cases - len(self.failures)}/{self.cases} agree)"


def random_case(seed: int, max_jobs: int = 8, max_gamma: int = 3):
    """Random instance, deviation set and SGS sequencing decision."""
    rng = random.Random(seed)
    n = rng.randint(1, max_jobs)
    inst = random_instance(seed, n, K=rng.randint(1, 2), density=rng.choice((0.0, 0.2, 0.4)))
    ds = random_deviations(seed, inst, rng.randint(0, max_gamma))
    _, _, sigma = parallel_sgs(inst, compute_priority(inst, rng.choice(RULES)))
    return rng, inst, ds, sigma


def perturbed_schedule(rng: random.Random, base, sigma: SequencingDecision, inst: ProjectInstance,
                       spread: int = 4):
    """A schedule of ``sigma`` near ``base``: entries move by a random amount in
    ``[-spread, spread]``, then are lifted to respect every arc."""
    order = topological_order(inst.num_nodes, sigma.arcs)
    pred = {j: [i for i, jj in sigma.arcs if jj == j] for j in inst.nodes}
    z = list(base)
    for j in order:
        lb = max((z[i] + inst.durations[i] for i in pred[j]), default=0)
        z[j] = max(lb, z[j] + rng.randint(-spread, spread))
    return z


def check_q_gamma(seeds: int, start: int = 0, max_jobs: int = 8) -> CheckSummary:
    fails = []
    for seed in range(start, start + seeds):
        _, inst, ds, sigma = random_case(seed, max_jobs)
        a, b = q_gamma(sigma, inst, ds), q_gamma_bruteforce(sigma, inst, ds)
        if a != b:
            fails.append((seed, a, b))
    return CheckSummary("q-gamma", seeds, tuple(fails))


def check_anchored_equivalence(seeds: int, start: int = 0, max_jobs: int = 8) -> CheckSummary:
    fails = []
    for seed in range(start, start + seeds):
        rng, inst, ds, sigma = random_case(seed, max_jobs)
        nodes = list(inst.nodes)
        target = [j for j in nodes if rng.random() < 0.5]
        base = baseline_for(sigma, target, inst, ds)
        z = perturbed_schedule(rng, base, sigma, inst)
        hbar = [j for j in nodes if rng.random() < 0.5]
        a = check_anchored(z, sigma, hbar, inst, ds)
        b = anchored_bruteforce(z, sigma, hbar, inst, ds)
        if a != b:
            fails.append((seed, a, b))
    return CheckSummary("anchored", seeds, tuple(fails))


def check_box_collapse(seeds: int, start: int = 0, max_jobs: int = 8) -> CheckSummary:
    """Full-set anchoring under every budget 1..n agrees with the box set."""
    fails = []
    for seed in range(start, start + seeds):
        rng, inst, ds, sigma = random_case(seed, max_jobs)
        if inst.n == 0:
            continue
        for g in range(1, inst.n + 1):
            dsg = ds.with_gamma(g)
            base = baseline_for(sigma, list(inst.nodes), inst, dsg)
            z = perturbed_schedule(rng, base, sigma, inst, spread=2)
            if not static_robust_equivalence(inst, dsg)(z, sigma):
                fails.append((seed, g))
    return CheckSummary("box", seeds, tuple(fails))


def check_serial_bound(seeds: int, start: int = 0, max_jobs: int = 6) -> CheckSummary:
    fails = []
    for seed in range(start, start + seeds):
        rng = random.Random(seed)
        inst = random_serial_instance(seed, rng.randint(1, max_jobs), density=rng.choice((0.0, 0.3)))
        ds = random_deviations(seed, inst, rng.randint(0, 3))
        opt = adj_opt_bruteforce_serial(inst, ds)
        br = best_rule(inst, ds).q_value
        if opt > br:
            fails.append((seed, opt, br))
    return CheckSummary("serial", seeds, tuple(fails))


RUNNERS = {"q-gamma": check_q_gamma, "anchored": check_anchored_equivalence, "box": check_box_collapse,
           "serial": check_serial_bound}


def run_checks(names, seeds: int, start: int = 0) -> list[CheckSummary]:
    return [RUNNERS[name](seeds, start) for name in names]

