"""Rule-based sequencing heuristics and anchoring at a fixed sequence."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Sequence

from .instances import InstanceError, ProjectInstance, UncertaintySet, to_units
from .layered import AnchoredSolution, q_gamma
from .milp import (BackendConfig, SolverError, apply_warm_start, build_fixed_sequence_model, extract_solution,
                   invoke_solver)
from .oracle import MAX_SUBSET_JOBS, max_anchored_bruteforce
from .scheduling import Schedule
from .sgs import RULES, ResourceFlow, SequencingDecision, compute_priority, parallel_sgs

OUTCOME_FIELDS = ("instance", "gamma", "rule", "q_value", "anchored_jobs", "br_time_s", "brs_time_s")


@dataclass(frozen=True)
class HeuristicOutcome:
    sigma: SequencingDecision
    rule: str
    q_value: int
    gamma: int
    schedule: Schedule | None = None
    flow: ResourceFlow | None = None
    elapsed: float = 0.0
    anchored: AnchoredSolution | None = None


def adjustable_heuristic(instance: ProjectInstance, delta_set: UncertaintySet, rule: str,
                         classic_urgency: bool = False) -> HeuristicOutcome:
    """SGS with one priority rule, scored by the worst-case makespan of its sigma."""
    t0 = time.perf_counter()
    x, f, sigma = parallel_sgs(instance, compute_priority(instance, rule, classic_urgency))
    q = q_gamma(sigma, instance, delta_set)
    return HeuristicOutcome(sigma, rule.upper(), q, delta_set.gamma, x, f, time.perf_counter() - t0)


def best_rule(instance: ProjectInstance, delta_set: UncertaintySet, rules: Sequence[str] = RULES,
              classic_urgency: bool = False) -> HeuristicOutcome:
    """Best of the single-rule heuristics; ties go to the earliest rule in ``rules``."""
    t0 = time.perf_counter()
    best = None
    for rule in rules:
        out = adjustable_heuristic(instance, delta_set, rule, classic_urgency)
        if best is None or out.q_value < best.q_value:
            best = out
    if best is None:
        raise ValueError("no priority rule given")
    return HeuristicOutcome(best.sigma, best.rule, best.q_value, best.gamma, best.schedule, best.flow,
                            time.perf_counter() - t0)


def fixed_sequence(instance: ProjectInstance, delta_set: UncertaintySet, sigma, deadline: int,
                   backend: BackendConfig | None = None, time_limit: float | None = None) -> AnchoredSolution:
    """Largest anchored set for a fixed sigma under a baseline deadline.

    Solved with ``backend``; without one, instances of up to 12 jobs go
    through exhaustive subset enumeration.
    """
    sigma = sigma if isinstance(sigma, SequencingDecision) else SequencingDecision(sigma)
    q = q_gamma(sigma, instance, delta_set)
    if deadline < q:
        raise InstanceError(f"deadline {deadline} below worst-case makespan {q} of sigma")
    if backend is None:
        if instance.n > MAX_SUBSET_JOBS:
            raise SolverError(f"no backend configured and {instance.n} jobs exceed the enumeration limit")
        z, anchored = max_anchored_bruteforce(sigma, instance, delta_set, deadline)
        return AnchoredSolution(z, sigma, anchored)
    model = build_fixed_sequence_model(sigma, instance, delta_set, deadline)
    model = apply_warm_start(model, sigma, None, instance, delta_set)
    result = invoke_solver(model, backend, time_limit)
    if not result.has_incumbent:
        raise SolverError(f"fixed-sequence model returned {result.status}")
    return extract_solution(model, result, instance, delta_set).solution


def beta_deadline(q_value: int, beta: float) -> int:
    """``floor(beta * q)`` on the half-unit grid."""
    return math.floor(beta * q_value + 1e-9)


@dataclass(frozen=True)
class SequenceOutcome:
    heuristic: HeuristicOutcome
    solution: AnchoredSolution
    deadline: int
    br_time: float
    brs_time: float

    @property
    def num_anchored_jobs(self) -> int:
        return self.solution.num_anchored_jobs


def best_rule_sequence(instance: ProjectInstance, delta_set: UncertaintySet,
                       backend: BackendConfig | None = None, beta: float = 1.0,
                       time_limit: float | None = None) -> SequenceOutcome:
    """BestRule sigma, then anchoring at deadline ``floor(beta * Q(sigma))``."""
    br = best_rule(instance, delta_set)
    deadline = beta_deadline(br.q_value, beta)
    t0 = time.perf_counter()
    sol = fixed_sequence(instance, delta_set, br.sigma, deadline, backend, time_limit)
    return SequenceOutcome(br, sol, deadline, br.elapsed, time.perf_counter() - t0)


def outcome_row(name: str, outcome: HeuristicOutcome | SequenceOutcome) -> dict:
    """One CSV row; times in seconds, q_value in original units."""
    if isinstance(outcome, SequenceOutcome):
        h = outcome.heuristic
        return {"instance": name, "gamma": h.gamma, "rule": h.rule, "q_value": to_units(h.q_value),
                "anchored_jobs": outcome.num_anchored_jobs, "br_time_s": f"{outcome.br_time:.6f}",
                "brs_time_s": f"{outcome.brs_time:.6f}"}
    return {"instance": name, "gamma": outcome.gamma, "rule": outcome.rule, "q_value": to_units(outcome.q_value),
            "anchored_jobs": "", "br_time_s": f"{outcome.elapsed:.6f}", "brs_time_s": ""}
