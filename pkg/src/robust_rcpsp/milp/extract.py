"""Decode solver values into verified sequencing decisions and baselines."""
from __future__ import annotations

from dataclasses import dataclass

from ..instances import ProjectInstance, UncertaintySet
from ..layered import AnchoredSolution, anchor_violation, baseline_for
from ..scheduling import Schedule
from ..sgs import ResourceFlow, SequencingDecision, find_flow, flow_violations
from .backends import SolverResult
from .model import MipModel

THRESHOLD = 0.5


class ExtractionError(ValueError):
    def __init__(self, message: str, witness=None):
        super().__init__(message if witness is None else f"{message}: {witness}")
        self.witness = witness


@dataclass(frozen=True)
class ExtractedSolution:
    sigma: SequencingDecision
    baseline: Schedule
    anchored: frozenset
    flow: ResourceFlow | None

    @property
    def solution(self) -> AnchoredSolution:
        return AnchoredSolution(self.baseline, self.sigma, self.anchored)

    @property
    def num_anchored_jobs(self) -> int:
        return self.solution.num_anchored_jobs


def _indexed(values, tag: str):
    for name, value in values.items():
        head, *idx = name.split("_")
        if head == tag:
            yield tuple(int(v) for v in idx), value


def extract_solution(model: MipModel, result: SolverResult, instance: ProjectInstance,
                     delta_set: UncertaintySet) -> ExtractedSolution:
    """Sequencing decision, canonical baseline and anchored set (sink included).

    Binaries are rounded at 0.5.  The flow is taken from the solver when it
    verifies, otherwise recomputed on sigma.  The baseline is the earliest
    layered schedule for the anchored set, so it never depends on solver
    round-off; it is re-checked against the anchoring test and the deadline.
    """
    if not result.has_incumbent:
        raise ExtractionError(f"no incumbent to extract (status {result.status})")
    values = result.values
    kind = model.kind
    gamma = model.meta.get("gamma", delta_set.gamma)
    if kind != "flow" and gamma != delta_set.gamma:
        raise ExtractionError(f"model built for budget {gamma}, got {delta_set.gamma}")
    ds = delta_set.with_gamma(gamma) if kind == "flow" else delta_set
    t = instance.sink

    flow = None
    if kind == "fixed":
        sigma = SequencingDecision(model.meta["sigma"])
    else:
        chosen = {idx for idx, v in _indexed(values, "s") if v >= THRESHOLD}
        sigma = SequencingDecision(set(instance.arcs) | chosen)
        rounded = ResourceFlow({idx: round(v) for idx, v in _indexed(values, "f") if v >= THRESHOLD})
        if not sigma.is_acyclic(instance.num_nodes):
            # zero-duration nodes can close a cycle the big-M rows tolerate
            sigma = SequencingDecision(set(instance.arcs) | rounded.support())
            if not sigma.is_acyclic(instance.num_nodes):
                raise ExtractionError("extracted sequencing decision is cyclic", sorted(chosen))
        if not flow_violations(instance, rounded, sigma):
            flow = rounded
        else:
            flow = find_flow(instance, sigma)
            if flow is None:
                raise ExtractionError("no resource flow supports the extracted sigma",
                                      flow_violations(instance, rounded, sigma)[:3])

    hjobs = {idx[0] for idx, v in _indexed(values, "h") if v >= THRESHOLD} if kind in ("anch", "fixed") else set()
    anchored = frozenset(hjobs | {t})
    z = baseline_for(sigma, anchored, instance, ds)
    witness = anchor_violation(z, sigma, anchored, instance, ds)
    if witness is not None:
        raise ExtractionError("baseline fails the anchoring test", witness)
    deadline = model.meta.get("deadline")
    if deadline is not None and z.makespan > deadline:
        raise ExtractionError(f"anchored set needs makespan {z.makespan} > deadline {deadline}",
                              sorted(hjobs))
    return ExtractedSolution(sigma, z, anchored, flow)
