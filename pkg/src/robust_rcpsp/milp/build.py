"""Flow formulation, its layered adjustable and anchored extensions, and the
fixed-sequence anchoring model.

Canonical names: ``s_i_j`` (sequencing), ``f_i_j_k`` (flow), ``x_g_j``
(start of node ``j`` in layer ``g``), ``h_j`` (anchoring). Row names are
``prec``/``trans`` (layer arcs), ``sink``/``anch`` (vertical arcs),
``deadline``, ``fix`` (precedence arcs forced into sigma), ``cap`` (flow
support) and ``out``/``in`` (flow conservation).
"""
from __future__ import annotations

from typing import Sequence

from ..instances import InstanceError, ProjectInstance, UncertaintySet, transitive_closure
from ..layered import layered_earliest, require_acyclic
from ..sgs import ResourceFlow, SequencingDecision
from .model import BINARY, Constraint, MipModel, Variable, check_assignment


class WarmStartError(ValueError):
    pass


def big_m_default(instance: ProjectInstance, delta_set: UncertaintySet | None = None) -> int:
    """Sum of ``p_i + dhat_i`` over real jobs."""
    dhat = delta_set.dhat if delta_set is not None else (0,) * instance.num_nodes
    return sum(instance.durations[i] + dhat[i] for i in instance.jobs)


def pair_set(instance: ProjectInstance, prune: bool = False) -> list[tuple[int, int]]:
    """All ordered pairs of distinct nodes.

    With ``prune``, pairs entering s, pairs leaving t, and pairs ``(j, i)``
    with ``j`` reachable from ``i`` in the precedence graph are dropped.
    """
    N = instance.num_nodes
    pairs = [(i, j) for i in range(N) for j in range(N) if i != j]
    if not prune:
        return pairs
    s, t = instance.source, instance.sink
    reach = transitive_closure(instance)
    return [(i, j) for i, j in pairs if j != s and i != t and i not in reach[j]]


def _sv(i, j):
    return f"s_{i}_{j}"


def _fv(i, j, k):
    return f"f_{i}_{j}_{k}"


def _xv(g, j):
    return f"x_{g}_{j}"


def _hv(j):
    return f"h_{j}"


def _flow_block(instance: ProjectInstance, pairs: Sequence[tuple[int, int]]):
    variables, rows = [], []
    K = instance.num_resources
    s, t = instance.source, instance.sink
    pair_set_ = set(pairs)
    for i, j in pairs:
        variables.append(Variable(_sv(i, j), 0, 1, BINARY))
        for k in range(K):
            variables.append(Variable(_fv(i, j, k)))
    for i, j in instance.arcs:
        if (i, j) not in pair_set_:
            raise InstanceError(f"precedence arc {(i, j)} missing from the pair set")
        rows.append(Constraint(f"fix_{i}_{j}", ((_sv(i, j), 1),), "=", 1))
    out: dict[tuple[int, int], list] = {}
    inn: dict[tuple[int, int], list] = {}
    for i, j in pairs:
        for k in range(K):
            cap = min(instance.flow_amount(i, k), instance.flow_amount(j, k))
            rows.append(Constraint(f"cap_{i}_{j}_{k}", ((_fv(i, j, k), 1), (_sv(i, j), -cap)), "<=", 0))
            out.setdefault((i, k), []).append((_fv(i, j, k), 1))
            inn.setdefault((j, k), []).append((_fv(i, j, k), 1))
    for k in range(K):
        for i in instance.nodes:
            if i != t:
                rows.append(Constraint(f"out_{i}_{k}", tuple(out.get((i, k), ())), "=", instance.flow_amount(i, k)))
            if i != s:
                rows.append(Constraint(f"in_{i}_{k}", tuple(inn.get((i, k), ())), "=", instance.flow_amount(i, k)))
    return variables, rows


def _layer_block(instance, pairs, dhat, gamma: int, bigm: int, with_sigma: bool):
    """Horizontal and transversal rows for every pair and layer, plus (iii)/(c)."""
    p = instance.durations
    t = instance.sink
    variables = [Variable(_xv(g, j)) for g in range(gamma + 1) for j in instance.nodes]
    rows = []
    for g in range(gamma + 1):
        for i, j in pairs:
            terms = [(_xv(g, j), 1), (_xv(g, i), -1)]
            rhs = p[i]
            if with_sigma:
                terms.append((_sv(i, j), -bigm))
                rhs -= bigm
            rows.append(Constraint(f"prec_{g}_{i}_{j}", tuple(terms), ">=", rhs))
    for g in range(gamma):
        for i, j in pairs:
            terms = [(_xv(g, j), 1), (_xv(g + 1, i), -1)]
            rhs = p[i] + dhat[i]
            if with_sigma:
                terms.append((_sv(i, j), -bigm))
                rhs -= bigm
            rows.append(Constraint(f"trans_{g}_{i}_{j}", tuple(terms), ">=", rhs))
    for g in range(gamma):
        rows.append(Constraint(f"sink_{g}", ((_xv(gamma, t), 1), (_xv(g, t), -1)), ">=", 0))
    return variables, rows


def _anchor_block(instance, gamma: int, deadline: int):
    t = instance.sink
    variables = [Variable(_hv(j), 0, 1, BINARY) for j in instance.jobs]
    rows = []
    for g in range(gamma):
        for j in instance.jobs:
            rows.append(Constraint(f"anch_{g}_{j}", ((_xv(gamma, j), 1), (_xv(g, j), -1), (_hv(j), -deadline)),
                                   ">=", -deadline))
    rows.append(Constraint("deadline", ((_xv(gamma, t), 1),), "<=", deadline))
    return variables, rows


def build_flow_model(instance: ProjectInstance, mbar: int | None = None, prune: bool = False) -> MipModel:
    """Deterministic flow formulation: ``min x_0_t``."""
    if mbar is None:
        mbar = big_m_default(instance)
    pairs = pair_set(instance, prune)
    fv, fr = _flow_block(instance, pairs)
    xv, xr = _layer_block(instance, pairs, (0,) * instance.num_nodes, 0, mbar, True)
    return MipModel(f"flow_{instance.name or 'instance'}", tuple(fv + xv), tuple(fr + xr),
                    ((_xv(0, instance.sink), 1),), kind="flow",
                    meta={"gamma": 0, "bigm": mbar, "pairs": tuple(pairs), "prune": prune})


def build_adj_model(instance: ProjectInstance, delta_set: UncertaintySet, mbar: int | None = None,
                    prune: bool = False) -> MipModel:
    """Adjustable-robust model: ``min x_G_t`` over sequencing decisions."""
    if mbar is None:
        mbar = big_m_default(instance, delta_set)
    G = delta_set.gamma
    pairs = pair_set(instance, prune)
    fv, fr = _flow_block(instance, pairs)
    xv, xr = _layer_block(instance, pairs, delta_set.dhat, G, mbar, True)
    return MipModel(f"adj_{instance.name or 'instance'}_g{G}", tuple(fv + xv), tuple(fr + xr),
                    ((_xv(G, instance.sink), 1),), kind="adj",
                    meta={"gamma": G, "bigm": mbar, "pairs": tuple(pairs), "prune": prune})


def build_anch_model(instance: ProjectInstance, delta_set: UncertaintySet, deadline: int,
                     prune: bool = False) -> MipModel:
    """Anchor-robust model: ``max sum h_j`` with the deadline as the common big-M."""
    if deadline < 0:
        raise ValueError("deadline must be non-negative")
    G = delta_set.gamma
    pairs = pair_set(instance, prune)
    fv, fr = _flow_block(instance, pairs)
    xv, xr = _layer_block(instance, pairs, delta_set.dhat, G, deadline, True)
    hv, hr = _anchor_block(instance, G, deadline)
    return MipModel(f"anch_{instance.name or 'instance'}_g{G}_m{deadline}", tuple(fv + xv + hv),
                    tuple(fr + xr + hr), tuple((_hv(j), 1) for j in instance.jobs), maximize=True,
                    kind="anch", meta={"gamma": G, "bigm": deadline, "deadline": deadline,
                                       "pairs": tuple(pairs), "prune": prune})


def build_fixed_sequence_model(sigma, instance: ProjectInstance, delta_set: UncertaintySet,
                               deadline: int) -> MipModel:
    """Anchoring at a fixed sigma: layer rows only on sigma arcs, no big-M there."""
    if deadline < 0:
        raise ValueError("deadline must be non-negative")
    arcs = sorted(sigma.arcs if isinstance(sigma, SequencingDecision) else set(sigma))
    require_acyclic(arcs, instance.num_nodes)
    G = delta_set.gamma
    xv, xr = _layer_block(instance, arcs, delta_set.dhat, G, 0, False)
    hv, hr = _anchor_block(instance, G, deadline)
    return MipModel(f"fixed_{instance.name or 'instance'}_g{G}_m{deadline}", tuple(xv + hv), tuple(xr + hr),
                    tuple((_hv(j), 1) for j in instance.jobs), maximize=True, kind="fixed",
                    meta={"gamma": G, "deadline": deadline, "sigma": tuple(arcs)})


def warm_start_values(model: MipModel, sigma, flow: ResourceFlow | None, instance: ProjectInstance,
                      delta_set: UncertaintySet) -> dict[str, int]:
    arcs = sigma.arcs if isinstance(sigma, SequencingDecision) else set(sigma)
    G = model.meta.get("gamma", delta_set.gamma)
    dhat = delta_set.dhat if G else (0,) * instance.num_nodes
    x = layered_earliest(arcs, (instance.sink,), instance.durations, dhat, G)
    declared = model.variable_map
    amounts = flow.amounts if flow is not None else {}
    stray = [key for key in amounts if _fv(*key) not in declared]
    if stray:
        raise WarmStartError(f"flow entries without a model variable: {stray[:5]}")
    values: dict[str, int] = {}
    for name in declared:
        tag, *idx = name.split("_")
        idx = [int(v) for v in idx]
        if tag == "s":
            values[name] = int(tuple(idx) in arcs)
        elif tag == "f":
            values[name] = amounts.get(tuple(idx), 0)
        elif tag == "x":
            values[name] = x[idx[0]][idx[1]]
        elif tag == "h":
            values[name] = 0
        else:
            raise WarmStartError(f"unexpected variable {name}")
    return values


def apply_warm_start(model: MipModel, sigma, flow: ResourceFlow | None, instance: ProjectInstance,
                     delta_set: UncertaintySet) -> MipModel:
    """Attach the start ``(sigma, flow, earliest layered schedule, h = 0)``.

    Raises WarmStartError if the assignment violates any row of ``model``.
    """
    values = warm_start_values(model, sigma, flow, instance, delta_set)
    problems = check_assignment(model, values)
    if problems:
        raise WarmStartError("warm start infeasible: " + "; ".join(problems[:5]))
    return model.with_warm_start(values)

