import math

import pytest
from hypothesis import given, settings, strategies as st

from robust_rcpsp.instances import InstanceError, to_half
from robust_rcpsp.layered import q_gamma
from robust_rcpsp.milp import (BINARY, Constraint, MipModel, Variable, WarmStartError, apply_warm_start,
                               big_m_default, build_adj_model, build_anch_model, build_fixed_sequence_model,
                               build_flow_model, check_assignment, pair_set)
from robust_rcpsp.oracle import random_deviations, random_instance
from robust_rcpsp.sgs import ResourceFlow, SequencingDecision, compute_priority, parallel_sgs


def counts(model, prefixes):
    return {p: model.count(p) for p in prefixes}


def test_model_validation():
    x = Variable("x")
    with pytest.raises(ValueError, match="undeclared"):
        MipModel("m", (x,), (Constraint("c", (("y", 1),), ">=", 1),), ())
    with pytest.raises(ValueError, match="duplicate"):
        MipModel("m", (x, Variable("x")), (), ())
    with pytest.raises(ValueError):
        Variable("b", 0, 2, BINARY)
    with pytest.raises(ValueError):
        Constraint("c", (), "!=", 0)


def test_constraint_terms_are_merged_and_sorted():
    c = Constraint("c", (("y", 1), ("x", 2.0), ("y", -1)), "<=", 3.0)
    assert c.terms == (("x", 2),)
    assert c.rhs == 3 and isinstance(c.rhs, int)
    assert c.violation({"x": 2}) == 1


def test_check_assignment_reports_each_kind():
    m = MipModel("m", (Variable("b", 0, 1, BINARY), Variable("x", 0, 4)),
                 (Constraint("c", (("b", 1), ("x", 1)), ">=", 2),), (("x", 1),))
    assert check_assignment(m, {"b": 1, "x": 1}) == []
    assert check_assignment(m, {"b": 0.5, "x": 5}) == ["b=0.5 not binary", "x=5 outside [0, 4]"]
    assert check_assignment(m, {"b": 0, "x": 1}) == ["row c violated by 1"]
    assert check_assignment(m, {"x": 2}) == ["b unassigned"]


def test_big_m_default(chain):
    inst, ds = chain
    assert big_m_default(inst, ds) == to_half(7)
    assert big_m_default(inst) == to_half(5)


def test_pair_set(chain, par):
    assert len(pair_set(chain[0])) == 12
    assert pair_set(chain[0], prune=True) == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    assert pair_set(par[0], prune=True) == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 1), (2, 3)]


def test_chain_model_sizes(chain):
    inst, ds = chain
    m = build_flow_model(inst)
    assert (m.count("s", rows=False), m.count("f", rows=False), m.count("x", rows=False)) == (12, 12, 4)
    assert counts(m, ("fix", "cap", "out", "in", "prec", "trans", "sink")) == {
        "fix": 3, "cap": 12, "out": 3, "in": 3, "prec": 12, "trans": 0, "sink": 0}
    a = build_adj_model(inst, ds)
    assert a.count("x", rows=False) == 8
    assert counts(a, ("prec", "trans", "sink")) == {"prec": 24, "trans": 12, "sink": 1}
    assert a.objective == (("x_1_3", 1),) and not a.maximize
    an = build_anch_model(inst, ds, to_half(6))
    assert counts(an, ("anch", "deadline")) == {"anch": 2, "deadline": 1}
    assert an.maximize and an.objective == (("h_1", 1), ("h_2", 1))


def test_fixed_sequence_model_sizes(par):
    inst, ds = par
    _, _, sigma = parallel_sgs(inst, compute_priority(inst, "SPT"))
    m = build_fixed_sequence_model(sigma, inst, ds, to_half(6))
    assert counts(m, ("prec", "trans")) == {"prec": 10, "trans": 5}
    assert m.count("s", rows=False) == m.count("f", rows=False) == 0
    with pytest.raises(InstanceError):
        build_fixed_sequence_model({(1, 2), (2, 1)}, inst, ds, 10)
    with pytest.raises(ValueError):
        build_fixed_sequence_model(sigma, inst, ds, -1)


def test_missing_precedence_pair(chain):
    inst, _ = chain
    with pytest.raises(InstanceError):
        build_flow_model(inst.with_arcs(inst.arcs + ((3, 0),)), prune=True)


def test_warm_start_examples(chain, par):
    inst, ds = chain
    x, f, sigma = parallel_sgs(inst, compute_priority(inst, "ID"))
    an = apply_warm_start(build_anch_model(inst, ds, to_half(6)), sigma, f, inst, ds)
    assert an.objective_value(an.warm_start) == 0
    with pytest.raises(WarmStartError, match="deadline"):
        apply_warm_start(build_anch_model(inst, ds, 9), sigma, f, inst, ds)

    inst, ds = par
    _, f, sigma = parallel_sgs(inst, compute_priority(inst, "SPT"))
    adj = apply_warm_start(build_adj_model(inst, ds), sigma, f, inst, ds)
    assert adj.objective_value(adj.warm_start) == to_half(6)
    with pytest.raises(WarmStartError, match="fix_0_2"):
        apply_warm_start(build_adj_model(inst, ds), SequencingDecision({(0, 1), (1, 2)}), None, inst, ds)
    pruned = build_adj_model(inst, ds, prune=True)
    with pytest.raises(WarmStartError, match="without a model variable"):
        apply_warm_start(pruned, sigma, ResourceFlow({(3, 0, 0): 1}), inst, ds)


def test_relaxed_drops_integrality(chain):
    inst, ds = chain
    m = build_adj_model(inst, ds)
    r = m.relaxed()
    assert m.num_binaries == 12 and r.num_binaries == 0
    assert {v.name: (v.lower, v.upper) for v in r.variables}["s_1_2"] == (0, 1)
    assert r.constraints == m.constraints


def test_unbounded_start_variables(chain):
    m = build_flow_model(chain[0])
    assert all(v.upper == math.inf for v in m.variables if v.name.startswith("x_"))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(0, 6), gamma=st.integers(0, 3),
       rule=st.sampled_from(("ID", "SPT", "LFT", "MTS")), prune=st.booleans())
def test_sgs_warm_start_is_feasible(seed, n, gamma, rule, prune):
    inst = random_instance(seed, n, K=2, density=0.3)
    ds = random_deviations(seed, inst, gamma)
    _, f, sigma = parallel_sgs(inst, compute_priority(inst, rule))
    adj = apply_warm_start(build_adj_model(inst, ds, prune=prune), sigma, f, inst, ds)
    assert adj.objective_value(adj.warm_start) == q_gamma(sigma, inst, ds)
    flow = apply_warm_start(build_flow_model(inst, prune=prune), sigma, f, inst, ds)
    assert flow.objective_value(flow.warm_start) == q_gamma(sigma, inst, ds.with_gamma(0))
    deadline = q_gamma(sigma, inst, ds)
    anch = apply_warm_start(build_anch_model(inst, ds, deadline, prune=prune), sigma, f, inst, ds)
    assert anch.objective_value(anch.warm_start) == 0
