import pytest

from robust_rcpsp.instances import to_half
from robust_rcpsp.layered import check_anchored, q_gamma
from robust_rcpsp.milp import (ExtractionError, SolverResult, apply_warm_start, build_adj_model, build_anch_model,
                               build_fixed_sequence_model, build_flow_model, extract_solution, invoke_solver)
from robust_rcpsp.sgs import compute_priority, parallel_sgs, verify_flow


def started(model, sigma, flow, inst, ds):
    return apply_warm_start(model, sigma, flow, inst, ds).warm_start


def test_extract_from_warm_start_values(par):
    inst, ds = par
    _, f, sigma = parallel_sgs(inst, compute_priority(inst, "SPT"))
    model = build_adj_model(inst, ds)
    values = started(model, sigma, f, inst, ds)
    got = extract_solution(model, SolverResult("optimal", to_half(6), values=values), inst, ds)
    assert got.sigma == sigma
    assert got.flow.amounts == f.amounts
    assert got.anchored == {inst.sink}
    assert got.baseline.makespan == q_gamma(sigma, inst, ds)


def test_noisy_values_are_rounded(par):
    inst, ds = par
    _, f, sigma = parallel_sgs(inst, compute_priority(inst, "SPT"))
    model = build_adj_model(inst, ds)
    values = {k: (v + 1e-7 if k.startswith(("s_", "f_")) else v - 0.3) for k, v in
              started(model, sigma, f, inst, ds).items()}
    got = extract_solution(model, SolverResult("feasible", to_half(6), values=values), inst, ds)
    assert got.sigma == sigma
    assert verify_flow(inst, got.flow, got.sigma)


def test_bad_flow_is_recomputed(par):
    inst, ds = par
    _, f, sigma = parallel_sgs(inst, compute_priority(inst, "SPT"))
    model = build_adj_model(inst, ds)
    values = dict(started(model, sigma, f, inst, ds))
    values["f_1_2_0"] = 0
    got = extract_solution(model, SolverResult("feasible", 12, values=values), inst, ds)
    assert verify_flow(inst, got.flow, got.sigma)


def test_no_incumbent(chain):
    inst, ds = chain
    with pytest.raises(ExtractionError, match="no incumbent"):
        extract_solution(build_adj_model(inst, ds), SolverResult("infeasible"), inst, ds)


def test_budget_mismatch(chain):
    inst, ds = chain
    model = build_adj_model(inst, ds)
    with pytest.raises(ExtractionError, match="budget"):
        extract_solution(model, SolverResult("optimal", 0, values={}), inst, ds.with_gamma(2))


def test_all_h_zero_gives_sink_only(chain):
    inst, ds = chain
    _, f, sigma = parallel_sgs(inst, compute_priority(inst, "ID"))
    model = build_anch_model(inst, ds, to_half(7))
    values = started(model, sigma, f, inst, ds)
    got = extract_solution(model, SolverResult("optimal", 0, values=values), inst, ds)
    assert got.anchored == {inst.sink}
    assert got.num_anchored_jobs == 0


def test_anchored_set_over_deadline_is_rejected(chain):
    inst, ds = chain
    _, f, sigma = parallel_sgs(inst, compute_priority(inst, "ID"))
    model = build_anch_model(inst, ds, to_half(6))
    values = dict(started(model, sigma, f, inst, ds))
    values.update(h_1=1, h_2=1)
    with pytest.raises(ExtractionError, match="deadline"):
        extract_solution(model, SolverResult("feasible", 2, values=values), inst, ds)


def test_fixed_sequence_extraction(chain):
    inst, ds = chain
    _, f, sigma = parallel_sgs(inst, compute_priority(inst, "ID"))
    model = build_fixed_sequence_model(sigma, inst, ds, to_half(6))
    values = dict(started(model, sigma, None, inst, ds))
    values["h_1"] = 1
    got = extract_solution(model, SolverResult("optimal", 1, values=values), inst, ds)
    assert got.sigma == sigma and got.flow is None
    assert got.anchored == {1, inst.sink}
    assert tuple(got.baseline) == (0, 0, 4, 12)


@pytest.mark.solver
def test_live_anchored_chain(chain, backend):
    inst, ds = chain
    model = build_anch_model(inst, ds, to_half(7))
    got = extract_solution(model, invoke_solver(model, backend), inst, ds)
    assert got.anchored == {1, 2, 3}
    assert tuple(got.baseline) == (0, 0, 6, 14)
    assert check_anchored(got.baseline, got.sigma, got.anchored, inst, ds)


@pytest.mark.solver
def test_live_adjustable_par(par, backend):
    inst, ds = par
    model = build_adj_model(inst, ds)
    result = invoke_solver(model, backend)
    got = extract_solution(model, result, inst, ds)
    assert result.status == "optimal" and result.objective == to_half(6)
    assert q_gamma(got.sigma, inst, ds) == to_half(6)


@pytest.mark.solver
def test_live_flow_par(par, backend):
    inst, ds = par
    model = build_flow_model(inst)
    result = invoke_solver(model, backend)
    got = extract_solution(model, result, inst, ds)
    assert result.objective == to_half(5)
    assert got.baseline.makespan == to_half(5)
