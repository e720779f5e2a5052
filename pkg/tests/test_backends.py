import sys
import textwrap

import pytest

from conftest import DATA, J301
from robust_rcpsp.instances import build_uncertainty, read_psplib
from robust_rcpsp.milp import (BINARY, BackendConfig, Constraint, MipModel, SolverError, SolverResult, Variable,
                               build_adj_model, cbc_backend, default_backend, highs_backend, invoke_solver,
                               load_backend_config)
from robust_rcpsp.milp.backends import (parse_cbc_solution, parse_highs_solution, parse_log_bounds,
                                        parse_xml_solution)

OUT = DATA / "solver_output"

UNIT = MipModel("unit", (Variable("x"), Variable("b", 0, 1, BINARY)),
                (Constraint("c1", (("x", 1), ("b", 1)), ">=", 1.5),), (("x", 1), ("b", 2)))
INFEASIBLE = MipModel("inf", (Variable("x", 0, 1),), (Constraint("c1", (("x", 1),), ">=", 2),), (("x", 1),))


def read(name):
    return (OUT / name).read_text()


def test_cbc_solution_files():
    assert parse_cbc_solution(read("cbc_unit.sol")) == ("optimal", 1.5, {"b": 0.0, "x": 1.5})
    assert parse_cbc_solution(read("cbc_inf.sol")) == ("infeasible", None, {})
    assert parse_cbc_solution(read("cbc_timeout.sol")) == ("timeout", None, {})
    with pytest.raises(SolverError):
        parse_cbc_solution("")
    with pytest.raises(SolverError, match="unrecognized"):
        parse_cbc_solution("Something odd\n")


def test_cbc_feasible_on_time_limit():
    status, obj, values = parse_cbc_solution("Stopped on time - objective value 12.00000000\n      0 x  12  0\n")
    assert (status, obj, values) == ("timeout", 12.0, {"x": 12.0})


def test_highs_solution_files():
    assert parse_highs_solution(read("highs_unit.sol")) == ("optimal", 1.5, {"b": 0.0, "x": 1.5})
    assert parse_highs_solution(read("highs_inf.sol")) == ("infeasible", None, {})
    assert parse_highs_solution(read("highs_timeout.sol")) == ("timeout", None, {})
    with pytest.raises(SolverError):
        parse_highs_solution("nothing here\n")


def test_xml_solution():
    text = textwrap.dedent("""\
        <CPLEXSolution><header solutionStatusString="integer optimal solution" objectiveValue="4"/>
        <variables><variable name="x" value="4"/><variable name="b" value="1"/></variables></CPLEXSolution>""")
    assert parse_xml_solution(text) == ("optimal", 4.0, {"x": 4.0, "b": 1.0})
    assert parse_xml_solution('<s><header status="infeasible"/></s>')[0] == "infeasible"
    with pytest.raises(SolverError):
        parse_xml_solution("<broken")


def test_log_bounds():
    assert parse_log_bounds("cbc", read("cbc_unit.log")) == (1.5, None)
    assert parse_log_bounds("cbc", read("cbc_timeout.log")) == (None, 98.0)
    assert parse_log_bounds("highs", read("highs_unit.log")) == (1.5, 1.5)
    assert parse_log_bounds("highs", read("highs_timeout.log")) == (None, 98.0)
    assert parse_log_bounds("xml", "anything") == (None, None)


def test_result_validation():
    with pytest.raises(ValueError):
        SolverResult("solved")
    with pytest.raises(ValueError):
        SolverResult("optimal")
    assert SolverResult("timeout", values={"x": 1}).has_incumbent
    assert not SolverResult("timeout").has_incumbent


def test_backend_env(monkeypatch):
    monkeypatch.setenv("ROBUST_RCPSP_BACKEND", "none")
    assert default_backend() is None
    monkeypatch.setenv("ROBUST_RCPSP_BACKEND", "gurobi")
    with pytest.raises(SolverError, match="unknown backend"):
        default_backend()


def test_load_backend_config(tmp_path):
    path = tmp_path / "solver.cfg"
    path.write_text("# comment\nbackend = custom\ncommand = {exe} {model} {solution}\n"
                    "solution_format = cbc\nexecutable = /bin/true\ntime_limit = 7\n")
    with pytest.raises(SolverError, match="unknown backend"):
        load_backend_config(path)
    path.write_text("command = {exe} {model} {solution}\nsolution_format = cbc\nexecutable = /bin/true\n"
                    "model_format = mps\ntime_limit = 7\n")
    cfg = load_backend_config(path)
    assert cfg.command == ("{exe}", "{model}", "{solution}")
    assert (cfg.name, cfg.model_format, cfg.time_limit, cfg.executable) == ("custom", "mps", 7.0, "/bin/true")
    path.write_text("solution_format = cbc\n")
    with pytest.raises(SolverError, match="needs"):
        load_backend_config(path)
    path.write_text("no equals sign\n")
    with pytest.raises(SolverError, match="bad config line"):
        load_backend_config(path)


FAKE = """\
import sys
model, solution, mode = sys.argv[1:4]
text = open(model).read()
assert "c1:" in text or "c1" in text
if mode == "crash":
    sys.exit(3)
if mode == "silent":
    sys.exit(0)
with open(solution, "w") as fh:
    fh.write("Optimal - objective value 1.5\\n      0 b  0  0\\n      1 x  1.5  0\\n")
print("Objective value:                1.50000000")
"""


def fake_backend(tmp_path, mode, model_format="lp"):
    script = tmp_path / "fake_solver.py"
    script.write_text(FAKE)
    return BackendConfig("fake", ("{exe}", str(script), "{model}", "{solution}", mode), "cbc",
                         model_format=model_format, executable=sys.executable, time_limit=5)


@pytest.mark.parametrize("model_format", ["lp", "mps"])
def test_invoke_fake_solver(tmp_path, model_format):
    r = invoke_solver(UNIT, fake_backend(tmp_path, "ok", model_format), workdir=tmp_path)
    assert (r.status, r.objective, r.bound, r.backend) == ("optimal", 1.5, 1.5, "fake")
    assert r.values == {"b": 0.0, "x": 1.5}
    assert list(tmp_path.glob("rrcpsp_*")) == []


def test_invoke_failures(tmp_path):
    with pytest.raises(SolverError, match="exited with 3"):
        invoke_solver(UNIT, fake_backend(tmp_path, "crash"))
    with pytest.raises(SolverError, match="no solution file"):
        invoke_solver(UNIT, fake_backend(tmp_path, "silent"))
    missing = BackendConfig("gone", ("{exe}",), "cbc", executable="/no/such/solver")
    with pytest.raises(SolverError, match="not found"):
        invoke_solver(UNIT, missing)
    odd = BackendConfig("odd", ("{exe}",), "csv", executable=sys.executable)
    with pytest.raises(SolverError, match="solution format"):
        invoke_solver(UNIT, odd)


def live_backends():
    found = [b for b in (cbc_backend(time_limit=30), highs_backend(time_limit=30)) if b is not None]
    return found or [None]


@pytest.mark.solver
@pytest.mark.parametrize("cfg", live_backends(), ids=lambda b: b.name if b else "none")
def test_live_trivial_and_infeasible(cfg):
    if cfg is None:
        pytest.skip("no MILP backend available")
    r = invoke_solver(UNIT, cfg)
    assert (r.status, r.objective) == ("optimal", 1.5)
    assert r.values == {"b": 0.0, "x": 1.5}
    r = invoke_solver(UNIT.with_warm_start({"x": 2, "b": 0}), cfg)
    assert r.objective == 1.5
    r = invoke_solver(INFEASIBLE, cfg)
    assert (r.status, r.objective, r.has_incumbent) == ("infeasible", None, False)


@pytest.mark.solver
@pytest.mark.parametrize("cfg", live_backends(), ids=lambda b: b.name if b else "none")
def test_live_timeout(cfg):
    if cfg is None:
        pytest.skip("no MILP backend available")
    inst = read_psplib(J301)
    r = invoke_solver(build_adj_model(inst, build_uncertainty(inst, 0.5, 3)), cfg, time_limit=1)
    assert r.status in ("timeout", "feasible")
    assert r.bound is None or r.bound <= 110
