"""External MILP solver processes: configuration, invocation, solution parsing."""
from __future__ import annotations

import logging
import os
import re
import shutil
import subprocess
import tempfile
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

from .formats import emit_lp, emit_mps, mps_aliases
from .model import MipModel

log = logging.getLogger(__name__)

DEFAULT_TIME_LIMIT = 1200.0
STATUSES = ("optimal", "feasible", "infeasible", "unbounded", "timeout", "no-solution")
ENV_BACKEND = "ROBUST_RCPSP_BACKEND"
ENV_SOLVER = "ROBUST_RCPSP_SOLVER"


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverResult:
    status: str
    objective: float | None = None
    bound: float | None = None
    values: Mapping[str, float] = field(default_factory=dict)
    wall_time: float = 0.0
    backend: str = ""
    log: str = field(default="", repr=False, compare=False)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown solver status {self.status!r}")
        if self.status in ("optimal", "feasible") and self.objective is None:
            raise ValueError(f"status {self.status} needs an objective value")

    @property
    def has_incumbent(self) -> bool:
        return self.status in ("optimal", "feasible") or (self.status == "timeout" and bool(self.values))


@dataclass(frozen=True)
class BackendConfig:
    """How to run one solver.

    ``command`` tokens may use ``{exe}``, ``{model}``, ``{solution}`` and
    ``{timelimit_s}``; the token ``{mipstart_args}`` expands to
    ``mipstart_args`` (with ``{mipstart}`` filled in) when the model carries
    a warm start, and disappears otherwise.
    """

    name: str
    command: tuple[str, ...]
    solution_format: str  # "cbc", "highs" or "xml"
    model_format: str = "lp"
    executable: str | None = None
    mipstart_args: tuple[str, ...] = ()
    time_limit: float = DEFAULT_TIME_LIMIT
    env: Mapping[str, str] = field(default_factory=dict)

    def with_time_limit(self, seconds: float) -> "BackendConfig":
        return replace(self, time_limit=seconds)


def _pulp_cbc() -> str | None:
    try:
        import pulp  # noqa: F401
    except ImportError:
        return None
    base = Path(pulp.__file__).parent / "solverdir" / "cbc" / "linux" / "i64" / "cbc"
    return str(base) if base.exists() else None


def _highsbox() -> tuple[str | None, dict]:
    try:
        import highsbox
    except ImportError:
        return None, {}
    exe = highsbox.highs_bin_path()
    if not os.path.exists(exe):
        return None, {}
    lib = highsbox.highs_lib_dir()
    prior = os.environ.get("LD_LIBRARY_PATH")
    return exe, {"LD_LIBRARY_PATH": lib + (os.pathsep + prior if prior else "")}


def cbc_backend(executable: str | None = None, time_limit: float = DEFAULT_TIME_LIMIT) -> BackendConfig | None:
    exe = executable or os.environ.get("ROBUST_RCPSP_CBC") or shutil.which("cbc") or _pulp_cbc()
    if exe is None:
        return None
    return BackendConfig(
        name="cbc",
        command=("{exe}", "{model}", "{mipstart_args}", "sec", "{timelimit_s}", "solve", "solu", "{solution}"),
        solution_format="cbc", executable=exe, mipstart_args=("mips", "{mipstart}"), time_limit=time_limit,
    )


def highs_backend(executable: str | None = None, time_limit: float = DEFAULT_TIME_LIMIT) -> BackendConfig | None:
    exe = executable or os.environ.get("ROBUST_RCPSP_HIGHS") or shutil.which("highs")
    env: dict = {}
    if exe is None:
        exe, env = _highsbox()
    if exe is None:
        return None
    return BackendConfig(
        name="highs",
        command=("{exe}", "--model_file", "{model}", "{mipstart_args}", "--time_limit", "{timelimit_s}",
                 "--solution_file", "{solution}"),
        solution_format="highs", executable=exe, mipstart_args=("--read_solution_file", "{mipstart}"),
        time_limit=time_limit, env=env,
    )


PRESETS = {"cbc": cbc_backend, "highs": highs_backend}


def default_backend(time_limit: float = DEFAULT_TIME_LIMIT) -> BackendConfig | None:
    """Backend named by ``ROBUST_RCPSP_BACKEND`` (``none`` disables), else the
    first available preset.  ``ROBUST_RCPSP_SOLVER`` overrides the binary path."""
    choice = os.environ.get(ENV_BACKEND, "").strip().lower()
    exe = os.environ.get(ENV_SOLVER) or None
    if choice in ("none", "off"):
        return None
    if choice:
        if choice not in PRESETS:
            raise SolverError(f"unknown backend {choice!r} in {ENV_BACKEND}")
        return PRESETS[choice](exe, time_limit)
    for make in PRESETS.values():
        cfg = make(exe, time_limit)
        if cfg is not None:
            return cfg
    return None


def load_backend_config(path: str | os.PathLike) -> BackendConfig:
    """``key=value`` file: ``backend`` picks a preset, other keys override it.

    Keys: backend, executable, command, mipstart_args, solution_format,
    model_format, time_limit.  List values are whitespace separated.
    """
    items: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SolverError(f"bad config line {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        items[key] = value
    time_limit = float(items.get("time_limit", DEFAULT_TIME_LIMIT))
    base = None
    if "backend" in items:
        make = PRESETS.get(items["backend"])
        if make is None:
            raise SolverError(f"unknown backend {items['backend']!r}")
        base = make(items.get("executable") or os.environ.get(ENV_SOLVER), time_limit)
    if base is None:
        if "command" not in items or "solution_format" not in items:
            raise SolverError("config needs a usable backend preset or command and solution_format")
        base = BackendConfig(name=items.get("backend", "custom"), command=(), solution_format="")
    overrides: dict = {"time_limit": time_limit}
    if "command" in items:
        overrides["command"] = tuple(items["command"].split())
    if "mipstart_args" in items:
        overrides["mipstart_args"] = tuple(items["mipstart_args"].split())
    for key in ("solution_format", "model_format", "executable"):
        if key in items:
            overrides[key] = items[key]
    return replace(base, **overrides)


# ---------------------------------------------------------------- parsing

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def parse_cbc_solution(text: str) -> tuple[str, float | None, dict[str, float]]:
    lines = text.splitlines()
    if not lines:
        raise SolverError("empty solution file")
    head = lines[0].strip()
    m = re.search(r"objective value\s+(" + _NUM + ")", head)
    objective = float(m.group(1)) if m else None
    values = {}
    for line in lines[1:]:
        parts = line.replace("**", " ").split()
        if len(parts) >= 3:
            values[parts[1]] = float(parts[2])
    low = head.lower()
    if low.startswith("optimal"):
        status = "optimal"
    elif low.startswith("infeasible") or low.startswith("integer infeasible"):
        status, values, objective = "infeasible", {}, None
    elif low.startswith("unbounded"):
        status, values, objective = "unbounded", {}, None
    elif "no integer solution" in low:
        status = "timeout" if "time" in low else "no-solution"
        values, objective = {}, None
    elif low.startswith("stopped on time"):
        status = "timeout"
    elif low.startswith("stopped"):
        status = "feasible" if objective is not None else "no-solution"
    else:
        raise SolverError(f"unrecognized solution header {head!r}")
    return status, objective, values


def parse_highs_solution(text: str) -> tuple[str, float | None, dict[str, float]]:
    lines = [ln.rstrip() for ln in text.splitlines()]
    try:
        model_status = lines[lines.index("Model status") + 1].strip().lower()
    except (ValueError, IndexError):
        raise SolverError("solution file lacks a model status") from None
    values: dict[str, float] = {}
    objective = None
    if "# Primal solution values" in lines:
        at = lines.index("# Primal solution values")
        if lines[at + 1].strip().lower() == "feasible":
            m = re.match(r"Objective\s+(" + _NUM + ")", lines[at + 2])
            objective = float(m.group(1)) if m else None
            m = re.match(r"# Columns\s+(\d+)", lines[at + 3])
            count = int(m.group(1)) if m else 0
            for line in lines[at + 4: at + 4 + count]:
                name, value = line.split()[:2]
                values[name] = float(value)
    if model_status == "optimal":
        status = "optimal"
    elif model_status == "infeasible":
        status, values, objective = "infeasible", {}, None
    elif "unbounded" in model_status:
        status, values, objective = "unbounded", {}, None
    elif "time limit" in model_status:
        status = "timeout"
    elif values:
        status = "feasible"
    else:
        status = "no-solution"
    return status, objective, values


def parse_xml_solution(text: str) -> tuple[str, float | None, dict[str, float]]:
    """Solution file with a ``header`` element and ``variable name= value=`` entries."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise SolverError(f"unparsable XML solution: {exc}") from exc
    header = root.find(".//header")
    attrs = header.attrib if header is not None else {}
    status_text = (attrs.get("solutionStatusString") or attrs.get("status") or "").lower()
    objective = float(attrs["objectiveValue"]) if "objectiveValue" in attrs else None
    values = {v.attrib["name"]: float(v.attrib["value"]) for v in root.iter("variable")}
    if "infeasible" in status_text:
        return "infeasible", None, {}
    if "unbounded" in status_text:
        return "unbounded", None, {}
    if "time" in status_text:
        return "timeout", objective, values
    if "optimal" in status_text:
        return "optimal", objective, values
    if values and objective is not None:
        return "feasible", objective, values
    return "no-solution", None, {}


SOLUTION_PARSERS = {"cbc": parse_cbc_solution, "highs": parse_highs_solution, "xml": parse_xml_solution}


def parse_log_bounds(fmt: str, text: str) -> tuple[float | None, float | None]:
    """(objective, best bound) from solver console output, when printed."""
    def last(pattern):
        found = re.findall(pattern, text, flags=re.M)
        return float(found[-1]) if found else None

    if fmt == "cbc":
        obj = last(r"^Objective value:\s+(" + _NUM + ")")
        bound = last(r"^(?:Lower|Upper) bound:\s+(" + _NUM + ")")
        return obj, bound
    if fmt == "highs":
        return last(r"^\s*Primal bound\s+(" + _NUM + ")"), last(r"^\s*Dual bound\s+(" + _NUM + ")")
    return None, None


# ---------------------------------------------------------------- invocation

def _write_start(model: MipModel, fmt: str, path: Path, rename: Mapping[str, str]) -> None:
    items = sorted(model.warm_start.items())
    with open(path, "w") as fh:
        if fmt == "highs":
            fh.write(f"Model status\nUnknown\n\n# Primal solution values\nFeasible\nObjective 0\n# Columns {len(items)}\n")
            for name, value in items:
                fh.write(f"{rename.get(name, name)} {value}\n")
            fh.write("# Rows 0\n")
        else:
            fh.write("Stopped on time - objective value 0\n")
            for idx, (name, value) in enumerate(items):
                fh.write(f"{idx:>7} {rename.get(name, name)} {value:>15} {0:>23}\n")


def invoke_solver(model: MipModel, backend: BackendConfig, time_limit: float | None = None,
                  workdir: str | os.PathLike | None = None) -> SolverResult:
    """Write ``model``, run the solver, parse its solution into a SolverResult.

    Each call works in its own temporary directory (under ``workdir`` if
    given).  Raises SolverError when the binary is missing, exits nonzero or
    leaves no parsable solution.
    """
    limit = backend.time_limit if time_limit is None else time_limit
    exe = backend.executable
    if not exe or not (os.path.exists(exe) or shutil.which(exe)):
        raise SolverError(f"solver binary for {backend.name} not found: {exe!r}")
    parse = SOLUTION_PARSERS.get(backend.solution_format)
    if parse is None:
        raise SolverError(f"unknown solution format {backend.solution_format!r}")
    if backend.model_format == "mps":
        cols = mps_aliases([v.name for v in model.variables], "C")
        text = emit_mps(model)
    elif backend.model_format == "lp":
        cols = {v.name: v.name for v in model.variables}
        text = emit_lp(model)
    else:
        raise SolverError(f"unknown model format {backend.model_format!r}")
    back = {alias: name for name, alias in cols.items()}

    with tempfile.TemporaryDirectory(prefix="rrcpsp_", dir=workdir) as tmp:
        tmpdir = Path(tmp)
        model_path = tmpdir / f"model.{backend.model_format}"
        sol_path = tmpdir / "solution.sol"
        model_path.write_text(text)
        subst = {"exe": exe, "model": str(model_path), "solution": str(sol_path),
                 "timelimit_s": f"{limit:g}", "mipstart": str(tmpdir / "start.sol")}
        cmd: list[str] = []
        for tok in backend.command:
            if tok == "{mipstart_args}":
                if model.warm_start and backend.mipstart_args:
                    _write_start(model, backend.solution_format, tmpdir / "start.sol", cols)
                    cmd += [a.format(**subst) for a in backend.mipstart_args]
            else:
                cmd.append(tok.format(**subst))
        env = {**os.environ, **backend.env}
        log.debug("running %s", " ".join(cmd))
        t0 = time.perf_counter()
        try:
            proc = subprocess.run(cmd, cwd=tmpdir, env=env, capture_output=True, text=True,
                                  timeout=limit + 30 + 0.1 * limit)
        except subprocess.TimeoutExpired as exc:
            return SolverResult("timeout", wall_time=time.perf_counter() - t0, backend=backend.name,
                                log=str(exc.stdout or ""))
        except FileNotFoundError as exc:
            raise SolverError(f"cannot run {exe}: {exc}") from exc
        wall = time.perf_counter() - t0
        if proc.returncode != 0:
            raise SolverError(f"{backend.name} exited with {proc.returncode}: {proc.stderr[-500:] or proc.stdout[-500:]}")
        if not sol_path.exists():
            raise SolverError(f"{backend.name} wrote no solution file; output tail: {proc.stdout[-500:]}")
        status, objective, values = parse(sol_path.read_text())

    values = {back.get(k, k): v for k, v in values.items()}
    log_obj, bound = parse_log_bounds(backend.solution_format, proc.stdout)
    if values and log_obj is not None:
        objective = log_obj
    if status == "optimal" and objective is not None:
        bound = objective
    if status in ("infeasible", "unbounded", "no-solution"):
        objective = None
    if status == "timeout" and not values:
        objective = None
    return SolverResult(status, objective, bound, values, wall, backend.name, proc.stdout)
