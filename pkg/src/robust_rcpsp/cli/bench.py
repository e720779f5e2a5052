"""Single runs, directory sweeps, stored artifacts and their audit."""
from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from ..heuristics import HeuristicOutcome, adjustable_heuristic, best_rule, beta_deadline, fixed_sequence
from ..instances import ProjectInstance, UncertaintySet, build_uncertainty, read_psplib, to_units
from ..layered import check_anchored, q_gamma
from ..milp import (BackendConfig, ExtractionError, SolverError, apply_warm_start, big_m_default,
                    build_adj_model, build_anch_model, build_flow_model, extract_solution, invoke_solver)
from ..sgs import RULES, SequencingDecision, find_flow
from .records import RunRecord

log = logging.getLogger(__name__)

METHODS = ("det", "adj", "rel", "rules", "br", "anch", "brs")
BETAS = (1.0, 1.05, 1.1, 1.2, 1.3)


def _half_to_units(v: float | None) -> float | None:
    return None if v is None else v / 2


def base_record(inst: ProjectInstance, ds: UncertaintySet, method: str, alpha: float | None,
                beta: float | None = None) -> RunRecord:
    meta = inst.metadata or {}
    return RunRecord(instance=inst.name, n=inst.n, nc=meta.get("NC"), rf=meta.get("RF"), rs=meta.get("RS"),
                     gamma=ds.gamma, alpha=alpha, beta=beta, method=method)


@dataclass
class Run:
    record: RunRecord
    artifact: dict | None = None


def _artifact(inst_path: str, alpha, ds: UncertaintySet, method: str, sigma, baseline=None, anchored=None,
              value=None, deadline=None) -> dict:
    return {"instance": inst_path, "alpha": alpha, "gamma": ds.gamma, "method": method,
            "sigma": [list(a) for a in sorted(sigma.arcs)],
            "baseline": None if baseline is None else list(baseline),
            "anchored": None if anchored is None else sorted(anchored),
            "value_half": value, "deadline_half": deadline}


def _solver_run(model, backend: BackendConfig | None, time_limit: float | None):
    if backend is None:
        raise SolverError("no solver backend configured")
    return invoke_solver(model, backend, time_limit)


def run_heuristic(inst, ds, alpha, rule: str | None, inst_path: str = "", classic_urgency=False) -> Run:
    """``rule=None`` runs BestRule."""
    if rule is None:
        out = best_rule(inst, ds, classic_urgency=classic_urgency)
        method = "br"
    else:
        out = adjustable_heuristic(inst, ds, rule, classic_urgency)
        method = f"rule:{out.rule}"
    rec = replace(base_record(inst, ds, method, alpha), status="heuristic", objective=to_units(out.q_value),
                  br_time_s=out.elapsed, note=out.rule)
    return Run(rec, _artifact(inst_path, alpha, ds, method, out.sigma, value=out.q_value))


def run_minimize(inst, ds, alpha, method: str, backend, time_limit=None, prune=False,
                 warm: HeuristicOutcome | None = None, inst_path: str = "") -> Run:
    """``det`` (flow model, budget 0), ``adj`` or ``rel`` (relaxation of adj)."""
    mbar = big_m_default(inst, ds)
    if method == "det":
        eval_ds = ds.with_gamma(0)
        model = build_flow_model(inst, mbar, prune)
    else:
        eval_ds = ds
        model = build_adj_model(inst, ds, mbar, prune)
    if method == "rel":
        model = model.relaxed()
    elif warm is not None:
        model = apply_warm_start(model, warm.sigma, warm.flow, inst, eval_ds)
    rec = base_record(inst, eval_ds, method, alpha)
    result = _solver_run(model, backend, time_limit)
    rec = replace(rec, status=result.status, bound=_half_to_units(result.bound), solve_time_s=result.wall_time,
                  note=result.backend)
    if method == "rel" or not result.has_incumbent:
        obj = None if result.objective is None else result.objective / 2
        return Run(replace(rec, objective=obj))
    try:
        ext = extract_solution(model, result, inst, eval_ds)
    except ExtractionError as exc:
        return Run(replace(rec, status="error", note=str(exc)[:200]))
    q = q_gamma(ext.sigma, inst, eval_ds)
    objective = round(result.objective) if result.objective is not None else q
    return Run(replace(rec, objective=to_units(objective)),
               _artifact(inst_path, alpha, eval_ds, method, ext.sigma, ext.baseline, value=q))


def run_anchor(inst, ds, alpha, deadline: int, backend, time_limit=None, prune=False,
               warm: HeuristicOutcome | None = None, beta=None, inst_path: str = "") -> Run:
    model = build_anch_model(inst, ds, deadline, prune)
    if warm is not None and warm.q_value <= deadline:
        model = apply_warm_start(model, warm.sigma, warm.flow, inst, ds)
    rec = replace(base_record(inst, ds, "anch", alpha, beta), deadline=to_units(deadline))
    result = _solver_run(model, backend, time_limit)
    rec = replace(rec, status=result.status, bound=result.bound, solve_time_s=result.wall_time, note=result.backend)
    if not result.has_incumbent:
        return Run(rec)
    try:
        ext = extract_solution(model, result, inst, ds)
    except ExtractionError as exc:
        return Run(replace(rec, status="error", note=str(exc)[:200]))
    count = ext.num_anchored_jobs
    return Run(replace(rec, objective=count, anchored_jobs=count),
               _artifact(inst_path, alpha, ds, "anch", ext.sigma, ext.baseline, ext.anchored, count, deadline))


def run_brs(inst, ds, alpha, br: HeuristicOutcome, beta: float, backend, time_limit=None,
            inst_path: str = "") -> Run:
    deadline = beta_deadline(br.q_value, beta)
    rec = replace(base_record(inst, ds, "brs", alpha, beta), deadline=to_units(deadline), br_time_s=br.elapsed)
    t0 = time.perf_counter()
    try:
        sol = fixed_sequence(inst, ds, br.sigma, deadline, backend, time_limit)
    except SolverError as exc:
        return Run(replace(rec, status="error", note=str(exc)[:200]))
    elapsed = time.perf_counter() - t0
    count = sol.num_anchored_jobs
    rec = replace(rec, status="heuristic", objective=count, anchored_jobs=count, brs_time_s=elapsed,
                  note=br.rule)
    return Run(rec, _artifact(inst_path, alpha, ds, "brs", sol.sigma, sol.baseline, sol.anchored, count, deadline))


@dataclass(frozen=True)
class BenchConfig:
    methods: tuple[str, ...] = ("br",)
    gammas: tuple[int, ...] = (3, 5, 7)
    alpha: float = 0.5
    betas: tuple[float, ...] = (1.0,)
    backend: BackendConfig | None = None
    time_limit: float | None = None
    prune: bool = False
    warm_adj: bool = False
    artifacts: str | None = None


def _save(run: Run, cfg: BenchConfig) -> RunRecord:
    if cfg.artifacts is None or run.artifact is None:
        return run.record
    rec = run.record
    beta = "" if rec.beta is None else f"_b{rec.beta:g}"
    name = f"{rec.instance}_{rec.method.replace(':', '-')}_g{rec.gamma}{beta}.json"
    path = Path(cfg.artifacts) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(run.artifact, indent=1) + "\n")
    return replace(rec, artifact=str(path))


def _guard(fn, rec_factory):
    try:
        return fn()
    except (SolverError, ValueError) as exc:
        log.warning("run failed: %s", exc)
        return Run(replace(rec_factory(), status="error", note=str(exc)[:200]))


def bench_instance(path: str, cfg: BenchConfig) -> list[RunRecord]:
    """Every configured method and budget on one instance file."""
    inst = read_psplib(path)
    out: list[RunRecord] = []
    methods = set(cfg.methods)
    ds0 = build_uncertainty(inst, cfg.alpha, 0)
    if "det" in methods:
        out.append(_save(_guard(lambda: run_minimize(inst, ds0, cfg.alpha, "det", cfg.backend, cfg.time_limit,
                                                     cfg.prune, inst_path=path),
                                lambda: base_record(inst, ds0, "det", cfg.alpha)), cfg))
    if "rules" in methods:
        for rule in RULES:
            out.append(_save(run_heuristic(inst, ds0, cfg.alpha, rule, path), cfg))
    for g in cfg.gammas:
        ds = build_uncertainty(inst, cfg.alpha, g)
        br = best_rule(inst, ds) if methods & {"br", "anch", "brs"} or cfg.warm_adj else None
        if "br" in methods:
            out.append(_save(run_heuristic(inst, ds, cfg.alpha, None, path), cfg))
        if "rules" in methods:
            for rule in RULES:
                out.append(_save(run_heuristic(inst, ds, cfg.alpha, rule, path), cfg))
        for m in ("adj", "rel"):
            if m in methods:
                warm = br if (m == "adj" and cfg.warm_adj) else None
                out.append(_save(_guard(lambda: run_minimize(inst, ds, cfg.alpha, m, cfg.backend, cfg.time_limit,
                                                             cfg.prune, warm, path),
                                        lambda: base_record(inst, ds, m, cfg.alpha)), cfg))
        for beta in cfg.betas:
            if "anch" in methods:
                deadline = beta_deadline(br.q_value, beta)
                out.append(_save(_guard(lambda: run_anchor(inst, ds, cfg.alpha, deadline, cfg.backend,
                                                           cfg.time_limit, cfg.prune, br, beta, path),
                                        lambda: base_record(inst, ds, "anch", cfg.alpha, beta)), cfg))
            if "brs" in methods:
                out.append(_save(run_brs(inst, ds, cfg.alpha, br, beta, cfg.backend, cfg.time_limit, path), cfg))
    return out


def bench(paths: Sequence[str], cfg: BenchConfig, workers: int = 1) -> list[RunRecord]:
    """Instances run independently, in a process pool when ``workers > 1``."""
    paths = sorted(paths)
    if workers <= 1:
        results = [bench_instance(p, cfg) for p in paths]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(bench_instance, paths, [cfg] * len(paths)))
    return [rec for batch in results for rec in batch]


def audit_record(rec: RunRecord) -> tuple[bool, str]:
    """Recompute the recorded value from the stored artifact."""
    if not rec.artifact:
        return False, "no artifact"
    art = json.loads(Path(rec.artifact).read_text())
    inst = read_psplib(art["instance"])
    ds = build_uncertainty(inst, art["alpha"], art["gamma"])
    sigma = SequencingDecision(tuple(a) for a in art["sigma"])
    if find_flow(inst, sigma) is None:
        return False, "sigma is not supported by any resource flow"
    if rec.method in ("anch", "brs"):
        anchored = set(art["anchored"])
        if not check_anchored(art["baseline"], sigma, anchored, inst, ds):
            return False, "baseline does not anchor the stored set"
        if art["baseline"][inst.sink] > art["deadline_half"]:
            return False, "baseline exceeds the deadline"
        count = len(anchored - {inst.source, inst.sink})
        if count != rec.objective:
            return False, f"recorded {rec.objective} anchored jobs, artifact has {count}"
        return True, "ok"
    q = q_gamma(sigma, inst, ds)
    if rec.objective is None or to_units(q) != rec.objective:
        return False, f"recorded objective {rec.objective}, recomputed {to_units(q)}"
    return True, "ok"


def audit(records: Sequence[RunRecord]) -> list[tuple[RunRecord, bool, str]]:
    """Audit every optimal or heuristic record."""
    out = []
    for rec in records:
        if rec.status in ("optimal", "heuristic") and rec.method != "rel":
            ok, msg = audit_record(rec)
            out.append((rec, ok, msg))
    return out
