"""``robust-rcpsp`` command line."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from ..heuristics import best_rule, beta_deadline
from ..instances import (InstanceError, ProjectInstance, UncertaintySet, build_uncertainty, chain3, dump_instance,
                         load_instance, par2, read_psplib, to_half, validate)
from ..milp import (BackendConfig, SolverError, big_m_default, build_adj_model, build_anch_model, build_flow_model,
                    default_backend, emit_lp, emit_mps, load_backend_config)
from ..milp.backends import DEFAULT_TIME_LIMIT, PRESETS
from ..sgs import RULES
from . import bench as harness
from .checks import CHECKS, run_checks
from .records import RunRecord, read_records, records_to_csv
from .report import write_report

log = logging.getLogger("robust_rcpsp")

FIXTURES = {"chain3": chain3, "par2": par2}
DEFAULT_GAMMA = 3


def load(path: str, alpha: float, gamma: int | None) -> tuple[ProjectInstance, UncertaintySet]:
    """Instance from a PSPLib ``.sm`` file, a text dump, or a fixture name.

    Stored deviations win over ``alpha``; a missing ``gamma`` keeps the
    stored budget, else defaults to 3.
    """
    stored = None
    if path.lower() in FIXTURES:
        inst, stored = FIXTURES[path.lower()]()
    elif path.endswith(".sm"):
        inst = read_psplib(path)
    else:
        inst, stored = load_instance(Path(path).read_text())
    if stored is not None:
        return inst, stored if gamma is None else stored.with_gamma(gamma)
    return inst, build_uncertainty(inst, alpha, DEFAULT_GAMMA if gamma is None else gamma)


def resolve_backend(args) -> BackendConfig | None:
    limit = args.time_limit
    if args.solver_config:
        return load_backend_config(args.solver_config).with_time_limit(limit)
    if args.backend == "none":
        return None
    if args.backend == "auto":
        cfg = PRESETS["cbc"](args.solver_path, limit) if args.solver_path else default_backend(limit)
    else:
        cfg = PRESETS[args.backend](args.solver_path, limit)
    if cfg is None and args.backend != "auto":
        raise SolverError(f"backend {args.backend!r} is not available")
    return cfg


def _emit(model, args) -> None:
    if args.emit_lp:
        Path(args.emit_lp).write_text(emit_lp(model))
        log.info("wrote %s", args.emit_lp)
    if args.emit_mps:
        Path(args.emit_mps).write_text(emit_mps(model))
        log.info("wrote %s", args.emit_mps)


def _output(records: list[RunRecord], args) -> None:
    text = records_to_csv(records)
    if getattr(args, "csv", None):
        Path(args.csv).write_text(text)
    sys.stdout.write(text)


def _require_backend(args):
    backend = resolve_backend(args)
    if backend is None:
        raise SolverError("no solver backend available (use --backend, --solver-path or --solver-config)")
    return backend


# ---------------------------------------------------------------- commands

def cmd_parse(args) -> int:
    inst, ds = load(args.instance, args.alpha, args.gamma)
    if args.dump:
        sys.stdout.write(dump_instance(inst, ds))
        return 0
    meta = inst.metadata or {}
    print(f"name       {inst.name}")
    print(f"jobs       {inst.n}")
    print(f"resources  {inst.num_resources} capacities {' '.join(map(str, inst.capacities))}")
    print(f"arcs       {len(inst.arcs)}")
    if meta:
        print("parameters " + " ".join(f"{k}={v}" for k, v in sorted(meta.items())))
    print(f"gamma      {ds.gamma}")
    issues = validate(inst)
    for issue in issues:
        print(f"issue      {issue}")
    return 1 if issues else 0


def cmd_solve(args) -> int:
    inst, ds = load(args.instance, args.alpha, args.gamma)
    method = args.method
    if method == "anch":
        return _solve_anch(args, inst, ds)
    if method == "adj" and args.relax:
        method = "rel"
    mbar = big_m_default(inst, ds)
    model = build_flow_model(inst, mbar, args.prune) if method == "det" else build_adj_model(inst, ds, mbar, args.prune)
    _emit(model.relaxed() if method == "rel" else model, args)
    if args.emit_only:
        return 0
    warm = best_rule(inst, ds) if args.warm_start and method == "adj" else None
    run = harness.run_minimize(inst, ds, args.alpha, method, _require_backend(args), args.time_limit, args.prune,
                               warm, args.instance)
    _output([run.record], args)
    return 0 if run.record.status != "error" else 1


def _solve_anch(args, inst, ds) -> int:
    br = best_rule(inst, ds)
    if args.deadline is not None:
        deadline = to_half(args.deadline)
    elif args.deadline_from_bestrule:
        deadline = beta_deadline(br.q_value, args.beta)
    else:
        raise SystemExit("solve-anch needs --deadline or --deadline-from-bestrule")
    model = build_anch_model(inst, ds, deadline, args.prune)
    _emit(model, args)
    if args.emit_only:
        return 0
    beta = args.beta if args.deadline is None else None
    run = harness.run_anchor(inst, ds, args.alpha, deadline, _require_backend(args), args.time_limit, args.prune,
                             br, beta, args.instance)
    _output([run.record], args)
    return 0 if run.record.status != "error" else 1


def cmd_heur_adj(args) -> int:
    inst, ds = load(args.instance, args.alpha, args.gamma)
    rules = RULES if args.all_rules else ([args.rule] if args.rule else [None])
    records = [harness.run_heuristic(inst, ds, args.alpha, r, args.instance, args.classic_urgency).record
               for r in rules]
    if args.all_rules:
        records.append(harness.run_heuristic(inst, ds, args.alpha, None, args.instance, args.classic_urgency).record)
    _output(records, args)
    return 0


def cmd_heur_anch(args) -> int:
    inst, ds = load(args.instance, args.alpha, args.gamma)
    backend = resolve_backend(args)
    br = best_rule(inst, ds)
    records = [harness.run_brs(inst, ds, args.alpha, br, beta, backend, args.time_limit, args.instance).record
               for beta in args.beta]
    _output(records, args)
    return 0 if all(r.status != "error" for r in records) else 1


def cmd_oracle(args) -> int:
    names = CHECKS if args.check == "all" else (args.check,)
    results = run_checks(names, args.seeds, args.start_seed)
    for summary in results:
        print(summary)
        for fail in summary.failures[:5]:
            print(f"  seed {fail[0]}: {fail[1:]}")
    return 0 if all(s.ok for s in results) else 1


def _instance_files(paths: list[str]) -> list[str]:
    out = []
    for p in paths:
        path = Path(p)
        out += sorted(str(f) for f in path.rglob("*.sm")) if path.is_dir() else [str(path)]
    return out


def cmd_bench(args) -> int:
    files = _instance_files(args.paths)
    if args.limit:
        files = files[:args.limit]
    if not files:
        raise SystemExit("no .sm instances found")
    needs_solver = set(args.methods) & {"det", "adj", "rel", "anch"}
    cfg = harness.BenchConfig(methods=tuple(args.methods), gammas=tuple(args.gammas), alpha=args.alpha,
                              betas=tuple(args.betas), backend=resolve_backend(args) if needs_solver else None,
                              time_limit=args.time_limit, prune=args.prune, warm_adj=args.warm_start,
                              artifacts=args.artifacts)
    records = harness.bench(files, cfg, args.workers)
    if args.out:
        Path(args.out).write_text(records_to_csv(records))
        log.info("wrote %d records to %s", len(records), args.out)
    else:
        sys.stdout.write(records_to_csv(records))
    return 0


def cmd_report(args) -> int:
    records = [rec for path in args.csv_files for rec in read_records(path)]
    texts = write_report(records, args.out_dir)
    for text in texts.values():
        print(text)
    if not args.audit:
        return 0
    bad = 0
    for rec, ok, msg in harness.audit(records):
        if not ok:
            bad += 1
            print(f"audit FAIL {rec.instance} {rec.method} g{rec.gamma}: {msg}")
    print(f"audit: {'PASS' if bad == 0 else 'FAIL'} ({bad} failing records)")
    return 0 if bad == 0 else 1


# ---------------------------------------------------------------- parser

def _instance_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("instance", help="PSPLib .sm file, text instance dump, or fixture name (chain3, par2)")
    p.add_argument("--gamma", type=int, default=None, help="uncertainty budget (default 3)")
    p.add_argument("--alpha", type=float, default=0.5, help="deviation as a fraction of duration")


def _solver_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=("auto", "cbc", "highs", "none"), default="auto")
    p.add_argument("--solver-config", help="key=value backend config file")
    p.add_argument("--solver-path", help="solver binary")
    p.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT, help="seconds per solve")
    p.add_argument("--prune", action="store_true", help="drop sequencing pairs fixed by precedence")


def _model_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--emit-lp", metavar="PATH")
    p.add_argument("--emit-mps", metavar="PATH")
    p.add_argument("--emit-only", action="store_true", help="write the model and stop")
    p.add_argument("--csv", metavar="PATH", help="also write the record CSV here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robust-rcpsp", description="Anchor-robust and adjustable-robust RCPSP.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="read and validate an instance")
    _instance_options(p)
    p.add_argument("--dump", action="store_true", help="print the text format (half-units)")
    p.set_defaults(func=cmd_parse)

    for name, method, text in (("solve-det", "det", "nominal flow formulation"),
                               ("solve-adj", "adj", "adjustable-robust formulation"),
                               ("solve-anch", "anch", "anchor-robust formulation")):
        p = sub.add_parser(name, help=text)
        _instance_options(p)
        _solver_options(p)
        _model_options(p)
        p.set_defaults(func=cmd_solve, method=method)
        if method == "adj":
            p.add_argument("--relax", action="store_true", help="solve the continuous relaxation")
            p.add_argument("--warm-start", action="store_true", help="start from the BestRule solution")
        else:
            p.set_defaults(relax=False, warm_start=False)
        if method == "anch":
            g = p.add_mutually_exclusive_group(required=True)
            g.add_argument("--deadline", type=float, help="baseline makespan bound, original units")
            g.add_argument("--deadline-from-bestrule", action="store_true",
                           help="deadline floor(beta * BestRule worst-case makespan)")
            p.add_argument("--beta", type=float, default=1.0)

    p = sub.add_parser("heur-adj", help="SGS priority-rule heuristics")
    _instance_options(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--rule", choices=RULES)
    g.add_argument("--all-rules", action="store_true", help="every rule, then BestRule")
    p.add_argument("--classic-urgency", action="store_true", help="LFT/LST prefer the smallest latest time")
    p.add_argument("--csv", metavar="PATH")
    p.set_defaults(func=cmd_heur_adj)

    p = sub.add_parser("heur-anch", help="BestRule sequence, then anchoring at a fixed sequence")
    _instance_options(p)
    _solver_options(p)
    p.add_argument("--beta", type=float, nargs="+", default=[1.0])
    p.add_argument("--csv", metavar="PATH")
    p.set_defaults(func=cmd_heur_anch)

    p = sub.add_parser("oracle", help="seeded agreement checks against brute force")
    p.add_argument("--check", choices=CHECKS + ("all",), default="all")
    p.add_argument("--seeds", type=int, default=200)
    p.add_argument("--start-seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="sweep a directory of instances")
    p.add_argument("paths", nargs="+", help=".sm files or directories")
    p.add_argument("--methods", nargs="+", choices=harness.METHODS, default=["br"])
    p.add_argument("--gammas", type=int, nargs="+", default=[3, 5, 7])
    p.add_argument("--betas", type=float, nargs="+", default=list(harness.BETAS))
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--limit", type=int, default=0, help="first N instances only")
    p.add_argument("--warm-start", action="store_true", help="warm-start adj from BestRule")
    p.add_argument("--out", metavar="CSV")
    p.add_argument("--artifacts", metavar="DIR", help="store solutions for auditing")
    _solver_options(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="aggregate record CSVs into tables")
    p.add_argument("csv_files", nargs="+")
    p.add_argument("--out-dir", default="report")
    p.add_argument("--audit", action="store_true", help="recompute objectives from stored artifacts")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InstanceError, SolverError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
