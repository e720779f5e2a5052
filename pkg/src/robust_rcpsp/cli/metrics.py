"""Gap definitions, correlation, and per-class aggregate tables."""
from __future__ import annotations

import math
import statistics
from collections import defaultdict
from typing import Callable, Iterable, Sequence

from .records import RunRecord

DASH = "–"
SOLVED = "optimal"
PSPLIB_PARAMS = ("nc", "rf", "rs")


def _ratio(num, den):
    if num is None or den is None or den == 0:
        return None
    return num / den


def gap(ub: float | None, lb: float | None) -> float | None:
    """``(UB - LB) / UB`` for minimization."""
    return _ratio(None if ub is None or lb is None else ub - lb, ub)


def anch_gap(ub: float | None, anch: float | None) -> float | None:
    """``(UB - Anch) / Anch`` for anchoring (undefined when nothing is anchored)."""
    return _ratio(None if ub is None or anch is None else ub - anch, anch)


def gap_n(ub: float | None, anch: float | None, n: int) -> float | None:
    return _ratio(None if ub is None or anch is None else ub - anch, n)


def br_gap(br: float | None, lb: float | None) -> float | None:
    """``(BR - LB) / BR``."""
    return gap(br, lb)


def pct(value: float | None, digits: int = 2) -> str:
    return DASH if value is None else f"{100 * value:.{digits}f}%"


def num(value: float | None, digits: int = 2) -> str:
    return DASH if value is None else f"{value:.{digits}f}"


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation; ValueError on length mismatch or zero variance."""
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise ValueError("need at least two points")
    try:
        return statistics.correlation(xs, ys)
    except statistics.StatisticsError as exc:
        raise ValueError(str(exc)) from exc


def mean(values: Iterable[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    return math.fsum(vals) / len(vals) if vals else None


def _group(records: Iterable[RunRecord], key: Callable) -> dict:
    out = defaultdict(list)
    for r in records:
        out[key(r)].append(r)
    return {k: out[k] for k in sorted(out, key=lambda k: tuple((v is None, 0 if v is None else v) for v in k))}


def _dedupe(records: Iterable[RunRecord]) -> list[RunRecord]:
    """Keep one record per key (the last in key order of its full row) so that
    re-aggregating concatenated or shuffled files gives the same tables."""
    best: dict[tuple, RunRecord] = {}
    for r in records:
        prev = best.get(r.key)
        if prev is None or repr(r) > repr(prev):
            best[r.key] = r
    return sorted(best.values(), key=lambda r: repr(r.key))


def solve_summary(records: Iterable[RunRecord], method: str, by: Sequence[str] = ("n", "gamma")) -> list[dict]:
    """Minimization solver runs per class: #solved, times, #unsolved, gaps.

    Two time columns: averaged over solved runs only, and over all runs.
    """
    rows = []
    recs = [r for r in _dedupe(records) if r.method == method]
    for k, grp in _group(recs, lambda r: tuple(getattr(r, f) for f in by)).items():
        solved = [r for r in grp if r.status == SOLVED]
        unsolved = [r for r in grp if r.status != SOLVED]
        row = dict(zip(by, k))
        row.update({
            "instances": len(grp),
            "solved": len(solved),
            "time_solved_s": mean(r.solve_time_s for r in solved),
            "time_all_s": mean(r.solve_time_s for r in grp),
            "unsolved": len(unsolved),
            "gap_unsolved": mean(gap(r.objective, r.bound) for r in unsolved),
            "no_solution": sum(1 for r in unsolved if r.objective is None),
        })
        rows.append(row)
    return rows


def anchor_summary(records: Iterable[RunRecord], method: str = "anch",
                   by: Sequence[str] = ("n", "gamma")) -> list[dict]:
    rows = []
    recs = [r for r in _dedupe(records) if r.method == method]
    for k, grp in _group(recs, lambda r: tuple(getattr(r, f) for f in by)).items():
        solved = [r for r in grp if r.status == SOLVED]
        unsolved = [r for r in grp if r.status != SOLVED]
        row = dict(zip(by, k))
        row.update({
            "instances": len(grp),
            "anch": mean(r.objective for r in grp),
            "anch_pct": mean(_ratio(r.objective, r.n) for r in grp),
            "solved": len(solved),
            "time_solved_s": mean(r.solve_time_s for r in solved),
            "time_all_s": mean(r.solve_time_s for r in grp),
            "unsolved": len(unsolved),
            "gap_unsolved": mean(anch_gap(r.bound, r.objective) for r in unsolved),
            "gap_n_unsolved": mean(gap_n(r.bound, r.objective, r.n) for r in unsolved),
        })
        rows.append(row)
    return rows


def _index(records, method):
    return {(r.instance, r.gamma): r for r in records if r.method == method}


def bestrule_vs_mip(records: Iterable[RunRecord], by: Sequence[str] = ("n", "gamma")) -> list[dict]:
    """BestRule compared with the adjustable MIP on the same (instance, budget)."""
    recs = _dedupe(records)
    mip = _index(recs, "adj")
    pairs = [(r, mip[(r.instance, r.gamma)]) for r in recs if r.method == "br" and (r.instance, r.gamma) in mip]
    rows = []
    for k, grp in _group(pairs, lambda pr: tuple(getattr(pr[0], f) for f in by)).items():
        opt = [(b, m) for b, m in grp if m.status == SOLVED]
        rest = [(b, m) for b, m in grp if m.status != SOLVED]
        row = dict(zip(by, k))
        row.update({
            "br_gap_all": mean(br_gap(b.objective, m.bound) for b, m in grp),
            "mip_gap_all": mean(gap(m.objective, m.bound) for _, m in grp),
            "solved": len(opt),
            "br_gap_solved": mean(br_gap(b.objective, m.objective) for b, m in opt),
            "br_is_opt": sum(1 for b, m in opt if b.objective == m.objective),
            "unsolved": len(rest),
            "br_gap_unsolved": mean(br_gap(b.objective, m.bound) for b, m in rest),
            "mip_gap_unsolved": mean(gap(m.objective, m.bound) for _, m in rest),
            "br_better": sum(1 for b, m in rest if m.objective is not None and b.objective < m.objective),
            "no_mip_solution": sum(1 for _, m in rest if m.objective is None),
        })
        rows.append(row)
    return rows


def bestrule_vs_relaxation(records: Iterable[RunRecord]) -> list[dict]:
    recs = _dedupe(records)
    rel = _index(recs, "rel")
    rows = []
    brs = [r for r in recs if r.method == "br"]
    for (n, g), grp in _group(brs, lambda r: (r.n, r.gamma)).items():
        matched = [(b, rel[(b.instance, b.gamma)]) for b in grp if (b.instance, b.gamma) in rel]
        rows.append({
            "n": n, "gamma": g,
            "br_time_s": mean(b.br_time_s for b in grp),
            "gap_rel": mean(br_gap(b.objective, r.objective) for b, r in matched),
            "rel_time_s": mean(r.solve_time_s for _, r in matched),
        })
    return rows


def rule_quality(records: Iterable[RunRecord]) -> list[dict]:
    """Per rule: #instances where it equals BestRule, average and max gap to BestRule."""
    recs = _dedupe(records)
    br = _index(recs, "br")
    per_rule = defaultdict(list)
    for r in recs:
        if r.method.startswith("rule:") and (r.instance, r.gamma) in br:
            b = br[(r.instance, r.gamma)].objective
            per_rule[r.method[5:]].append((r.objective, b))
    rows = []
    for rule in sorted(per_rule):
        vals = per_rule[rule]
        gaps = [_ratio(h - b, b) for h, b in vals]
        rows.append({"rule": rule, "is_br": sum(1 for h, b in vals if h == b), "gap_to_br_avg": mean(gaps),
                     "gap_to_br_max": max((g for g in gaps if g is not None), default=None)})
    return rows


def correlation_points(records: Iterable[RunRecord]) -> dict[int, list[tuple[float, float]]]:
    """Per budget, points (gap at budget 0, gap at the budget) of every single rule,
    on instances solved to optimality with both budgets."""
    recs = _dedupe(records)
    opt = {(r.instance, r.gamma): r.objective for r in recs if r.method == "adj" and r.status == SOLVED}
    for r in recs:
        if r.method == "det" and r.status == SOLVED:
            opt.setdefault((r.instance, 0), r.objective)
    heur = {(r.instance, r.gamma, r.method): r.objective for r in recs if r.method.startswith("rule:")}
    points = defaultdict(list)
    for (inst, g, method), value in sorted(heur.items()):
        if g == 0 or (inst, g) not in opt or (inst, 0) not in opt:
            continue
        zero = heur.get((inst, 0, method))
        if zero is None:
            continue
        g0, gg = gap(zero, opt[(inst, 0)]), gap(value, opt[(inst, g)])
        if g0 is not None and gg is not None:
            points[g].append((g0, gg))
    return dict(sorted(points.items()))


def correlation_table(records: Iterable[RunRecord]) -> list[dict]:
    rows = []
    for g, pts in correlation_points(records).items():
        try:
            coef = pearson([p[0] for p in pts], [p[1] for p in pts])
        except ValueError:
            coef = None
        rows.append({"gamma": g, "points": len(pts), "pearson": coef})
    return rows


def deadline_sweep(records: Iterable[RunRecord], method: str = "anch") -> list[dict]:
    """Average anchored jobs per (n, beta) and, on the last row, as a share of n."""
    recs = [r for r in _dedupe(records) if r.method == method and r.beta is not None]
    rows = []
    for (n, beta), grp in _group(recs, lambda r: (r.n, r.beta)).items():
        rows.append({"n": n, "beta": beta, "anch": mean(r.objective for r in grp),
                     "anch_pct": mean(_ratio(r.objective, r.n) for r in grp), "instances": len(grp)})
    return rows


def brs_summary(records: Iterable[RunRecord]) -> list[dict]:
    recs = [r for r in _dedupe(records) if r.method == "brs"]
    rows = []
    for (n, g), grp in _group(recs, lambda r: (r.n, r.gamma)).items():
        br_t, brs_t = mean(r.br_time_s for r in grp), mean(r.brs_time_s for r in grp)
        rows.append({"n": n, "gamma": g, "anch": mean(r.anchored_jobs for r in grp),
                     "anch_pct": mean(_ratio(r.anchored_jobs, r.n) for r in grp), "br_time_s": br_t,
                     "brs_time_s": brs_t, "total_time_s": None if br_t is None or brs_t is None else br_t + brs_t})
    return rows


def solved_over_time(records: Iterable[RunRecord], methods=("det", "adj")) -> dict[int, list[tuple[float, float]]]:
    """Cumulative share of instances solved by time, per budget (step points)."""
    recs = [r for r in _dedupe(records) if r.method in methods]
    out = {}
    for (g,), grp in _group(recs, lambda r: (r.gamma,)).items():
        times = sorted(r.solve_time_s for r in grp if r.status == SOLVED and r.solve_time_s is not None)
        out[g] = [(t, (i + 1) / len(grp)) for i, t in enumerate(times)]
    return out


def _by_params(summary, recs, method) -> list[dict]:
    """One block per instance-generator parameter, keyed by ``param``/``value``."""
    out = []
    for p in PSPLIB_PARAMS:
        for row in summary(recs, method, ("n", "gamma", p)):
            value = row.pop(p)
            out.append({"n": row.pop("n"), "gamma": row.pop("gamma"), "param": p.upper(), "value": value, **row})
    return out


def gap_metrics(records: Iterable[RunRecord]) -> dict[str, list[dict]]:
    """Every aggregate table keyed by name."""
    recs = list(records)
    return {
        "adj_by_gamma": solve_summary(recs, "adj"),
        "adj_by_params": _by_params(solve_summary, recs, "adj"),
        "det_by_n": solve_summary(recs, "det", ("n",)),
        "bestrule_vs_rel": bestrule_vs_relaxation(recs),
        "bestrule_vs_mip": bestrule_vs_mip(recs),
        "rule_quality": rule_quality(recs),
        "correlation": correlation_table(recs),
        "anch_by_gamma": anchor_summary(recs),
        "anch_by_params": _by_params(anchor_summary, recs, "anch"),
        "deadline_sweep": deadline_sweep(recs),
        "brs": brs_summary(recs),
    }
