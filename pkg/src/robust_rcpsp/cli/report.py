"""Aggregate tables as CSV and aligned text, plus gnuplot data files."""
from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Sequence

from . import metrics
from .records import RunRecord

PCT_COLUMNS = {"gap_unsolved", "gap_n_unsolved", "anch_pct", "br_gap_all", "mip_gap_all", "br_gap_solved",
               "br_gap_unsolved", "mip_gap_unsolved", "gap_rel", "gap_to_br_avg", "gap_to_br_max"}


def _cell(key: str, value) -> str:
    if value is None:
        return metrics.DASH
    if key in PCT_COLUMNS:
        return metrics.pct(value)
    if key == "pearson":
        return f"{value:.4f}"
    if isinstance(value, float):
        return f"{value:.2f}" if not value.is_integer() or key.endswith("_s") else f"{value:g}"
    return str(value)


def table_csv(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    keys = list(rows[0])
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    for row in rows:
        w.writerow(["" if row[k] is None else (f"{row[k]:.6f}" if isinstance(row[k], float) else row[k])
                    for k in keys])
    return buf.getvalue()


def table_text(title: str, rows: Sequence[dict]) -> str:
    if not rows:
        return f"{title}\n  (no data)\n"
    keys = list(rows[0])
    cells = [[_cell(k, row[k]) for k in keys] for row in rows]
    widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(keys)]
    lines = [title, "  ".join(k.rjust(w) for k, w in zip(keys, widths)),
             "  ".join("-" * w for w in widths)]
    lines += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def write_report(records: Sequence[RunRecord], out_dir: str | Path) -> dict[str, str]:
    """Write every table and figure data file; returns the text rendering by table name."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables = metrics.gap_metrics(records)
    texts = {}
    for name, rows in tables.items():
        (out / f"{name}.csv").write_text(table_csv(rows))
        texts[name] = table_text(name, rows)
        (out / f"{name}.txt").write_text(texts[name])
    for g, pts in metrics.correlation_points(records).items():
        body = "".join(f"{a:.6f} {b:.6f}\n" for a, b in pts)
        (out / f"correlation_g{g}.dat").write_text("# gap_budget0 gap_budget\n" + body)
    for g, pts in metrics.solved_over_time(records).items():
        body = "".join(f"{t:.6f} {100 * share:.4f}\n" for t, share in pts)
        (out / f"solved_over_time_g{g}.dat").write_text("# time_s percent_solved\n" + body)
    return texts
