"""Run records: one row per (instance, method, budget, deadline factor)."""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable

from ..milp.backends import STATUSES as SOLVER_STATUSES

HEURISTIC_STATUSES = ("heuristic", "error", "skipped")
STATUSES = SOLVER_STATUSES + HEURISTIC_STATUSES


@dataclass(frozen=True)
class RunRecord:
    """Times in seconds; objective, bound and deadline in original units."""

    instance: str
    n: int
    nc: float | None = None
    rf: float | None = None
    rs: float | None = None
    gamma: int = 0
    alpha: float | None = None
    beta: float | None = None
    method: str = ""
    status: str = "skipped"
    objective: float | None = None
    bound: float | None = None
    deadline: float | None = None
    anchored_jobs: int | None = None
    br_time_s: float | None = None
    brs_time_s: float | None = None
    solve_time_s: float | None = None
    artifact: str = ""
    note: str = ""

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def key(self) -> tuple:
        return (self.instance, self.method, self.gamma, self.beta if self.beta is not None else -1.0)


RUN_FIELDS = tuple(f.name for f in fields(RunRecord))
_INT = {"n", "gamma", "anchored_jobs"}
_STR = {"instance", "method", "status", "artifact", "note"}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}".rstrip("0").rstrip(".") if not value.is_integer() else str(int(value))
    return str(value)


def to_row(rec: RunRecord) -> dict[str, str]:
    return {k: _fmt(v) for k, v in asdict(rec).items()}


def from_row(row: dict[str, str]) -> RunRecord:
    kw = {}
    for name in RUN_FIELDS:
        raw = row.get(name, "")
        if name in _STR:
            kw[name] = raw
        elif raw == "":
            kw[name] = None
        elif name in _INT:
            kw[name] = int(raw)
        else:
            kw[name] = float(raw)
    if kw["gamma"] is None:
        kw["gamma"] = 0
    return RunRecord(**kw)


def records_to_csv(records: Iterable[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=RUN_FIELDS, lineterminator="\n")
    w.writeheader()
    for rec in records:
        w.writerow(to_row(rec))
    return buf.getvalue()


def read_records(path: str | Path) -> list[RunRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames) != list(RUN_FIELDS):
            raise ValueError(f"{path}: header does not match the run-record schema")
        return [from_row(r) for r in reader]


def append_records(path: str | Path, records: Iterable[RunRecord]) -> None:
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RUN_FIELDS, lineterminator="\n")
        if new:
            w.writeheader()
        for rec in records:
            w.writerow(to_row(rec))
