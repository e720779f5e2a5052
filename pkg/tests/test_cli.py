import csv
import io
import random
import subprocess
import sys
from dataclasses import replace

import pytest

from conftest import DATA, J301
from robust_rcpsp.cli import main
from robust_rcpsp.cli.bench import BenchConfig, audit, bench
from robust_rcpsp.cli.metrics import (DASH, anch_gap, br_gap, gap, gap_metrics, gap_n, pct, pearson,
                                      solve_summary)
from robust_rcpsp.cli.records import RUN_FIELDS, RunRecord, append_records, read_records, records_to_csv
from robust_rcpsp.cli.report import write_report


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_metric_examples():
    assert pct(br_gap(110, 100)) == "9.09%"
    assert anch_gap(5, 0) is None and pct(anch_gap(5, 0)) == DASH
    assert pct(gap_n(5, 0, 30)) == "16.67%"
    assert gap(42, 42) == 0
    assert gap(None, 3) is None and gap(0, 0) is None


def test_pearson_examples():
    xs = [0.1, 0.4, 0.2, 0.9]
    assert pearson(xs, xs) == pytest.approx(1.0)
    assert pearson(xs, [-x for x in xs]) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        pearson([1, 2], [1, 2, 3])


def test_record_csv_round_trip(tmp_path):
    recs = [RunRecord("j301_1", 30, 1.5, 0.25, 0.2, 3, 0.5, None, "adj", "timeout", 56.5, 51, None, None,
                      None, None, 12.25, "", "cbc"),
            RunRecord("j301_1", 30, gamma=3, beta=1.3, method="brs", status="heuristic", objective=28,
                      anchored_jobs=28, deadline=71.5)]
    text = records_to_csv(recs)
    assert text.splitlines()[0] == ",".join(RUN_FIELDS)
    path = tmp_path / "runs.csv"
    append_records(path, recs[:1])
    append_records(path, recs[1:])
    assert read_records(path) == recs
    with pytest.raises(ValueError):
        RunRecord("x", 1, status="done")
    (tmp_path / "bad.csv").write_text("instance,n\nx,1\n")
    with pytest.raises(ValueError, match="header"):
        read_records(tmp_path / "bad.csv")


def synthetic_records():
    out = []
    for i in range(6):
        name = f"j30{i}_1"
        opt = 50 + i
        solved = i % 3 != 0
        out.append(RunRecord(name, 30, 1.5, 0.25, 0.2 * (1 + i % 2), 3, 0.5, None, "adj",
                             "optimal" if solved else "timeout", opt + (0 if solved else 2), opt - 1 + solved,
                             solve_time_s=1.0 + i))
        out.append(RunRecord(name, 30, 1.5, 0.25, 0.2 * (1 + i % 2), 0, 0.5, None, "det", "optimal", opt - 8,
                             opt - 8, solve_time_s=0.5))
        out.append(RunRecord(name, 30, gamma=3, method="br", status="heuristic", objective=opt + i % 2,
                             br_time_s=0.01))
        for j, rule in enumerate(("ID", "SPT")):
            for g, base in ((0, opt - 8), (3, opt)):
                out.append(RunRecord(name, 30, gamma=g, method=f"rule:{rule}", status="heuristic",
                                     objective=base + (i * (j + 1)) % 4))
        for beta in (1.0, 1.3):
            out.append(RunRecord(name, 30, gamma=3, beta=beta, method="anch", status="optimal",
                                 objective=20 + 5 * beta + i, bound=20 + 5 * beta + i, anchored_jobs=20 + i))
            out.append(RunRecord(name, 30, gamma=3, beta=beta, method="brs", status="heuristic",
                                 objective=18 + i, anchored_jobs=18 + i, br_time_s=0.01, brs_time_s=0.2))
    return out


def test_summary_counts():
    (row,) = solve_summary(synthetic_records(), "adj")
    assert (row["instances"], row["solved"], row["unsolved"]) == (6, 4, 2)
    assert row["time_solved_s"] == pytest.approx((2 + 3 + 5 + 6) / 4)
    assert row["time_all_s"] == pytest.approx(3.5)


def test_report_idempotent_and_order_independent(tmp_path):
    recs = synthetic_records()
    first = write_report(recs, tmp_path / "a")
    shuffled = recs[:]
    random.Random(3).shuffle(shuffled)
    assert write_report(shuffled, tmp_path / "b") == first
    assert write_report(shuffled + recs, tmp_path / "c") == first
    for name in first:
        assert (tmp_path / "a" / f"{name}.csv").read_text() == (tmp_path / "b" / f"{name}.csv").read_text()
    tables = gap_metrics(recs)
    assert tables["correlation"][0]["points"] == 8
    assert [(r["param"], r["value"], r["instances"]) for r in tables["adj_by_params"]] == [
        ("NC", 1.5, 6), ("RF", 0.25, 6), ("RS", 0.2, 3), ("RS", 0.4, 3)]


def test_cli_parse(capsys):
    assert main(["parse", str(J301)]) == 0
    out = capsys.readouterr().out
    assert "jobs       30" in out and "RF=0.25" in out
    assert main(["parse", "chain3", "--dump"]) == 0
    assert capsys.readouterr().out.startswith("#")


def test_cli_parse_errors(tmp_path, capsys):
    bad = tmp_path / "bad.sm"
    bad.write_text("garbage\n")
    assert main(["parse", str(bad)]) == 2
    assert "error:" in capsys.readouterr().err
    assert main(["parse", str(tmp_path / "missing.sm")]) == 2


def test_cli_heur_adj(capsys):
    assert main(["heur-adj", "par2", "--gamma", "1"]) == 0
    (row,) = rows(capsys.readouterr().out)
    assert (row["method"], row["objective"], row["note"], row["gamma"]) == ("br", "6", "ID", "1")
    assert main(["heur-adj", str(J301), "--all-rules"]) == 0
    out = rows(capsys.readouterr().out)
    assert [r["method"] for r in out][-1] == "br" and len(out) == 8
    assert float(out[-1]["objective"]) == min(float(r["objective"]) for r in out[:-1])


def test_cli_heur_anch(capsys, tmp_path):
    target = tmp_path / "brs.csv"
    assert main(["heur-anch", "chain3", "--beta", "1.0", "1.2", "--backend", "none", "--csv", str(target)]) == 0
    out = rows(capsys.readouterr().out)
    assert [(r["beta"], r["anchored_jobs"], r["deadline"]) for r in out] == [("1", "1", "6"), ("1.2", "2", "7")]
    assert len(read_records(target)) == 2


def test_cli_emit_only(tmp_path):
    lp, mps = tmp_path / "m.lp", tmp_path / "m.mps"
    assert main(["solve-anch", "chain3", "--deadline", "7", "--emit-lp", str(lp), "--emit-mps", str(mps),
                 "--emit-only"]) == 0
    assert lp.read_text().startswith("\\ Model anch_CHAIN3_g1_m14")
    assert mps.read_text().endswith("ENDATA\n")


def test_cli_requires_backend(capsys):
    assert main(["solve-adj", "par2", "--gamma", "1", "--backend", "none"]) == 2
    assert "no solver backend" in capsys.readouterr().err


def test_cli_oracle(capsys):
    assert main(["oracle", "--check", "q-gamma", "--seeds", "20"]) == 0
    assert "PASS" in capsys.readouterr().out


@pytest.mark.solver
def test_cli_solvers(capsys, backend):
    assert main(["solve-adj", "par2", "--gamma", "1", "--backend", backend.name]) == 0
    (row,) = rows(capsys.readouterr().out)
    assert (row["status"], row["objective"]) == ("optimal", "6")
    assert main(["solve-det", "par2", "--backend", backend.name]) == 0
    assert rows(capsys.readouterr().out)[0]["objective"] == "5"
    assert main(["solve-anch", "chain3", "--deadline-from-bestrule", "--beta", "1.0",
                 "--backend", backend.name]) == 0
    (row,) = rows(capsys.readouterr().out)
    assert (row["objective"], row["anchored_jobs"], row["deadline"]) == ("1", "1", "6")


def test_bench_and_audit(tmp_path, capsys):
    out = tmp_path / "runs.csv"
    art = tmp_path / "art"
    assert main(["bench", str(DATA), "--methods", "br", "rules", "brs", "--gammas", "3", "--betas", "1.0",
                 "1.3", "--out", str(out), "--artifacts", str(art), "--backend", "none"]) == 0
    recs = read_records(out)
    assert {r.method for r in recs} == {"br", "brs"} | {f"rule:{r}" for r in
                                                      ("ID", "SPT", "MTS", "LFT", "LST", "MSLK", "GRPW")}
    assert all(r.status == "heuristic" for r in recs if r.method != "brs")
    checked = audit(recs)
    assert checked and all(ok for _, ok, _ in checked)
    assert main(["report", str(out), "--out-dir", str(tmp_path / "rep"), "--audit"]) == 0
    assert "audit: PASS" in capsys.readouterr().out

    tampered = [replace(r, objective=r.objective + 1) if r.method == "br" else r for r in recs]
    assert not all(ok for _, ok, _ in audit(tampered))


def test_bench_parallel_matches_serial(tmp_path):
    cfg = BenchConfig(methods=("br",), gammas=(1, 3))
    one = bench([str(J301)], cfg)
    two = bench([str(J301)], cfg, workers=2)
    assert [(r.method, r.gamma, r.objective) for r in one] == [(r.method, r.gamma, r.objective) for r in two]


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "robust_rcpsp", "parse", "par2"], capture_output=True, text=True)
    assert done.returncode == 0 and "jobs       2" in done.stdout
