import json
import re

import numpy as np
import pytest

from ftspan.cli import main
from ftspan.metric import load_points


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_gen_deterministic_and_line_monotone(tmp_path, capsys):
    a = tmp_path / "a.txt"
    b = tmp_path / "b.txt"
    for path in (a, b):
        code, _, _ = run(capsys, "gen", "--n", "40", "--dim", "2",
                         "--dist", "uniform", "--seed", "7", "--out", str(path))
        assert code == 0
    assert a.read_text() == b.read_text()
    line = tmp_path / "line.txt"
    run(capsys, "gen", "--n", "30", "--dist", "line", "--seed", "3",
        "--out", str(line))
    xs = load_points(str(line)).coords.ravel()
    assert (np.diff(xs) > 0).all()


def test_build_verify_round_trip(tmp_path, capsys):
    pts = tmp_path / "pts.txt"
    run(capsys, "gen", "--n", "24", "--seed", "5", "--out", str(pts))
    spanner = tmp_path / "spanner.edges"
    report = tmp_path / "report.json"
    code, _, err = run(capsys, "build", str(pts), "--eps", "0.1", "--faults", "2",
                       "--profile", "practical", "--out", str(spanner),
                       "--report", str(report))
    assert code == 0
    rep = json.loads(report.read_text())
    assert rep["n"] == 24 and rep["h_edges"] > 0
    code, out, _ = run(capsys, "verify", str(pts), str(spanner),
                       "--eps", "0.1", "--faults", "2", "--trials", "50")
    assert code == 0
    payload = json.loads(out)
    assert payload["ft"]["passed"] is True
    assert payload["degree_ok"] is True


def test_verify_detects_missing_edge(tmp_path, capsys):
    pts = tmp_path / "pts.txt"
    run(capsys, "gen", "--n", "16", "--seed", "6", "--out", str(pts))
    spanner = tmp_path / "spanner.edges"
    report = tmp_path / "report.json"
    run(capsys, "build", str(pts), "--eps", "0.1", "--faults", "1",
        "--out", str(spanner), "--report", str(report))
    lines = spanner.read_text().splitlines()
    n, m = lines[0].split()
    # drop every edge incident to vertex 0: faulting its neighbor then isolates it
    kept = [ln for ln in lines[1:] if not re.match(r"^0 ", ln)]
    spanner.write_text(f"{n} {len(kept)}\n" + "\n".join(kept) + "\n")
    code, out, _ = run(capsys, "verify", str(pts), str(spanner),
                       "--eps", "0.1", "--faults", "1", "--exhaustive")
    assert code == 1
    payload = json.loads(out)
    assert payload["ft"]["passed"] is False
    assert payload["ft"]["worst_pair"] is not None  # witness pair included
    assert payload["ft"]["worst_pair"][0] == 0  # the isolated vertex


def test_missing_input_exit_2(tmp_path, capsys):
    code, _, err = run(capsys, "build", str(tmp_path / "nope.txt"))
    assert code == 2
    assert "error" in err


def test_exhaustive_over_budget_exit_2(tmp_path, capsys):
    pts = tmp_path / "pts.txt"
    run(capsys, "gen", "--n", "40", "--seed", "2", "--out", str(pts))
    spanner = tmp_path / "s.edges"
    report = tmp_path / "r.json"
    run(capsys, "build", str(pts), "--faults", "6", "--out", str(spanner),
        "--report", str(report))
    # C(40, <=6) is about 4.5M fault sets, over the 1e6 budget
    code, _, err = run(capsys, "verify", str(pts), str(spanner), "--faults", "6",
                       "--exhaustive")
    assert code == 2
    assert "sampled" in err


def test_faithful_large_n_warns(tmp_path, capsys):
    pts = tmp_path / "pts.txt"
    run(capsys, "gen", "--n", "60", "--seed", "1", "--out", str(pts))
    code, _, err = run(capsys, "build", str(pts), "--profile", "faithful",
                       "--out", str(tmp_path / "s.edges"),
                       "--report", str(tmp_path / "r.json"))
    assert code == 0
    assert "collapse" in err


def test_stats(tmp_path, capsys):
    pts = tmp_path / "pts.txt"
    run(capsys, "gen", "--n", "10", "--seed", "4", "--out", str(pts))
    dump = tmp_path / "tree.txt"
    code, out, _ = run(capsys, "stats", str(pts), "--dump-tree", str(dump))
    assert code == 0
    payload = json.loads(out)
    assert payload["n"] == 10 and payload["min_distance"] == pytest.approx(64.0)
    assert dump.read_text().count("\n") == sum(payload["net_sizes"])


def test_bench_csv_deterministic_modulo_timing(tmp_path, capsys):
    out1 = tmp_path / "b1.csv"
    out2 = tmp_path / "b2.csv"
    for out in (out1, out2):
        code, _, _ = run(capsys, "bench", "--sizes", "16,32", "--faults", "1,2",
                         "--trials", "5", "--seed", "3", "--out", str(out))
        assert code == 0

    def mask(text):
        rows = [r.split(",") for r in text.strip().splitlines()]
        for row in rows[1:]:
            row[4] = "X"  # build_ms column is wall-clock
        return rows

    assert mask(out1.read_text()) == mask(out2.read_text())
    header = out1.read_text().splitlines()[0].split(",")
    assert header == ["n", "f", "eps", "seed", "build_ms", "edges",
                      "max_degree", "lightness", "worst_sampled_stretch"]


def test_build_report_matches_in_memory(tmp_path, capsys):
    # round trip: build -> write -> read -> verify gives the same audit fields
    pts = tmp_path / "pts.txt"
    run(capsys, "gen", "--n", "20", "--seed", "8", "--out", str(pts))
    spanner = tmp_path / "s.edges"
    report = tmp_path / "r.json"
    run(capsys, "build", str(pts), "--out", str(spanner), "--report", str(report))
    code, out, _ = run(capsys, "verify", str(pts), str(spanner), "--trials", "20")
    assert code == 0
    payload = json.loads(out)
    rep = json.loads(report.read_text())
    assert payload["edges"] == rep["h_edges"]
    assert payload["max_degree"] == rep["max_degree"]
    assert payload["lightness"] == pytest.approx(rep["lightness"])
