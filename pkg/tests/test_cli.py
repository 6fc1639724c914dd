import json
import math
import os

import pytest

from qprotect import search
from qprotect.cli import main

ENSEMBLE = ["--theta", "1.0471975512", "--phi", "0", "--s-plus", "0.3333333333"]
SMALL_GRID = ["--grid-alpha=-3.1416:3.1416:0.8", "--grid-p", "0:1:0.25", "--grid-p1", "0:1:0.5",
              "--grid-p2", "0:1:0.5", "--grid-gamma-plus=-1:1:1", "--grid-gamma-minus=-1:1:1"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def data_lines(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def test_simulate_identity_example(capsys):
    code, out, _ = run(capsys, "simulate", "--theta", "1.0471975512", "--phi", "0", "--s-plus", "0.5", "--r", "0",
                       "--alpha", "0", "--p", "0.5", "--p1", "0", "--p2", "0", "--gamma-plus", "0",
                       "--gamma-minus", "0")
    assert code == 0
    assert "F=1.000000" in out.splitlines() and "G=1.000000" in out.splitlines()
    assert "rho_out_plus=" in out


def test_simulate_definite_has_unit_success(capsys):
    code, out, _ = run(capsys, "simulate", *ENSEMBLE, "--r", "0.7", "--alpha", "0.4", "--p", "0.2",
                       "--p1", "0", "--p2", "0", "--gamma-plus", "1", "--gamma-minus", "-2")
    assert code == 0 and "G=1.000000" in out.splitlines()


def test_simulate_rejects_out_of_range(capsys):
    code, _, err = run(capsys, "simulate", *ENSEMBLE, "--r", "0.5", "--p", "1.5")
    assert code == 2 and "p=1.5" in err
    code, _, err = run(capsys, "simulate", *ENSEMBLE, "--r", "0.5", "--p", "0.7", "--paper-range")
    assert code == 2 and "p=0.7" in err
    code, _, err = run(capsys, "simulate", "--r", "0.5")
    assert code == 2 and "--theta" in err


def test_simulate_degenerate_exit_code(capsys):
    code, _, err = run(capsys, "simulate", "--theta", "1.5707963", "--r", "0", "--alpha", "0", "--p", "1",
                       "--p1", "1", "--p2", "1")
    assert code == 3 and "degenerate" in err


def test_simulate_json(capsys):
    code, out, _ = run(capsys, "simulate", *ENSEMBLE, "--r", "0.4", "--format", "json")
    lines = [json.loads(x) for x in out.splitlines()]
    assert code == 0 and "metadata" in lines[0] and set(lines[1]) >= {"F", "G", "error"}


def test_degree_flag(capsys):
    _, rad, _ = run(capsys, "simulate", "--theta", str(math.pi / 3), "--r", "0.6", "--alpha", str(math.pi / 4),
                    "--gamma-plus", str(-math.pi / 6))
    _, deg, _ = run(capsys, "simulate", "--deg", "--theta", "60", "--r", "0.6", "--alpha", "45",
                    "--gamma-plus", "-30")
    assert rad == deg


def test_trace_without_noise(capsys):
    code, out, _ = run(capsys, "trace", *ENSEMBLE, "--r", "0", "--alpha", "0.3", "--p", "0.2",
                       "--input-state", "minus", "--outcome", "plus", "--check")
    assert code == 0
    rows = [line.split() for line in out.splitlines()[1:]]
    assert len(rows) == 9
    assert all(r[-1] == "0.000000" for r in rows if r[1] == "2")


def test_trace_norms_do_not_increase(capsys):
    code, out, _ = run(capsys, "trace", *ENSEMBLE, "--r", "0.6", "--p", "0.3", "--p1", "0.4", "--p2", "0.2",
                       "--format", "csv", "--check")
    assert code == 0
    rows = [line.split(",") for line in data_lines(out)[1:]]
    head = [float(r[-1]) for r in rows[:3]]
    assert head == sorted(head, reverse=True)
    for j in ("1", "2"):
        chain = [float(r[-1]) for r in rows if r[1] == j]
        assert all(b <= a + 1e-12 for a, b in zip(chain, chain[1:])) and chain[0] <= head[-1] + 1e-12


def test_sweep_csv_schema(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, _, _ = run(capsys, "sweep", *ENSEMBLE, "--r", "0.9", *SMALL_GRID, "--seed", "7", "-o", str(out))
    assert code == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    text = raw.decode()
    meta = json.loads("\n".join(line[2:] for line in text.splitlines() if line.startswith("# ")))
    assert meta["seed"] == 7 and meta["config"]["r"] == 0.9 and meta["version"]
    lines = data_lines(text)
    assert lines[0] == ("theta,phi,s_plus,r,alpha,p,p1,p2,gamma_plus,gamma_minus,"
                        "f_plus,f_minus,g_plus,g_minus,F,G,error")
    assert len(lines) - 1 == 8 * 5 * 3 * 3 * 3 * 3
    first = lines[1].split(",")
    assert len(first) == 17
    assert all(len(v.replace("-", "").replace(".", "").lstrip("0").split("e")[0]) <= 12 for v in first[:16] if v)
    assert not [p for p in os.listdir(tmp_path) if p.startswith(".qprotect-")]


def test_sweep_json(capsys):
    code, out, _ = run(capsys, "sweep", *ENSEMBLE, "--r", "0.5", "--grid-alpha", "0", "--grid-p", "0.5",
                       "--grid-p1", "0", "--grid-p2", "0", "--grid-gamma-plus", "0", "--grid-gamma-minus", "0",
                       "--format", "json")
    lines = [json.loads(x) for x in out.splitlines()]
    assert code == 0 and len(lines) == 2 and lines[1]["G"] == 1.0


def test_sweep_marks_degenerate_points(capsys):
    code, out, _ = run(capsys, "sweep", "--theta", "1.5707963267948966", "--r", "0", "--grid-alpha", "0",
                       "--grid-p", "1", "--grid-p1", "1", "--grid-p2", "0:1:1", "--grid-gamma-plus", "0",
                       "--grid-gamma-minus", "0")
    rows = data_lines(out)[1:]
    assert code == 0 and len(rows) == 2 and rows[1].endswith(",degenerate")


@pytest.mark.parametrize("command,extra", [("sweep", []), ("pareto", ["--bins", "10"])])
def test_outputs_identical_across_worker_counts(tmp_path, capsys, command, extra):
    paths = []
    for jobs in ("1", "3"):
        path = tmp_path / f"{command}-{jobs}.csv"
        assert main([command, *ENSEMBLE, "--r", "0.9", *SMALL_GRID, *extra, "--seed", "3",
                     "--jobs", jobs, "-o", str(path)]) == 0
        paths.append(path)
    capsys.readouterr()
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_config_file_and_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\ntheta = 1.0\nr=0.3\np = 0.25\nparaper=1\n")
    code, _, err = run(capsys, "simulate", "--config", str(cfg))
    assert code == 2 and "paraper" in err
    cfg.write_text("theta = 1.0\nr=0.3\np = 0.25\npaper-range = true\n")
    _, from_file, _ = run(capsys, "simulate", "--config", str(cfg))
    _, direct, _ = run(capsys, "simulate", "--theta", "1.0", "--r", "0.3", "--p", "0.25")
    assert from_file == direct
    _, overridden, _ = run(capsys, "simulate", "--config", str(cfg), "--p", "0.4")
    _, direct, _ = run(capsys, "simulate", "--theta", "1.0", "--r", "0.3", "--p", "0.4")
    assert overridden == direct


def test_pareto_rows(capsys):
    code, out, _ = run(capsys, "pareto", *ENSEMBLE, "--r", "0.9", *SMALL_GRID, "--bins", "5")
    rows = data_lines(out)
    assert code == 0 and rows[0].startswith("kind,bin,g_target,F,G")
    assert len(rows) == 1 + 5 + 1 and rows[-1].startswith("unit,5,1,")


def test_compare_emits_delta(capsys):
    code, out, _ = run(capsys, "compare", *ENSEMBLE, "--r", "0.9", *SMALL_GRID, "--bins", "5",
                       "--baseline", "qcc")
    rows = [r.split(",") for r in data_lines(out)]
    header = rows[0]
    assert code == 0 and "delta" in header
    k = header.index("delta")
    deltas = [float(r[k]) for r in rows[1:] if r[k]]
    assert deltas and min(deltas) >= -1e-12


def test_definite_opt_all_baselines(capsys):
    code, out, _ = run(capsys, "definite-opt", "--theta", "0.5235987756", "--s-plus", "0.3333333333",
                       "--r", "0.8")
    rows = {r.split(",")[0]: r.split(",") for r in data_lines(out)[1:]}
    assert code == 0 and set(rows) == {k.value for k in search.BaselineKind}
    assert float(rows["gqcc"][3]) < float(rows["helstrom"][3]) < float(rows["qcc"][3])


def test_heatmap_matrix(capsys):
    code, out, _ = run(capsys, "heatmap", "--quantity", "delta", "--axis1", "theta:0.5:1.5:0.5",
                       "--axis2", "r:0:1:0.5", "--s-plus", "0.5", "--baseline", "qcc")
    rows = [r.split(",") for r in data_lines(out)]
    assert code == 0 and rows[0] == ["theta", "r", "delta"] and len(rows) == 1 + 3 * 3
    assert all(abs(float(r[2])) < 1e-9 for r in rows[1:] if float(r[1]) == 0)
    code, _, err = run(capsys, "heatmap", "--axis1", "theta:0:1:0.5")
    assert code == 2 and "axis2" in err


def test_validate_closed_form_report(capsys):
    code, out, _ = run(capsys, "validate-closed-form", "--theta", "1.0471975512", "--r", "0.6")
    rows = [r.split(",", 2) for r in data_lines(out)[1:]]
    kinds = [r[0] for r in rows]
    assert code == 0 and kinds.count("rms") == 4
    assert sum("complete-damping" in r[1] for r in rows) == 4


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--draws", "200", "--seed", "42")
    assert code == 0 and "PASS" in out
    assert "protect_vs_superoperator" in out


def test_jobs_environment_fallback(monkeypatch):
    monkeypatch.setenv("QPROTECT_JOBS", "3")
    assert search.default_jobs() == 3
    monkeypatch.delenv("QPROTECT_JOBS")
    assert search.default_jobs() >= 1


def test_usage_errors(capsys):
    assert main([]) == 2
    assert main(["simulate", "--jobs", "0", "--theta", "1", "--r", "0"]) == 2
    capsys.readouterr()
