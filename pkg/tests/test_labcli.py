import csv
import json

import numpy as np
import pytest

from mclab.labcli import CSV_COLUMNS, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, cli_main, report_paths, run_completion_experiment
from mclab.models import ExperimentConfig, PatternFamily, ProbeConfig, SolverConfig
from mclab.probe import VIOLATION
from mclab.textio import read_mask, read_matrix, write_matrix


def run(capsys, *argv):
    code = cli_main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def config_file(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


# --- usage ---
def test_missing_subcommand_is_usage_error(capsys):
    code, _, err = run(capsys)
    assert code == EXIT_USAGE
    assert "completion_lab" in err


def test_unknown_family_is_usage_error(capsys):
    code, _, _ = run(capsys, "generate", "checkerboard", 4)
    assert code == EXIT_USAGE


def test_help_exits_cleanly(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == EXIT_OK
    assert "experiment" in out


# --- matrix commands ---
def test_generate_then_probe_half_rows(tmp_path, capsys):
    mask = tmp_path / "mask.txt"
    assert run(capsys, "generate", "half-rows", 8, "-o", mask)[0] == EXIT_OK
    np.testing.assert_array_equal(read_mask(mask)[:4], np.ones((4, 8)))

    report = tmp_path / "probe.json"
    code, out, _ = run(capsys, "probe", mask, "--rank", 1, "-o", report)
    assert code == EXIT_OK
    assert out.startswith(VIOLATION)
    payload = json.loads(report.read_text())
    assert payload["verdict"] == VIOLATION and payload["rankBound"] == 1
    A, B = read_matrix(tmp_path / "probe-A.txt"), read_matrix(tmp_path / "probe-B.txt")
    assert np.sqrt(np.mean((A - B) ** 2)) == pytest.approx(payload["fullDiff"])


def test_generate_to_stdout(capsys):
    code, out, _ = run(capsys, "generate", "parity", 2)
    assert code == EXIT_OK
    assert out == "2 2\n1 0\n0 1\n"


def test_cutnorm_of_zero_matrix(tmp_path, capsys):
    path = write_matrix(tmp_path / "z.txt", np.zeros((3, 3)))
    code, out, _ = run(capsys, "cutnorm", path, "--exact")
    assert code == EXIT_OK
    assert out == "0\n"


def test_cutnorm_heuristic_prints_sandwich(tmp_path, capsys):
    path = write_matrix(tmp_path / "ones.txt", np.ones((30, 30)))
    code, out, _ = run(capsys, "cutnorm", path)
    lines = out.splitlines()
    assert code == EXIT_OK
    assert float(lines[0]) == pytest.approx(1.0)
    assert lines[1].startswith("upper ")


def test_exact_cutnorm_beyond_limit_is_numeric_failure(tmp_path, capsys):
    path = write_matrix(tmp_path / "big.txt", np.zeros((26, 26)))
    code, _, err = run(capsys, "cutnorm", path, "--exact")
    assert code == EXIT_NUMERIC
    assert "enumeration limit" in err


def test_cutdist_of_identical_matrices(tmp_path, capsys, rng):
    A = rng.uniform(size=(4, 4))
    first = write_matrix(tmp_path / "a.txt", A)
    second = write_matrix(tmp_path / "b.txt", A)
    code, out, _ = run(capsys, "cutdist", first, second)
    assert code == EXIT_OK
    value, kind = out.split()
    assert float(value) == pytest.approx(0.0, abs=1e-12)
    assert kind == "exact"


def test_cutdist_shape_mismatch(tmp_path, capsys):
    first = write_matrix(tmp_path / "a.txt", np.zeros((2, 2)))
    second = write_matrix(tmp_path / "b.txt", np.zeros((2, 3)))
    assert run(capsys, "cutdist", first, second)[0] == EXIT_USAGE


def test_discretize_reference_graphon(tmp_path, capsys):
    out_path = tmp_path / "m.txt"
    assert run(capsys, "discretize", "constant-half", 3, 3, "-o", out_path)[0] == EXIT_OK
    np.testing.assert_allclose(read_matrix(out_path), np.full((3, 3), 0.5), atol=1e-15)


def test_verdict_of_half_plane(capsys):
    code, out, _ = run(capsys, "verdict", "half-plane", "--eta", 0.01)
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["admits_recovery"] is False
    assert payload["eta_grid"] == [0.0, 0.01]


def test_complete_full_reveal(tmp_path, capsys, rng):
    A = rng.uniform(-1.0, 1.0, size=(5, 4))
    matrix = write_matrix(tmp_path / "a.txt", A)
    mask = write_matrix(tmp_path / "p.txt", np.ones((5, 4)))
    out_path = tmp_path / "c.txt"
    code, _, err = run(capsys, "complete", matrix, mask, "-o", out_path)
    assert code == EXIT_OK
    assert "converged" in err
    np.testing.assert_allclose(read_matrix(out_path), A, atol=1e-6)


def test_complete_infeasible_is_numeric_failure(tmp_path, capsys):
    matrix = write_matrix(tmp_path / "a.txt", [[2.0, 0.0]])
    mask = write_matrix(tmp_path / "p.txt", [[1.0, 0.0]])
    assert run(capsys, "complete", matrix, mask, "--L", 1.0)[0] == EXIT_NUMERIC


def test_malformed_matrix_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 2\n1 2\n3 four\n")
    code, _, err = run(capsys, "cutnorm", bad)
    assert code == EXIT_USAGE
    assert f"{bad}:3:" in err


def test_undecodable_matrix_is_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_bytes(b"2 2\n1 \xff\n0 0\n")
    code, _, err = run(capsys, "cutnorm", bad)
    assert code == EXIT_USAGE
    assert f"{bad}:2:" in err


def test_fractional_mask_is_format_error(tmp_path, capsys):
    mask = write_matrix(tmp_path / "p.txt", [[0.5, 1.0]])
    assert run(capsys, "probe", mask)[0] == EXIT_USAGE


# --- experiments ---
def test_report_paths():
    assert [p.name for p in report_paths("out/run.json")] == ["run.json", "run.csv"]
    assert [p.name for p in report_paths("out")] == ["report.json", "report.csv"]


def test_full_reveal_experiment(tmp_path, capsys):
    cfg = config_file(tmp_path, "pattern_family = full\nsizes = 4\n")
    out_dir = tmp_path / "run"
    code, out, _ = run(capsys, "experiment", cfg, "-o", out_dir)
    assert code == EXIT_OK
    assert out.split() == [str(out_dir / "report.json"), str(out_dir / "report.csv")]

    report = json.loads((out_dir / "report.json").read_text())
    (row,) = report["perSize"]
    assert row["k"] == 4
    assert row["errModified"] <= 1e-6 and row["errPlain"] <= 1e-6
    assert row["maskedDiff"] is None
    assert report["patternVerdict"]["admitsRecovery"] is True

    with open(out_dir / "report.csv", newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == CSV_COLUMNS
    assert rows[1][0] == "4"


def test_experiment_is_deterministic(tmp_path, capsys):
    cfg = config_file(tmp_path, "pattern_family = half-rows\nsizes = 4 6\nseed = 11\nsolver.max_iters = 200\n")
    out_dir = tmp_path / "run"
    reports = []
    for _ in range(2):
        assert run(capsys, "experiment", cfg, "-o", out_dir)[0] == EXIT_OK
        report = json.loads((out_dir / "report.json").read_text())
        report.pop("metadata")
        reports.append(report)
    assert reports[0] == reports[1]


def test_half_rows_experiment_with_probe(tmp_path):
    cfg = ExperimentConfig(
        pattern_family=PatternFamily.HALF_ROWS,
        sizes=[8, 16],
        rank_bound=1,
        run_probe=True,
        solver=SolverConfig(max_iters=200),
        probe=ProbeConfig(iterations=40, restarts=1),
        output_path=str(tmp_path / "hr.json"),
    )
    outputs = run_completion_experiment(cfg)
    verdict = outputs.report.patternVerdict
    assert verdict.admitsRecovery is False
    assert verdict.phiZero == pytest.approx(0.5)
    assert verdict.probeVerdict == VIOLATION
    assert [rec.k for rec in outputs.report.perSize] == [8, 16]
    assert all(rec.maskedDiff <= 1e-6 and rec.fullDiff >= 0.6 for rec in outputs.report.perSize)
    assert outputs.csv_path.name == "hr.csv"
    assert sorted(p.name for p in outputs.witness_paths) == [
        "hr-probe-k16-A.txt", "hr-probe-k16-B.txt", "hr-probe-k8-A.txt", "hr-probe-k8-B.txt",
    ]


def test_from_file_experiment(tmp_path):
    mask = write_matrix(tmp_path / "p.txt", np.ones((5, 3)))
    cfg = ExperimentConfig(
        pattern_family=PatternFamily.FROM_FILE,
        mask_path=str(mask),
        output_path=str(tmp_path / "ff"),
    )
    report = run_completion_experiment(cfg).report
    (row,) = report.perSize
    assert row.k == 5
    assert row.errModified <= 1e-6


@pytest.mark.slow
def test_quasirandom_experiment_admits_recovery(tmp_path):
    cfg = ExperimentConfig(
        pattern_family=PatternFamily.QUASIRANDOM,
        sizes=[16, 32],
        solver=SolverConfig(max_iters=300),
        output_path=str(tmp_path),
    )
    assert run_completion_experiment(cfg).report.patternVerdict.admitsRecovery is True


def test_invalid_config_value(tmp_path, capsys):
    cfg = config_file(tmp_path, "rank_bound = 0\n")
    code, _, err = run(capsys, "experiment", cfg)
    assert code == EXIT_USAGE
    assert "invalid configuration" in err


def test_unknown_config_key(tmp_path, capsys):
    cfg = config_file(tmp_path, "sizes = 4\nshape = square\n")
    code, _, err = run(capsys, "experiment", cfg)
    assert code == EXIT_USAGE
    assert ":2:" in err
