"""Command-line contract: files, determinism, exit codes, config merging."""

import csv
import json

import numpy as np
import pytest

from zeemanlab.cli import OUTPUT_DIR_ENV, main, parse_rho


def run(args):
    return main(args)


# ---------------------------------------------------------------------------
# rho parsing
# ---------------------------------------------------------------------------


def test_parse_rho_forms():
    assert parse_rho("1")(np.array([5.0]))[0] == 1.0
    assert parse_rho("x")(np.array([5.0]))[0] == 5.0
    assert parse_rho("x^3")(np.array([2.0]))[0] == 8.0
    assert parse_rho("1,0,2")(np.array([2.0]))[0] == 9.0


def test_parse_rho_rejects_garbage():
    from zeemanlab.cli import ConfigError

    with pytest.raises(ConfigError):
        parse_rho("sin(x)")


# ---------------------------------------------------------------------------
# cluster command
# ---------------------------------------------------------------------------


def test_cluster_writes_artifacts(tmp_path):
    out = tmp_path / "run"
    code = run(["cluster", "--N", "6", "--B", "1", "--q", "17", "--out", str(out)])
    assert code == 0
    rows = list(csv.reader((out / "cluster_spectrum.csv").open()))
    assert rows[0] == ["N", "m", "shift", "scaled_shift"]
    assert len(rows) - 1 == 49
    summary = json.loads((out / "cluster_summary.json").read_text())
    assert summary["subclusters"]["0"] == 7
    assert summary["ks_vs_triangular"] < 0.2
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "cluster"
    assert "zeemanlab" in manifest["versions"]


def test_cluster_zero_field_point_mass(tmp_path):
    out = tmp_path / "zero"
    assert run(["cluster", "--N", "4", "--B", "0", "--out", str(out)]) == 0
    record = json.loads((out / "cluster_spectrum.json").read_text())
    assert all(v == 0.0 for v in record["scaled_shifts"])
    summary = json.loads((out / "cluster_summary.json").read_text())
    assert summary["subclusters"] is None
    # the reference law degenerates to the point mass; the only residue is
    # cumulative-weight rounding
    assert summary["ks_vs_triangular"] <= 1e-12


def test_cluster_large_shell_summary(tmp_path):
    out = tmp_path / "big"
    code = run(
        ["cluster", "--N", "200", "--B", "1", "--q", "17", "--mode", "first_order", "--out", str(out)]
    )
    assert code == 0
    summary = json.loads((out / "cluster_summary.json").read_text())
    assert summary["ks_vs_triangular"] <= 0.02
    assert summary["max_center_distance"] <= 1e-6


def test_cluster_multishell_counts(tmp_path):
    out = tmp_path / "band"
    code = run(
        ["cluster", "--N", "10", "--mode", "multishell", "--delta", "2", "--out", str(out)]
    )
    assert code == 0
    record = json.loads((out / "cluster_spectrum.json").read_text())
    assert len(record["shifts"]) == 121


def test_cluster_separation_failure_exit_code(tmp_path):
    out = tmp_path / "fail"
    code = run(
        [
            "cluster",
            "--N",
            "2",
            "--B",
            "50000",
            "--q",
            "0.1",
            "--mode",
            "multishell",
            "--delta",
            "1",
            "--out",
            str(out),
        ]
    )
    assert code == 2


def test_cluster_csv_round_trips_json_values(tmp_path):
    out = tmp_path / "rt"
    assert run(["cluster", "--N", "7", "--out", str(out)]) == 0
    record = json.loads((out / "cluster_spectrum.json").read_text())
    rows = list(csv.DictReader((out / "cluster_spectrum.csv").open()))
    # 17 significant digits are lossless for doubles
    for row, shift, scaled in zip(rows, record["shifts"], record["scaled_shifts"]):
        assert float(row["shift"]) == shift
        assert float(row["scaled_shift"]) == scaled


def test_cluster_paramagnetic_flag(tmp_path):
    out = tmp_path / "para"
    assert run(["cluster", "--N", "5", "--no-diamagnetic", "--out", str(out)]) == 0
    summary = json.loads((out / "cluster_summary.json").read_text())
    assert summary["diamagnetic_slack"] == 0.0
    assert summary["max_center_distance"] <= 1e-15


def test_cluster_deterministic_output(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert run(["cluster", "--N", "5", "--out", str(out)]) == 0
    for name in ("cluster_spectrum.csv", "cluster_spectrum.json", "cluster_summary.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


# ---------------------------------------------------------------------------
# szego command
# ---------------------------------------------------------------------------


def test_szego_table_and_gaps(tmp_path):
    out = tmp_path / "sz"
    code = run(
        ["szego", "--rho", "x^2", "--B", "2", "--N-list", "25,50,100", "--out", str(out)]
    )
    assert code == 0
    rows = list(csv.DictReader((out / "szego_table.csv").open()))
    gaps = [float(r["gap"]) for r in rows]
    assert gaps == sorted(gaps, reverse=True)
    assert gaps[-1] <= 3.0 / 100.0
    summary = json.loads((out / "szego_summary.json").read_text())
    assert summary["limit_triangular"] == pytest.approx(1.0 / 6.0, abs=1e-10)


def test_szego_constant_gap_zero(tmp_path):
    out = tmp_path / "szc"
    assert run(["szego", "--rho", "1", "--N-list", "30,60", "--out", str(out)]) == 0
    rows = list(csv.DictReader((out / "szego_table.csv").open()))
    assert all(abs(float(r["gap"])) <= 1e-12 for r in rows)


def test_szego_odd_symmetry(tmp_path):
    out = tmp_path / "szo"
    assert run(["szego", "--rho", "x^3", "--N-list", "40", "--out", str(out)]) == 0
    summary = json.loads((out / "szego_summary.json").read_text())
    assert abs(summary["limit_triangular"]) <= 1e-10
    assert abs(summary["final_gap"]) <= 1e-10


def test_szego_mc_requires_seed(tmp_path):
    out = tmp_path / "szmc"
    code = run(["szego", "--samples", "1000", "--out", str(out)])
    assert code == 1


# ---------------------------------------------------------------------------
# coherent command
# ---------------------------------------------------------------------------


def test_coherent_requires_seed(tmp_path):
    assert run(["coherent", "--m", "1", "--out", str(tmp_path / "x")]) == 1


def test_coherent_slope(tmp_path):
    out = tmp_path / "coh"
    code = run(
        [
            "coherent",
            "--m",
            "1",
            "--N-list",
            "8,16,32,64",
            "--seed",
            "7",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    summary = json.loads((out / "coherent_summary.json").read_text())
    assert -1.2 <= summary["slope"] <= -0.8
    rows = list(csv.DictReader((out / "coherent_convergence.csv").open()))
    assert [int(r["N"]) for r in rows] == [8, 16, 32, 64]


def test_coherent_deterministic_for_seed(tmp_path):
    outs = [tmp_path / "c1", tmp_path / "c2"]
    for out in outs:
        assert (
            run(
                [
                    "coherent",
                    "--m",
                    "1",
                    "--N-list",
                    "4,8",
                    "--seed",
                    "3",
                    "--out",
                    str(out),
                ]
            )
            == 0
        )
    assert (outs[0] / "coherent_summary.json").read_bytes() == (
        outs[1] / "coherent_summary.json"
    ).read_bytes()


# ---------------------------------------------------------------------------
# kepler command
# ---------------------------------------------------------------------------


def test_kepler_period_report(tmp_path):
    out = tmp_path / "kep"
    code = run(["kepler", "--ell", "0.05", "--tol", "1e-10", "--out", str(out)])
    assert code == 0
    summary = json.loads((out / "kepler_summary.json").read_text())
    assert abs(summary["period_minus_2pi"]) <= 1e-6
    assert summary["max_energy_drift"] <= 1e-9
    rows = list(csv.DictReader((out / "trajectory.csv").open()))
    assert set(rows[0].keys()) == {
        "s",
        "x1",
        "x2",
        "x3",
        "p1",
        "p2",
        "p3",
        "energy",
        "ell3",
    }


# ---------------------------------------------------------------------------
# measures command
# ---------------------------------------------------------------------------


def test_measures_summary(tmp_path):
    out = tmp_path / "ms"
    code = run(["measures", "--samples", "200000", "--seed", "7", "--out", str(out)])
    assert code == 0
    summary = json.loads((out / "measures_summary.json").read_text())
    assert summary["pushforward"]["max_pointwise_gap"] <= 1e-9
    assert summary["pushforward"]["ks_vs_triangular"] <= 0.01
    assert abs(summary["haar_normalization"] - 1.0) <= 1e-6
    assert summary["beta_marginalization_gap"] <= 1e-8


def test_measures_requires_seed(tmp_path):
    assert run(["measures", "--samples", "1000", "--out", str(tmp_path / "x")]) == 1


# ---------------------------------------------------------------------------
# config file and environment
# ---------------------------------------------------------------------------


def test_config_file_merges_under_flags(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"N": 4, "B": 2.0}))
    out = tmp_path / "cfgrun"
    code = run(
        ["--config", str(cfg), "cluster", "--B", "1.0", "--out", str(out)]
    )
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    # N comes from the file, B from the explicit flag
    assert manifest["config"]["N"] == 4
    assert manifest["config"]["B"] == 1.0


def test_bad_config_file_is_usage_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("not json")
    assert run(["--config", str(cfg), "cluster", "--N", "3"]) == 1


def test_output_dir_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "envout"))
    assert run(["cluster", "--N", "3"]) == 0
    assert (tmp_path / "envout" / "cluster_summary.json").exists()
