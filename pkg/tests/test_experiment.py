"""Experiment orchestration, serialization contracts, and the CLI."""

import json

import numpy as np
import pytest

from icflow import ParameterError, cli
from icflow.experiment import (
    CSV_HEADER,
    DEFAULT_TOLERANCES,
    ExperimentConfig,
    build_initial_curve,
    checks_for_mode,
    config_from_dict,
    load_config,
    run_experiment,
    serialize_json,
    write_svg,
)

EXPECTED_HEADER = (
    "t,length,kappa_min,kappa_max,min_Z,tbar,thm12_residual,l2_deficit,"
    "dkappa_max,d2kappa_max,gn_ratio,bonnesen_gap,hausdorff,center_norm"
)


def circle_config(tmp_path, **extra):
    data = {
        "shape": "circle",
        "n": 64,
        "dt": 1e-3,
        "t_end": 0.5,
        "snapshot_interval": 0.1,
        "out": str(tmp_path / "run.csv"),
        "summary_out": str(tmp_path / "summary.json"),
    }
    data.update(extra)
    return config_from_dict(data)


def test_csv_header_is_a_frozen_contract():
    assert CSV_HEADER == EXPECTED_HEADER


def test_checks_for_mode_ordering():
    normalized = checks_for_mode("normalized")
    assert normalized == (
        "min_Z", "sup_bound", "extrema_drift", "l2_decay",
        "derivative_ladder", "gn_bound", "bonnesen_decay", "convergence",
    )
    assert checks_for_mode("unnormalized") == normalized + ("length_law",)
    assert checks_for_mode("both") == normalized + ("length_law", "cross_check")
    assert set(DEFAULT_TOLERANCES) == set(checks_for_mode("both"))


def test_config_defaults_round_trip():
    assert config_from_dict({}) == ExperimentConfig()
    cfg = ExperimentConfig()
    assert cfg.resolved_checks() == checks_for_mode("normalized")
    assert cfg.resolved_tolerances() == DEFAULT_TOLERANCES


def test_config_tolerance_override_merges():
    cfg = config_from_dict({"tolerances": {"min_Z": 1e-2}})
    merged = cfg.resolved_tolerances()
    assert merged["min_Z"] == 1e-2
    assert merged["convergence"] == DEFAULT_TOLERANCES["convergence"]


def test_config_check_subset_keeps_canonical_order():
    cfg = config_from_dict({"checks": ["convergence", "min_Z"]})
    assert cfg.resolved_checks() == ("min_Z", "convergence")


@pytest.mark.parametrize(
    "data",
    [
        {"frequency": 3},
        {"shape": "square"},
        {"mode": "renormalized"},
        {"dt": 0.0},
        {"dt": -1e-3},
        {"t_end": 0},
        {"n": 8},
        {"n": True},
        {"n": 64.0},
        {"safety": 2.0},
        {"resample_every": 0},
        {"checks": ["length_law"]},  # normalized mode has no length law
        {"checks": ["bogus"]},
        {"tolerances": {"bogus": 1.0}},
        {"out": ""},
        {"amplitudes": "big"},
    ],
    ids=lambda d: next(iter(d)),
)
def test_config_rejects_bad_values(data):
    with pytest.raises(ParameterError):
        config_from_dict(data)


def test_load_config_file_with_overrides(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"shape": "ellipse", "n": 64, "dt": 1e-3}))
    cfg = load_config(str(path), {"n": 128, "t_end": 1.0, "mode": None})
    assert cfg.shape == "ellipse"
    assert cfg.n == 128  # flag beats file
    assert cfg.t_end == 1.0
    assert cfg.mode == "normalized"  # None overrides are ignored


def test_load_config_error_paths(tmp_path):
    with pytest.raises(ParameterError):
        load_config(str(tmp_path / "absent.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParameterError):
        load_config(str(bad))
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    with pytest.raises(ParameterError):
        load_config(str(arr))


def test_build_initial_curve_dispatch():
    circle = build_initial_curve(config_from_dict({"shape": "circle", "radius": 2.0, "n": 32}))
    assert circle.shape == (32, 2)
    assert np.max(np.abs(np.hypot(circle[:, 0], circle[:, 1]) - 2.0)) < 1e-12
    ellipse = build_initial_curve(config_from_dict({"shape": "ellipse", "a": 2.0, "b": 1.0, "n": 32}))
    assert np.max(np.abs((ellipse[:, 0] / 2.0) ** 2 + ellipse[:, 1] ** 2 - 1.0)) < 1e-12
    wavy = build_initial_curve(config_from_dict(
        {"shape": "perturbed_circle", "amplitudes": [0.05], "modes": [3], "seed": 4, "n": 32}))
    assert wavy.shape == (32, 2)


def test_circle_run_completes_and_reports(tmp_path):
    cfg = circle_config(tmp_path)
    result = run_experiment(cfg)
    assert result.exit_code == 0
    assert result.summary["status"] == "completed"
    assert result.summary["tbar"] == -50.0  # circle saturates the search bracket
    assert result.summary["snapshots"] == len(result.rows) == 6
    lines = (tmp_path / "run.csv").read_text().splitlines()
    assert lines[0] == EXPECTED_HEADER
    assert len(lines) == 7
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["exit_code"] == 0
    assert list(summary["checks"]) == list(checks_for_mode("normalized"))
    for entry in summary["checks"].values():
        assert entry["status"] == "pass"
        assert "tolerance" in entry
    assert summary["config"]["n"] == 64
    # snapshot rows expose every column by header name
    assert set(result.rows[0]) == set(EXPECTED_HEADER.split(","))
    times = [row["t"] for row in result.rows]
    assert times == pytest.approx([0.0, 0.1, 0.2, 0.3, 0.4, 0.5], abs=1e-12)


def test_run_is_byte_deterministic(tmp_path):
    cfg = circle_config(tmp_path, t_end=0.3)
    run_experiment(cfg)
    first_csv = (tmp_path / "run.csv").read_bytes()
    first_summary = (tmp_path / "summary.json").read_bytes()
    run_experiment(cfg)
    assert (tmp_path / "run.csv").read_bytes() == first_csv
    assert (tmp_path / "summary.json").read_bytes() == first_summary


def test_nonconvex_initial_curve_aborts_cleanly(tmp_path):
    cfg = circle_config(
        tmp_path, shape="perturbed_circle", amplitudes=[0.5], modes=[7], seed=0)
    result = run_experiment(cfg)
    assert result.exit_code == 3
    assert result.summary["status"] == "aborted"
    assert result.summary["failure"]["time"] == 0.0
    assert result.summary["tbar"] is None
    for entry in result.summary["checks"].values():
        assert entry["status"] == "fail"
        assert entry["detail"] == "no snapshots collected"
    # the CSV still exists, holding just the header
    assert (tmp_path / "run.csv").read_text() == EXPECTED_HEADER + "\n"
    # and the summary is valid JSON with the failure recorded
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["failure"]["error"] == "ConvexityLossError"


def test_unnormalized_run_reports_raw_length(tmp_path):
    cfg = circle_config(tmp_path, mode="unnormalized")
    result = run_experiment(cfg)
    assert result.exit_code == 0
    lengths = np.array([row["length"] for row in result.rows])
    times = np.array([row["t"] for row in result.rows])
    expected = lengths[0] * np.exp(times)
    assert np.max(np.abs(lengths / expected - 1.0)) < 1e-2
    assert result.summary["checks"]["length_law"]["status"] == "pass"


def test_both_mode_adds_cross_check(tmp_path):
    cfg = circle_config(tmp_path, mode="both", t_end=0.3)
    result = run_experiment(cfg)
    assert result.exit_code == 0
    cross = result.summary["checks"]["cross_check"]
    assert cross["status"] == "pass"
    assert cross["worst"] < 1e-10  # circles make both formulations identical


def test_svg_snapshots_are_written(tmp_path):
    cfg = circle_config(tmp_path, t_end=0.2, svg_dir=str(tmp_path / "frames"))
    run_experiment(cfg)
    frames = sorted((tmp_path / "frames").glob("*.svg"))
    assert [f.name for f in frames] == [
        "snapshot_0000.svg", "snapshot_0001.svg", "snapshot_0002.svg"]
    body = frames[0].read_text()
    assert 'viewBox="-2 -2 4 4"' in body
    assert 'transform="scale(1,-1)"' in body
    assert "stroke-dasharray" in body  # reference unit circle overlay


def test_write_svg_directly(tmp_path):
    path = tmp_path / "nested" / "curve.svg"
    write_svg(str(path), np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]), 0.25)
    body = path.read_text()
    assert body.startswith("<svg ")
    assert "t = 0.25" in body


def test_serialize_json_contract():
    assert serialize_json(0.1) == "0.10000000000000001"
    assert serialize_json(float("nan")) == "null"
    assert serialize_json(float("inf")) == "null"
    assert serialize_json(True) == "true"
    assert serialize_json((1, 2)) == "[\n  1,\n  2\n]"
    assert serialize_json({}) == "{}"
    assert serialize_json(np.float64(0.5)) == "0.5"
    assert serialize_json(np.int64(3)) == "3"
    blob = serialize_json({"b": 1, "a": [None, 2.0]})
    assert json.loads(blob) == {"b": 1, "a": [None, 2.0]}
    with pytest.raises(TypeError):
        serialize_json(object())


def test_cli_run_happy_path(tmp_path, capsys):
    code = cli.main([
        "run", "--shape", "circle", "--n", "64", "--dt", "1e-3",
        "--t-end", "0.3", "--out", str(tmp_path / "run.csv"),
        "--summary-out", str(tmp_path / "summary.json"),
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "tbar = " in out
    assert "min_Z: pass" in out
    assert "wrote" in out


def test_cli_accepts_config_file(tmp_path, capsys):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps({
        "shape": "circle", "n": 64, "dt": 1e-3, "t_end": 0.2,
        "out": str(tmp_path / "run.csv"),
    }))
    assert cli.main(["run", str(cfg_path), "--snapshot-interval", "0.1"]) == 0
    assert (tmp_path / "run.csv").exists()
    assert (tmp_path / "run_summary.json").exists()  # derived default path
    capsys.readouterr()


def test_cli_usage_errors_exit_2(tmp_path, capsys):
    assert cli.main(["run", "--dt", "-1", "--out", str(tmp_path / "a.csv")]) == 2
    assert cli.main(["run", "--checks", "bogus", "--out", str(tmp_path / "b.csv")]) == 2
    assert cli.main(["verify-profile", "--x-max", "4.0"]) == 2
    assert cli.main(["verify-profile", "--x-step", "0"]) == 2
    err = capsys.readouterr().err
    assert "error:" in err


def test_cli_nonconvex_run_exits_3(tmp_path, capsys):
    code = cli.main([
        "run", "--shape", "perturbed_circle", "--amplitudes", "0.5",
        "--modes", "7", "--n", "64", "--dt", "1e-3", "--t-end", "0.2",
        "--out", str(tmp_path / "run.csv"),
    ])
    assert code == 3
    assert "aborted" in capsys.readouterr().err


def test_cli_tbar_subcommand(capsys):
    assert cli.main(["tbar", "--shape", "circle", "--n", "64"]) == 0
    printed = capsys.readouterr().out.strip()
    assert float(printed) == -50.0
    assert cli.main(["tbar", "--shape", "ellipse", "--a", "2", "--b", "1", "--n", "256"]) == 0
    printed = capsys.readouterr().out.strip()
    # offset of the resampled n=256 ellipse mesh; the continuum value is ~0.72377
    assert float(printed) == pytest.approx(0.72305658333757061, rel=1e-10)


def test_cli_rejects_unknown_subcommand(capsys):
    assert cli.main(["polish"]) != 0
    capsys.readouterr()
