from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import pytest

from qctl.config import ConfigError, ConfigLoader
from qctl.experiments import (
    EXIT_INFEASIBLE,
    EXIT_OK,
    OutputWriter,
    RunManifest,
    config_hash,
    hadamard,
    read_schedule,
    run,
    x_orbit_lower_bound,
)

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def _simulate_mapping(**noise: Any) -> dict[str, Any]:
    return {
        "experiment": "simulate",
        "seed": 11,
        "n": 1,
        "hamiltonians": {
            "clean": [{"x": 1.0}, {"y": 1.0}],
            "noisy": [{"x": 1.0}, {"x": 1.0}],
        },
        "noise": {"lambda_e": 1.0, "lambda_c": 10.0, "scenarios": 4, **noise},
        "grid": {"dt": 0.0625, "horizon": 2.0},
        "target": {"gate": "pauli_x", "eta": 0.05, "phase_invariant": True},
        "simulate": {"constant": [1.0, 0.0]},
    }


def _optimize_mapping() -> dict[str, Any]:
    return {
        "experiment": "optimize",
        "seed": 3,
        "n": 1,
        "hamiltonians": {
            "clean": [{"x": 1.0}, {"y": 1.0}],
            "noisy": [{"x": 1.0}, {"x": 1.0}],
        },
        "noise": {"lambda_e": 0.5, "lambda_c": 10.0, "scenarios": 4},
        "grid": {"dt": 0.1, "horizon": 2.0},
        "target": {"gate": "pauli_x", "eta": 0.1, "phase_invariant": True},
        "optimizer": {"beta": 0.5, "max_iters": 2, "restarts": 0, "warm_start_iters": 100},
    }


def _read_json(path: Path) -> Any:
    return json.loads(path.read_text(encoding="utf-8"))


def _files(directory: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(directory)): p.read_bytes()
        for p in sorted(directory.rglob("*"))
        if p.is_file() and p.name != "manifest.json"
    }


def test_basis_run_writes_fifteen_elements(tmp_path: Path) -> None:
    config = ConfigLoader.load(CONFIG_DIR / "basis.yaml", out=tmp_path)

    result = run(config)

    assert result.exit_code == EXIT_OK
    payload = _read_json(tmp_path / "basis.json")
    assert payload["size"] == 15
    assert payload["weight_counts"] == {"1": 6, "2": 9}
    assert [e["label"] for e in payload["elements"]][:3] == ["1x", "1y", "1z"]
    frame = pd.read_csv(tmp_path / "basis.csv")
    assert list(frame.columns) == ["index", "label", "weight"]
    assert len(frame) == 15


def test_manifest_records_provenance(tmp_path: Path) -> None:
    config = ConfigLoader.load(CONFIG_DIR / "basis.yaml", out=tmp_path)

    result = run(config)
    manifest = RunManifest.read(result.manifest)

    assert manifest.experiment == "basis"
    assert manifest.config_hash == config_hash(config)
    assert manifest.outputs == ("basis.csv", "basis.json")
    assert manifest.csv_schemas == {"basis": 1}
    assert manifest.exit_code == EXIT_OK
    assert manifest.version == "0.1.0"
    assert manifest.source == str(CONFIG_DIR / "basis.yaml")


def test_config_hash_tracks_overrides() -> None:
    first = ConfigLoader.load(CONFIG_DIR / "simulate.yaml")
    second = ConfigLoader.load(CONFIG_DIR / "simulate.yaml", seed=12)

    assert config_hash(first) == config_hash(ConfigLoader.load(CONFIG_DIR / "simulate.yaml"))
    assert config_hash(first) != config_hash(second)


def test_metrics_run(tmp_path: Path) -> None:
    config = ConfigLoader.load(CONFIG_DIR / "metrics.yaml", out=tmp_path)

    run(config)

    payload = _read_json(tmp_path / "metrics.json")
    assert payload["metric"] == "single_qubit_zz"
    assert payload["clean"][0]["cost"] == pytest.approx(1.0 + 4.0 * 0.25)
    intended, _, mixed = payload["noisy"]
    assert intended["closed_form"] == pytest.approx(intended["oracle"])
    assert mixed["discrepancy"] == pytest.approx(abs(mixed["closed_form"] - mixed["oracle"]))
    assert len(pd.read_csv(tmp_path / "penalty.csv")) == 3


def test_metrics_run_rejects_wrong_coefficient_count(tmp_path: Path) -> None:
    config = ConfigLoader.from_mapping(
        {
            "experiment": "metrics",
            "metrics": {"coefficients": [[1.0, 2.0]]},
            "output": {"directory": str(tmp_path)},
        }
    )

    with pytest.raises(ConfigError, match="3 coefficients"):
        run(config)


def test_simulate_writes_trajectories_and_summary(tmp_path: Path) -> None:
    config = ConfigLoader.from_mapping(_simulate_mapping(), out=tmp_path)

    result = run(config)

    assert result.exit_code == EXIT_OK
    summary = _read_json(tmp_path / "summary.json")
    assert summary["scenarios"] == 4
    assert summary["steps"] == 32
    assert len(summary["per_scenario"]) == 4
    assert 0.0 <= summary["success_fraction"] <= 1.0
    assert (tmp_path / "scenarios.json").exists()
    frame = pd.read_csv(tmp_path / "trajectories" / "scenario_0000.csv")
    assert len(frame) == 33
    assert frame["u_0_0_re"].iloc[0] == 1.0
    bloch = pd.read_csv(tmp_path / "bloch" / "scenario_0003.csv")
    assert list(bloch.columns) == ["t", "bx", "by", "bz"]


def test_simulate_is_reproducible(tmp_path: Path) -> None:
    run(ConfigLoader.from_mapping(_simulate_mapping(), out=tmp_path / "a"))
    run(ConfigLoader.from_mapping(_simulate_mapping(), out=tmp_path / "b"))

    assert _files(tmp_path / "a") == _files(tmp_path / "b")


def test_zero_onset_rate_matches_disabled_noise(tmp_path: Path) -> None:
    run(ConfigLoader.from_mapping(_simulate_mapping(lambda_e=0.0), out=tmp_path / "zero"))
    run(ConfigLoader.from_mapping(_simulate_mapping(enabled=False), out=tmp_path / "off"))

    zero, off = _files(tmp_path / "zero"), _files(tmp_path / "off")
    assert zero == off
    assert "scenarios.json" not in zero
    summary = _read_json(tmp_path / "zero" / "summary.json")
    assert summary["scenarios"] == 1
    assert summary["success_fraction"] == 1.0


def test_simulate_schedule_must_match_grid(tmp_path: Path) -> None:
    schedule = tmp_path / "schedule.csv"
    pd.DataFrame({"t": [0.0, 0.5], "h_1": [1.0, 1.0], "h_2": [0.0, 0.0]}).to_csv(
        schedule, index=False
    )
    mapping = _simulate_mapping()
    mapping["simulate"] = {"schedule": str(schedule)}

    with pytest.raises(ConfigError, match="does not match"):
        run(ConfigLoader.from_mapping(mapping, out=tmp_path / "run"))


def test_optimize_then_simulate_reproduces_success_fraction(tmp_path: Path) -> None:
    optimized = run(ConfigLoader.from_mapping(_optimize_mapping(), out=tmp_path / "opt"))
    report = _read_json(tmp_path / "opt" / "report.json")

    mapping = _optimize_mapping()
    mapping["experiment"] = "simulate"
    del mapping["optimizer"]
    mapping["simulate"] = {"schedule": str(tmp_path / "opt" / "schedule.csv")}
    run(ConfigLoader.from_mapping(mapping, out=tmp_path / "sim"))
    summary = _read_json(tmp_path / "sim" / "summary.json")

    assert optimized.exit_code in (EXIT_OK, EXIT_INFEASIBLE)
    assert summary["success_fraction"] == report["success_fraction"]
    simulated = [
        mapping["grid"]["horizon"] if row["hitting_time"] is None else row["hitting_time"]
        for row in summary["per_scenario"]
    ]
    np.testing.assert_allclose(simulated, report["hitting_times"], rtol=0.0, atol=1e-12)
    assert (tmp_path / "opt" / "scenarios.json").read_bytes() == (
        tmp_path / "sim" / "scenarios.json"
    ).read_bytes()


def test_optimize_report_fields(tmp_path: Path) -> None:
    run(ConfigLoader.from_mapping(_optimize_mapping(), out=tmp_path))

    report = _read_json(tmp_path / "report.json")
    iterations = pd.read_csv(tmp_path / "iterations.csv")

    assert report["risk"] == "expectation"
    assert report["geodesic_distance"] == pytest.approx(np.pi / 2)
    assert report["geodesic_time_bound"] == pytest.approx(np.pi / 2)
    assert len(report["hitting_times"]) == 4
    assert set(iterations["start"]) <= {"geodesic", "nominal", "zero"}
    schedule = read_schedule(tmp_path / "schedule.csv", 1.0, "schedule")
    assert schedule.steps == 20


def test_bounds_run_on_random_paths(tmp_path: Path) -> None:
    text = "\n".join(
        [
            "experiment: bounds",
            "seed: 5",
            "n: 2",
            "metric: {kind: exponential, params: {x: 2.0}}",
            "bounds: {cutoff: 10.0, steps: 16, paths: 3}",
        ]
    )
    config = ConfigLoader.loads(text, out=tmp_path)

    result = run(config)

    assert result.exit_code == EXIT_OK
    frame = pd.read_csv(tmp_path / "bound_checks.csv")
    assert len(frame) == 3 * 5
    assert set(frame["path"]) == {0, 1, 2}
    payload = _read_json(tmp_path / "bounds.json")
    assert payload["violations"] == 0
    assert payload["paths"] == 3


def test_bounds_run_on_schedule_file(tmp_path: Path) -> None:
    schedule = tmp_path / "schedule.csv"
    t = np.arange(8) * 0.05
    pd.DataFrame({"t": t, "h_1": np.full(8, 0.6), "h_2": np.full(8, 0.8)}).to_csv(
        schedule, index=False
    )
    config = ConfigLoader.from_mapping(
        {
            "experiment": "bounds",
            "n": 1,
            "metric": {"kind": "single_qubit_zz", "params": {"p": 4.0}},
            "hamiltonians": {"clean": [{"x": 1.0}, {"y": 1.0}]},
            "grid": {"dt": 0.05, "horizon": 0.4},
            "bounds": {"schedule": str(schedule), "steps": 4},
        },
        out=tmp_path / "run",
    )

    assert not config.stochastic
    run(config)

    payload = _read_json(tmp_path / "run" / "bounds.json")
    assert payload["paths"] == 1
    assert payload["reports"][0]["steps"] == 4


def test_writer_rejects_unknown_csv_kind(tmp_path: Path) -> None:
    writer = OutputWriter(tmp_path)

    with pytest.raises(ValueError, match="unknown CSV kind"):
        writer.csv("x.csv", pd.DataFrame({"a": [1]}), "mystery")


def test_x_orbit_bound_is_positive_for_hadamard() -> None:
    bound = x_orbit_lower_bound(hadamard())

    # e^{i phi} e^{-i theta sigma_x} has equal diagonal entries; the Hadamard does not.
    assert 0.5 < bound < 1.0


@pytest.mark.slow
def test_figure2_run(tmp_path: Path) -> None:
    config = ConfigLoader.load(CONFIG_DIR / "figure2.yaml", out=tmp_path)

    result = run(config)

    assert result.exit_code == EXIT_OK
    summary = _read_json(tmp_path / "summary.json")
    assert summary["noise_free"]["final_distance"] <= 0.05
    assert summary["all_error"]["respects_bound"]
    assert summary["all_error"]["hitting_time"] is None
    assert summary["replayed_steps"] == summary["report"]["step_count"]
    for name in ("noise_free", "noisy", "all_error"):
        bloch = pd.read_csv(tmp_path / f"bloch_{name}.csv")
        assert len(bloch) == summary["replayed_steps"] + 1
        start = bloch[["bx", "by", "bz"]].iloc[0]
        np.testing.assert_allclose(start, [0.0, 0.0, 1.0], atol=1e-12)


@pytest.mark.slow
def test_figure2_is_reproducible_for_a_fixed_seed(tmp_path: Path) -> None:
    for name in ("first", "second"):
        config = ConfigLoader.load(CONFIG_DIR / "figure2.yaml", out=tmp_path / name)
        assert run(config).exit_code == EXIT_OK

    outputs = (
        "schedule.csv",
        "bloch_noise_free.csv",
        "bloch_noisy.csv",
        "bloch_all_error.csv",
        "summary.json",
    )
    for filename in outputs:
        first = (tmp_path / "first" / filename).read_bytes()
        assert first == (tmp_path / "second" / filename).read_bytes(), filename


@pytest.mark.slow
def test_robust_example_meets_its_chance_constraint(tmp_path: Path) -> None:
    config = ConfigLoader.load(CONFIG_DIR / "robust.yaml", out=tmp_path)

    result = run(config)

    assert result.exit_code == EXIT_OK
    report = _read_json(tmp_path / "report.json")
    assert report["success_fraction"] >= 1.0 - report["beta"]
    assert report["success_fraction"] >= 0.8
    iterations = pd.read_csv(tmp_path / "iterations.csv")
    for _, log in iterations[iterations["accepted"]].groupby("start"):
        assert np.all(np.diff(log["objective"].to_numpy()) <= 1e-12)
