from __future__ import annotations

import json
from pathlib import Path

import pytest

from qctl.cli import main
from qctl.experiments import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def _write(path: Path, lines: list[str]) -> Path:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_basis_command(tmp_path: Path) -> None:
    code = main(["basis", "--config", str(CONFIG_DIR / "basis.yaml"), "--out", str(tmp_path)])

    assert code == EXIT_OK
    manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["exit_code"] == EXIT_OK
    assert manifest["outputs"] == ["basis.csv", "basis.json"]


def test_seed_flag_overrides_config(tmp_path: Path) -> None:
    args = ["simulate", "--config", str(CONFIG_DIR / "simulate.yaml")]

    code = main(args + ["--seed", "21", "--workers", "2", "--out", str(tmp_path)])

    assert code == EXIT_OK
    manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["seed"] == 21


def test_invalid_config_exits_with_config_code(
    tmp_path: Path, caplog: pytest.LogCaptureFixture
) -> None:
    config = _write(
        tmp_path / "bad.yaml",
        ["experiment: basis", "n: 0"],
    )

    code = main(["basis", "--config", str(config), "--out", str(tmp_path / "out")])

    assert code == EXIT_CONFIG
    assert "line 2, n" in caplog.text


def test_missing_config_file(tmp_path: Path) -> None:
    code = main(["basis", "--config", str(tmp_path / "nope.yaml")])

    assert code == EXIT_CONFIG


def test_subcommand_must_match_config(tmp_path: Path) -> None:
    code = main(["optimize", "--config", str(CONFIG_DIR / "basis.yaml"), "--out", str(tmp_path)])

    assert code == EXIT_CONFIG
    assert not (tmp_path / "manifest.json").exists()


def test_negative_seed_is_an_argument_error() -> None:
    with pytest.raises(SystemExit) as info:
        main(["basis", "--config", str(CONFIG_DIR / "basis.yaml"), "--seed", "-1"])

    assert info.value.code == 2


def test_unreachable_target_exits_infeasible(tmp_path: Path) -> None:
    config = _write(
        tmp_path / "unreachable.yaml",
        [
            "experiment: optimize",
            "seed: 1",
            "hamiltonians:",
            "  clean:",
            "    - {z: 1.0}",
            "noise: {enabled: false}",
            "grid: {dt: 0.1, horizon: 0.5}",
            "target: {gate: pauli_x, eta: 0.05, phase_invariant: true}",
            "optimizer: {max_iters: 1, restarts: 0, warm_start_iters: 20}",
        ],
    )

    code = main(["optimize", "--config", str(config), "--out", str(tmp_path / "out")])

    assert code == EXIT_INFEASIBLE
    report = json.loads((tmp_path / "out" / "report.json").read_text(encoding="utf-8"))
    assert report["converged"] is False
    assert report["success_fraction"] == 0.0


def test_library_value_error_exits_with_config_code(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch, caplog: pytest.LogCaptureFixture
) -> None:
    def _reject(config: object) -> None:
        raise ValueError("no realization has error time >= 3.0 on [0, 2.0]")

    monkeypatch.setattr("qctl.cli.run", _reject)

    code = main(["basis", "--config", str(CONFIG_DIR / "basis.yaml"), "--out", str(tmp_path)])

    assert code == EXIT_CONFIG
    assert "no realization has error time" in caplog.text
