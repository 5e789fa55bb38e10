from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from qctl.config import ConfigError, ExperimentConfig
from qctl.dynamics import ControlSchedule

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"

# Bumped whenever the columns of a CSV kind change.
CSV_SCHEMAS: dict[str, int] = {
    "basis": 1,
    "penalty": 1,
    "schedule": 1,
    "unitaries": 1,
    "bloch": 1,
    "step_costs": 1,
    "iterations": 1,
    "bound_checks": 1,
}


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"cannot serialise {type(value).__name__} to JSON")


def dumps(payload: Any) -> str:
    """Stable JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=2, default=_jsonable) + "\n"


def config_hash(config: ExperimentConfig) -> str:
    """sha256 of the validated mapping, overrides included."""
    return hashlib.sha256(dumps(config.raw).encode("utf-8")).hexdigest()


def read_schedule(path: Path, h_max: float, field_name: str) -> ControlSchedule:
    """Load a schedule CSV written by `OutputWriter.csv(..., 'schedule')`."""
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
        return ControlSchedule.from_frame(frame, h_max)
    except (OSError, ValueError, pd.errors.ParserError) as exc:
        raise ConfigError(f"cannot use schedule {path}: {exc}", field_name) from exc


class OutputWriter:
    """Writes run artifacts under one directory and remembers what it wrote."""

    def __init__(self, directory: Path) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.outputs: list[str] = []
        self.schemas: dict[str, int] = {}

    def _target(self, name: str) -> Path:
        path = self.directory / name
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def csv(self, name: str, frame: pd.DataFrame, kind: str) -> Path:
        if kind not in CSV_SCHEMAS:
            raise ValueError(f"unknown CSV kind {kind!r}")
        path = self._target(name)
        frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
        self.outputs.append(name)
        self.schemas[kind] = CSV_SCHEMAS[kind]
        logger.debug("wrote %s (%d rows)", path, len(frame))
        return path

    def json(self, name: str, payload: Any) -> Path:
        path = self._target(name)
        path.write_text(dumps(payload), encoding="utf-8")
        self.outputs.append(name)
        logger.debug("wrote %s", path)
        return path

    def text(self, name: str, content: str) -> Path:
        path = self._target(name)
        path.write_text(content, encoding="utf-8")
        self.outputs.append(name)
        return path


@dataclass(frozen=True)
class RunManifest:
    """
    Provenance of one run.

    Re-running `config_hash`'s config with `seed` reproduces every listed
    output byte for byte; only the timestamps differ.
    """

    experiment: str
    config_hash: str
    version: str
    seed: int | None
    started: str
    finished: str
    exit_code: int
    outputs: tuple[str, ...]
    csv_schemas: dict[str, int] = field(default_factory=dict)
    source: str | None = None

    @classmethod
    def build(
        cls,
        config: ExperimentConfig,
        writer: OutputWriter,
        started: datetime,
        exit_code: int,
        version: str,
    ) -> RunManifest:
        return cls(
            experiment=config.experiment,
            config_hash=config_hash(config),
            version=version,
            seed=config.seed,
            started=started.isoformat(),
            finished=utc_now().isoformat(),
            exit_code=exit_code,
            outputs=tuple(writer.outputs),
            csv_schemas=dict(sorted(writer.schemas.items())),
            source=None if config.source is None else str(config.source),
        )

    def to_dict(self) -> dict[str, Any]:
        payload = asdict(self)
        payload["outputs"] = list(self.outputs)
        return payload

    def write(self, directory: Path) -> Path:
        path = Path(directory) / MANIFEST_NAME
        path.write_text(dumps(self.to_dict()), encoding="utf-8")
        return path

    @classmethod
    def read(cls, path: Path) -> RunManifest:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        payload["outputs"] = tuple(payload["outputs"])
        return cls(**payload)


def utc_now() -> datetime:
    return datetime.now(timezone.utc)
