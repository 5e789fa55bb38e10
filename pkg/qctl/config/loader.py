from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np
import yaml

from qctl.control import OptimizerConfig, RiskMeasure
from qctl.linalg import is_unitary
from qctl.linalg.matrices import MAX_QUBITS
from qctl.metrics import METRIC_KINDS
from qctl.pauli import PauliBasis, operator_from_labels

from .schema import (
    EXPERIMENT_KINDS,
    TARGET_GATES,
    BoundsSection,
    ConfigError,
    ExperimentConfig,
    GridSection,
    HamiltonianSection,
    MetricsSection,
    MetricSection,
    NoiseSection,
    OptimizerSection,
    OutputSection,
    SimulateSection,
    TargetSection,
)

logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = (
    "experiment",
    "seed",
    "workers",
    "n",
    "hamiltonians",
    "noise",
    "grid",
    "target",
    "metric",
    "optimizer",
    "bounds",
    "simulate",
    "metrics",
    "output",
)
SEED_LIMIT = 2**64


class ConfigLoader:
    """Read and validate YAML experiment descriptions."""

    @staticmethod
    def load(
        path: str | Path,
        seed: Optional[int] = None,
        workers: Optional[int] = None,
        out: Optional[str | Path] = None,
    ) -> ExperimentConfig:
        """
        Load an experiment config file.

        Usage:
            config = ConfigLoader.load("configs/figure2.yaml", seed=7)

        `seed`, `workers` and `out` override the file. Relative paths inside
        the file resolve against the file's directory. Every validation
        failure raises ConfigError naming the field and, where it can be
        found, the line.
        """
        source = Path(path)
        try:
            text = source.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {source}") from exc
        return ConfigLoader.loads(
            text, base_dir=source.parent, source=source, seed=seed, workers=workers, out=out
        )

    @staticmethod
    def loads(
        text: str,
        base_dir: str | Path = ".",
        source: Optional[Path] = None,
        seed: Optional[int] = None,
        workers: Optional[int] = None,
        out: Optional[str | Path] = None,
    ) -> ExperimentConfig:
        """Validate config text; see `load`."""
        data = ConfigLoader._parse_yaml(text)
        lines = ConfigLoader._line_index(text)
        try:
            return ConfigLoader.from_mapping(
                data, Path(base_dir), source, seed=seed, workers=workers, out=out
            )
        except ConfigError as exc:
            if exc.line is not None or not exc.field:
                raise
            raise ConfigError(
                exc.message, exc.field, ConfigLoader._nearest_line(lines, exc.field)
            ) from exc

    @staticmethod
    def from_mapping(
        data: Mapping[str, Any],
        base_dir: Path = Path("."),
        source: Optional[Path] = None,
        seed: Optional[int] = None,
        workers: Optional[int] = None,
        out: Optional[str | Path] = None,
    ) -> ExperimentConfig:
        """Validate an already parsed mapping."""
        if not isinstance(data, Mapping):
            raise ConfigError("config must be a mapping at the top level")
        raw = ConfigLoader._normalize_keys(dict(data))
        if seed is not None:
            raw["seed"] = seed
        if workers is not None:
            raw["workers"] = workers
        if out is not None:
            raw.setdefault("output", {})
            raw["output"] = {**raw["output"], "directory": str(out)}
        ConfigLoader._check_keys(raw, TOP_LEVEL_KEYS, "")

        experiment = str(raw.get("experiment", "")).strip().lower()
        if experiment not in EXPERIMENT_KINDS:
            raise ConfigError(f"must be one of {EXPERIMENT_KINDS}", "experiment")

        n = ConfigLoader._integer(raw.get("n", 1), "n", minimum=1)
        if n > MAX_QUBITS:
            raise ConfigError(f"must be at most {MAX_QUBITS}", "n")

        config = ExperimentConfig(
            experiment=experiment,
            seed=ConfigLoader._seed(raw.get("seed")),
            workers=ConfigLoader._integer(raw.get("workers", 1), "workers", minimum=1),
            hamiltonians=ConfigLoader._hamiltonians(raw.get("hamiltonians"), n),
            noise=ConfigLoader._noise(raw.get("noise", {})),
            grid=ConfigLoader._grid(raw.get("grid")),
            target=ConfigLoader._target(raw.get("target"), n),
            metric=ConfigLoader._metric(raw.get("metric", {})),
            optimizer=ConfigLoader._optimizer(raw.get("optimizer", {})),
            bounds=ConfigLoader._bounds(raw.get("bounds", {}), base_dir),
            simulate=ConfigLoader._simulate(raw.get("simulate", {}), base_dir),
            metrics=ConfigLoader._metrics(raw.get("metrics", {}), base_dir),
            output=ConfigLoader._output(raw.get("output", {}), base_dir),
            n=n,
            source=source,
            raw=raw,
        )
        ConfigLoader._check_requirements(config)
        return config

    @staticmethod
    def _parse_yaml(text: str) -> dict[str, Any]:
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = None if mark is None else mark.line + 1
            raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}", line=line) from exc
        if data is None:
            raise ConfigError("config file is empty")
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping at the top level", line=1)
        return data

    @staticmethod
    def _line_index(text: str) -> dict[str, int]:
        """Map dotted field paths to the 1-based line of their key."""
        try:
            root = yaml.compose(text, Loader=yaml.SafeLoader)
        except yaml.YAMLError:
            return {}
        lines: dict[str, int] = {}

        def _walk(node: yaml.Node, prefix: str) -> None:
            if isinstance(node, yaml.MappingNode):
                for key_node, value_node in node.value:
                    key = ConfigLoader._normalize_key(str(key_node.value))
                    path = f"{prefix}.{key}" if prefix else key
                    lines[path] = key_node.start_mark.line + 1
                    _walk(value_node, path)
            elif isinstance(node, yaml.SequenceNode):
                for i, item in enumerate(node.value):
                    path = f"{prefix}[{i}]"
                    lines[path] = item.start_mark.line + 1
                    _walk(item, path)

        if root is not None:
            _walk(root, "")
        return lines

    @staticmethod
    def _nearest_line(lines: dict[str, int], field: str) -> Optional[int]:
        path = field
        while path:
            if path in lines:
                return lines[path]
            cut = max(path.rfind("."), path.rfind("["))
            path = path[:cut] if cut > 0 else ""
        return None

    @staticmethod
    def _normalize_key(key: str) -> str:
        return key.strip().lower().replace("-", "_")

    @staticmethod
    def _normalize_keys(value: Any) -> Any:
        """Lowercase mapping keys and turn dashes into underscores, recursively."""
        if isinstance(value, dict):
            return {
                ConfigLoader._normalize_key(str(k)): ConfigLoader._normalize_keys(v)
                for k, v in value.items()
            }
        if isinstance(value, list):
            return [ConfigLoader._normalize_keys(v) for v in value]
        return value

    @staticmethod
    def _check_keys(section: Mapping[str, Any], allowed: tuple[str, ...], prefix: str) -> None:
        unknown = sorted(set(section) - set(allowed))
        if unknown:
            path = f"{prefix}.{unknown[0]}" if prefix else unknown[0]
            raise ConfigError(f"unknown field; expected one of {list(allowed)}", path)

    @staticmethod
    def _section(value: Any, path: str, allowed: tuple[str, ...]) -> dict[str, Any]:
        if value is None:
            return {}
        if not isinstance(value, Mapping):
            raise ConfigError("must be a mapping", path)
        ConfigLoader._check_keys(value, allowed, path)
        return dict(value)

    @staticmethod
    def _number(
        value: Any,
        path: str,
        positive: bool = False,
        nonnegative: bool = False,
    ) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError("must be a number", path)
        number = float(value)
        if not np.isfinite(number):
            raise ConfigError("must be finite", path)
        if positive and number <= 0:
            raise ConfigError("must be positive", path)
        if nonnegative and number < 0:
            raise ConfigError("must be non-negative", path)
        return number

    @staticmethod
    def _integer(value: Any, path: str, minimum: Optional[int] = None) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError("must be an integer", path)
        if minimum is not None and value < minimum:
            raise ConfigError(f"must be at least {minimum}", path)
        return int(value)

    @staticmethod
    def _boolean(value: Any, path: str) -> bool:
        if not isinstance(value, bool):
            raise ConfigError("must be true or false", path)
        return value

    @staticmethod
    def _seed(value: Any) -> Optional[int]:
        if value is None:
            return None
        seed = ConfigLoader._integer(value, "seed", minimum=0)
        if seed >= SEED_LIMIT:
            raise ConfigError("must fit in an unsigned 64-bit integer", "seed")
        return seed

    @staticmethod
    def _path(value: Any, path: str, base_dir: Path, must_exist: bool = True) -> Path:
        if not isinstance(value, str) or not value.strip():
            raise ConfigError("must be a file path", path)
        resolved = Path(value)
        if not resolved.is_absolute():
            resolved = base_dir / resolved
        if must_exist and not resolved.exists():
            raise ConfigError(f"file not found: {resolved}", path)
        return resolved

    @staticmethod
    def _matrix(value: Any, path: str) -> np.ndarray:
        """Rows of entries; an entry is a number, a complex string like '-1j' or [re, im]."""
        if not isinstance(value, list) or not value:
            raise ConfigError("must be a list of matrix rows", path)
        if not all(isinstance(r, list) for r in value):
            raise ConfigError("must be a list of matrix rows", path)

        def _entry(item: Any, where: str) -> complex:
            if isinstance(item, list) and len(item) == 2:
                return complex(
                    ConfigLoader._number(item[0], where), ConfigLoader._number(item[1], where)
                )
            if isinstance(item, str):
                try:
                    return complex(item.replace(" ", ""))
                except ValueError as exc:
                    raise ConfigError(f"cannot parse {item!r} as a complex number", where) from exc
            return complex(ConfigLoader._number(item, where))

        rows = [
            [_entry(item, f"{path}[{r}][{c}]") for c, item in enumerate(row)]
            for r, row in enumerate(value)
        ]
        if any(len(row) != len(rows) for row in rows):
            raise ConfigError("matrix must be square", path)
        return np.array(rows, dtype=np.complex128)

    @staticmethod
    def _operator(value: Any, path: str, basis: PauliBasis) -> np.ndarray:
        if isinstance(value, Mapping):
            try:
                terms = {str(k): ConfigLoader._number(v, f"{path}.{k}") for k, v in value.items()}
                return operator_from_labels(terms, basis)
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(str(exc), path) from exc
        matrix = ConfigLoader._matrix(value, path)
        if matrix.shape[0] != basis.dim:
            raise ConfigError(f"matrix must be {basis.dim} x {basis.dim}", path)
        return matrix

    @staticmethod
    def _hamiltonians(value: Any, n: int) -> Optional[HamiltonianSection]:
        if value is None:
            return None
        section = ConfigLoader._section(value, "hamiltonians", ("clean", "noisy"))
        clean = section.get("clean")
        if not isinstance(clean, list) or not clean:
            raise ConfigError("must be a non-empty list", "hamiltonians.clean")
        noisy = section.get("noisy", clean)
        if not isinstance(noisy, list) or len(noisy) != len(clean):
            raise ConfigError(
                f"must list one erroneous Hamiltonian per channel ({len(clean)})",
                "hamiltonians.noisy",
            )
        basis = PauliBasis(n)
        hs = HamiltonianSection(
            n=n,
            clean=tuple(
                ConfigLoader._operator(v, f"hamiltonians.clean[{i}]", basis)
                for i, v in enumerate(clean)
            ),
            noisy=tuple(
                ConfigLoader._operator(v, f"hamiltonians.noisy[{i}]", basis)
                for i, v in enumerate(noisy)
            ),
        )
        try:
            hs.build()
        except ValueError as exc:
            raise ConfigError(str(exc), "hamiltonians") from exc
        return hs

    @staticmethod
    def _noise(value: Any) -> NoiseSection:
        section = ConfigLoader._section(
            value, "noise", ("lambda_e", "lambda_c", "scenarios", "enabled")
        )
        return NoiseSection(
            lambda_e=ConfigLoader._number(
                section.get("lambda_e", 0.0), "noise.lambda_e", nonnegative=True
            ),
            lambda_c=ConfigLoader._number(
                section.get("lambda_c", 0.0), "noise.lambda_c", nonnegative=True
            ),
            scenarios=ConfigLoader._integer(
                section.get("scenarios", 1), "noise.scenarios", minimum=1
            ),
            enabled=ConfigLoader._boolean(section.get("enabled", True), "noise.enabled"),
        )

    @staticmethod
    def _grid(value: Any) -> Optional[GridSection]:
        if value is None:
            return None
        section = ConfigLoader._section(value, "grid", ("dt", "horizon", "h_max"))
        for key in ("dt", "horizon"):
            if key not in section:
                raise ConfigError("is required", f"grid.{key}")
        dt = ConfigLoader._number(section["dt"], "grid.dt", positive=True)
        horizon = ConfigLoader._number(section["horizon"], "grid.horizon", positive=True)
        ratio = horizon / dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ConfigError("must be an integer multiple of grid.dt", "grid.horizon")
        return GridSection(
            dt=dt,
            horizon=horizon,
            h_max=ConfigLoader._number(section.get("h_max", 1.0), "grid.h_max", positive=True),
        )

    @staticmethod
    def _target(value: Any, n: int) -> Optional[TargetSection]:
        if value is None:
            return None
        section = ConfigLoader._section(
            value, "target", ("gate", "eta", "phase_invariant", "matrix")
        )
        gate = str(section.get("gate", "identity")).strip().lower()
        if gate not in TARGET_GATES:
            raise ConfigError(f"must be one of {TARGET_GATES}", "target.gate")
        custom = None
        if gate == "custom":
            if "matrix" not in section:
                raise ConfigError("is required for a custom gate", "target.matrix")
            custom = ConfigLoader._matrix(section["matrix"], "target.matrix")
            if custom.shape[0] != 2**n or not is_unitary(custom):
                raise ConfigError(f"must be a {2**n} x {2**n} unitary", "target.matrix")
        eta = ConfigLoader._number(section.get("eta", 0.05), "target.eta", positive=True)
        if eta >= 2.0:
            raise ConfigError("must be below 2", "target.eta")
        return TargetSection(
            gate=gate,
            eta=eta,
            phase_invariant=ConfigLoader._boolean(
                section.get("phase_invariant", False), "target.phase_invariant"
            ),
            custom=custom,
        )

    @staticmethod
    def _metric(value: Any) -> MetricSection:
        section = ConfigLoader._section(value, "metric", ("kind", "params"))
        kind = str(section.get("kind", "killing")).strip().lower()
        if kind not in METRIC_KINDS:
            raise ConfigError(f"must be one of {sorted(METRIC_KINDS)}", "metric.kind")
        params_raw = section.get("params") or {}
        if not isinstance(params_raw, Mapping):
            raise ConfigError("must be a mapping", "metric.params")
        params = {
            str(k): ConfigLoader._number(v, f"metric.params.{k}") for k, v in params_raw.items()
        }
        metric = MetricSection(kind=kind, params=params)
        try:
            metric.family()
        except ValueError as exc:
            raise ConfigError(str(exc), "metric") from exc
        return metric

    @staticmethod
    def _optimizer(value: Any) -> OptimizerSection:
        settings_keys = tuple(OptimizerConfig.__dataclass_fields__)
        section = ConfigLoader._section(
            value, "optimizer", ("risk", "gamma", "beta", "penalty_mu") + settings_keys
        )
        risk_kind = str(section.pop("risk", "expectation")).strip().lower()
        gamma = section.pop("gamma", 1.0)
        if risk_kind == "expectation" and gamma != 1.0:
            logger.warning("optimizer.gamma=%s is ignored with risk: expectation", gamma)
        try:
            measure = (
                RiskMeasure.expectation()
                if risk_kind == "expectation"
                else RiskMeasure(risk_kind, ConfigLoader._number(gamma, "optimizer.gamma"))
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), "optimizer.risk") from exc

        beta = ConfigLoader._number(section.pop("beta", 0.0), "optimizer.beta", nonnegative=True)
        if beta > 1.0:
            raise ConfigError("must be in [0, 1]", "optimizer.beta")
        penalty_mu = ConfigLoader._number(
            section.pop("penalty_mu", 10.0), "optimizer.penalty_mu", nonnegative=True
        )
        try:
            settings = OptimizerConfig(**section)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), "optimizer") from exc
        return OptimizerSection(risk=measure, beta=beta, penalty_mu=penalty_mu, settings=settings)

    @staticmethod
    def _bounds(value: Any, base_dir: Path) -> BoundsSection:
        section = ConfigLoader._section(
            value, "bounds", ("cutoff", "steps", "paths", "channels", "path_steps", "schedule")
        )
        schedule = section.get("schedule")
        return BoundsSection(
            cutoff=ConfigLoader._number(section.get("cutoff", 2.0), "bounds.cutoff", positive=True),
            steps=ConfigLoader._integer(section.get("steps", 32), "bounds.steps", minimum=1),
            paths=ConfigLoader._integer(section.get("paths", 10), "bounds.paths", minimum=1),
            channels=ConfigLoader._integer(
                section.get("channels", 2), "bounds.channels", minimum=1
            ),
            path_steps=ConfigLoader._integer(
                section.get("path_steps", 8), "bounds.path_steps", minimum=1
            ),
            schedule=None
            if schedule is None
            else ConfigLoader._path(schedule, "bounds.schedule", base_dir),
        )

    @staticmethod
    def _simulate(value: Any, base_dir: Path) -> SimulateSection:
        section = ConfigLoader._section(
            value, "simulate", ("schedule", "constant", "initial_state")
        )
        schedule = section.get("schedule")
        constant = section.get("constant")
        if schedule is not None and constant is not None:
            raise ConfigError("give either schedule or constant, not both", "simulate")
        if constant is not None:
            if not isinstance(constant, list) or not constant:
                raise ConfigError("must be a list of control values", "simulate.constant")
            constant = tuple(
                ConfigLoader._number(v, f"simulate.constant[{i}]") for i, v in enumerate(constant)
            )
        state = str(section.get("initial_state", "0")).strip()
        if state not in ("0", "1"):
            raise ConfigError("must be '0' or '1'", "simulate.initial_state")
        return SimulateSection(
            schedule=None
            if schedule is None
            else ConfigLoader._path(schedule, "simulate.schedule", base_dir),
            constant=constant,
            initial_state=state,
        )

    @staticmethod
    def _metrics(value: Any, base_dir: Path) -> MetricsSection:
        section = ConfigLoader._section(value, "metrics", ("coefficients", "noisy", "schedule"))

        def _vector(item: Any, path: str) -> tuple[float, ...]:
            if not isinstance(item, list) or not item:
                raise ConfigError("must be a non-empty list of numbers", path)
            return tuple(ConfigLoader._number(v, f"{path}[{i}]") for i, v in enumerate(item))

        coefficients = tuple(
            _vector(v, f"metrics.coefficients[{i}]")
            for i, v in enumerate(section.get("coefficients") or [])
        )
        noisy = []
        for i, item in enumerate(section.get("noisy") or []):
            entry = ConfigLoader._section(item, f"metrics.noisy[{i}]", ("h", "alpha"))
            noisy.append(
                (
                    _vector(entry.get("h"), f"metrics.noisy[{i}].h"),
                    _vector(entry.get("alpha"), f"metrics.noisy[{i}].alpha"),
                )
            )
        schedule = section.get("schedule")
        return MetricsSection(
            coefficients=coefficients,
            noisy=tuple(noisy),
            schedule=None
            if schedule is None
            else ConfigLoader._path(schedule, "metrics.schedule", base_dir),
        )

    @staticmethod
    def _output(value: Any, base_dir: Path) -> OutputSection:
        section = ConfigLoader._section(value, "output", ("directory",))
        directory = Path(str(section.get("directory", "out")))
        if not directory.is_absolute():
            directory = base_dir / directory
        return OutputSection(directory=directory)

    @staticmethod
    def _check_requirements(config: ExperimentConfig) -> None:
        """Cross-section rules that depend on the experiment kind."""
        needs: dict[str, tuple[str, ...]] = {
            "basis": (),
            "metrics": (),
            "simulate": ("hamiltonians", "grid"),
            "optimize": ("hamiltonians", "grid", "target"),
            "bounds": (),
            "figure2": ("grid", "target"),
        }
        for name in needs[config.experiment]:
            if getattr(config, name) is None:
                raise ConfigError(f"is required for the {config.experiment} experiment", name)

        if config.stochastic and config.seed is None:
            raise ConfigError(
                f"is required for the stochastic {config.experiment} experiment", "seed"
            )

        checks: list[tuple[bool, str, str]] = [
            (
                config.experiment == "figure2" and config.n != 1,
                "figure2 is a single-qubit experiment",
                "n",
            ),
            (
                config.experiment == "simulate"
                and config.simulate.schedule is None
                and config.simulate.constant is None,
                "needs a schedule file or a constant control row",
                "simulate",
            ),
            (
                config.experiment == "bounds"
                and config.bounds.schedule is not None
                and (config.hamiltonians is None or config.grid is None),
                "a schedule file needs hamiltonians and grid sections",
                "bounds.schedule",
            ),
            (
                config.experiment == "metrics"
                and (bool(config.metrics.noisy) or config.metrics.schedule is not None)
                and config.hamiltonians is None,
                "noisy costs and path lengths need a hamiltonians section",
                "metrics",
            ),
            (
                config.experiment == "metrics"
                and config.metrics.schedule is not None
                and config.grid is None,
                "a schedule file needs a grid section for h_max",
                "metrics.schedule",
            ),
        ]
        for failed, message, field in checks:
            if failed:
                raise ConfigError(message, field)

        if config.experiment in ("metrics", "bounds"):
            try:
                config.metric.family().check_qubits(config.n)
            except ValueError as exc:
                raise ConfigError(str(exc), "metric.kind") from exc

        if (
            config.hamiltonians is not None
            and config.simulate.constant is not None
            and len(config.simulate.constant) != len(config.hamiltonians.clean)
        ):
            raise ConfigError(
                f"needs {len(config.hamiltonians.clean)} values, one per channel",
                "simulate.constant",
            )

