from __future__ import annotations

import json
import logging
from typing import Iterator, Sequence

import numpy as np

from .process import (
    NoiseParams,
    NoiseRealization,
    _sample_channel,
    satisfies_error_measure,
)

logger = logging.getLogger(__name__)

_SEED_LIMIT = 2**64


def scenario_rng(seed: int, index: int, channel: int) -> np.random.Generator:
    """Independent stream keyed by (seed, scenario index, channel)."""
    return np.random.default_rng([seed, index, channel])


class ScenarioSet:
    """
    A fixed list of noise realizations defining one SAA problem.

    Realization l, channel j is drawn from its own stream keyed by
    (seed, l, j), so any subset can be regenerated independently and
    evaluation order never changes the numbers.
    """

    def __init__(
        self,
        seed: int,
        params: NoiseParams,
        horizon: float,
        realizations: Sequence[NoiseRealization],
    ) -> None:
        if not realizations:
            raise ValueError("a scenario set needs at least one realization")
        self.seed = int(seed)
        self.params = params
        self.horizon = float(horizon)
        self.realizations: tuple[NoiseRealization, ...] = tuple(realizations)

    def __len__(self) -> int:
        return len(self.realizations)

    def __iter__(self) -> Iterator[NoiseRealization]:
        return iter(self.realizations)

    def __getitem__(self, index: int) -> NoiseRealization:
        return self.realizations[index]

    @property
    def channels(self) -> int:
        return self.realizations[0].channels

    def reordered(self, order: Sequence[int]) -> ScenarioSet:
        return ScenarioSet(
            self.seed, self.params, self.horizon, [self.realizations[i] for i in order]
        )

    def filter_by_error_measure(
        self, threshold: float, T: float | None = None, require: str = "all"
    ) -> ScenarioSet:
        """
        Keep realizations whose error time on [0, T] reaches `threshold`.

        Raises ValueError when no realization qualifies, since a scenario set
        cannot be empty.
        """
        window = self.horizon if T is None else T
        kept = [
            r
            for r in self.realizations
            if satisfies_error_measure(r, window, threshold, require)
        ]
        if not kept:
            raise ValueError(
                f"no realization has error time >= {threshold} on [0, {window}] "
                f"(require={require!r})"
            )
        logger.info(
            "error-measure filter kept %d of %d scenarios", len(kept), len(self)
        )
        return ScenarioSet(self.seed, self.params, self.horizon, kept)

    def to_json(self) -> str:
        payload = {
            "seed": self.seed,
            "lambda_e": self.params.lambda_e,
            "lambda_c": self.params.lambda_c,
            "horizon": self.horizon,
            "realizations": [r.to_dict() for r in self.realizations],
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> ScenarioSet:
        payload = json.loads(text)
        params = NoiseParams(payload["lambda_e"], payload["lambda_c"])
        realizations = [NoiseRealization.from_dict(r) for r in payload["realizations"]]
        return cls(payload["seed"], params, payload["horizon"], realizations)


def build_scenarios(
    params: NoiseParams, horizon: float, channels: int, L: int, seed: int
) -> ScenarioSet:
    """
    Draw L independent realizations with counter-based seeding.

    Usage:
        scenarios = build_scenarios(NoiseParams(1.0, 10.0), 4.0, 2, L=512, seed=7)
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if not 0 <= seed < _SEED_LIMIT:
        raise ValueError("seed must be an unsigned 64-bit integer")
    if not params.noise_free and not params.errors_clear_slower():
        logger.warning(
            "lambda_c=%g is not below lambda_e=%g; errors clear at least as fast as they occur",
            params.lambda_c,
            params.lambda_e,
        )

    realizations = [
        NoiseRealization(
            [
                _sample_channel(params, horizon, scenario_rng(seed, index, channel))
                for channel in range(channels)
            ],
            horizon,
        )
        for index in range(L)
    ]
    return ScenarioSet(seed, params, horizon, realizations)
