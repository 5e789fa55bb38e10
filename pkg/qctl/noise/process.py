from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoiseParams:
    """
    Rates of the bang-bang gate-error process.

    Attributes:
        lambda_e: Error-onset rate per unit time (alpha 1 -> 0).
        lambda_c: Error-clearing rate per unit time (alpha 0 -> 1).
                  A zero rate means the state never leaves, so lambda_c = 0
                  makes the error state absorbing.
    """

    lambda_e: float
    lambda_c: float

    def __post_init__(self) -> None:
        for name in ("lambda_e", "lambda_c"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and nonnegative")

    @property
    def noise_free(self) -> bool:
        return self.lambda_e == 0.0

    def errors_clear_slower(self) -> bool:
        """True for the asymmetric regime lambda_c < lambda_e."""
        return self.lambda_c < self.lambda_e


class NoiseRealization:
    """
    One sampled path of alpha_j(t) for every control channel.

    Each channel starts with alpha = 1 and flips at every listed jump time,
    so the values alternate 1 -> 0 -> 1 -> ... The path is right-continuous:
    at a jump instant alpha already has its post-jump value.
    """

    def __init__(self, channel_jumps: Sequence[Sequence[float]], horizon: float) -> None:
        if not np.isfinite(horizon) or horizon <= 0:
            raise ValueError("horizon must be positive and finite")
        jumps = []
        for j, times in enumerate(channel_jumps):
            arr = np.asarray(times, dtype=float).reshape(-1)
            if arr.size and (arr[0] < 0 or arr[-1] > horizon):
                raise ValueError(f"channel {j} has jump times outside [0, {horizon}]")
            if np.any(np.diff(arr) <= 0):
                raise ValueError(f"channel {j} jump times must be strictly increasing")
            arr.setflags(write=False)
            jumps.append(arr)
        self.channel_jumps: tuple[np.ndarray, ...] = tuple(jumps)
        self.horizon = float(horizon)

    @property
    def channels(self) -> int:
        return len(self.channel_jumps)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NoiseRealization):
            return NotImplemented
        return self.horizon == other.horizon and len(self.channel_jumps) == len(
            other.channel_jumps
        ) and all(
            np.array_equal(a, b) for a, b in zip(self.channel_jumps, other.channel_jumps)
        )

    def __repr__(self) -> str:
        counts = [len(j) for j in self.channel_jumps]
        return f"NoiseRealization(horizon={self.horizon}, jumps_per_channel={counts})"

    def _jumps(self, channel: int) -> np.ndarray:
        if not 0 <= channel < self.channels:
            raise ValueError(f"channel {channel} out of range [0, {self.channels})")
        return self.channel_jumps[channel]

    def alpha_at(self, channel: int, t: float) -> int:
        return alpha_at(self, channel, t)

    def alphas(self, times: np.ndarray) -> np.ndarray:
        """alpha values, shape (len(times), channels), without range checks."""
        times = np.asarray(times, dtype=float)
        out = np.empty((times.size, self.channels), dtype=float)
        for j, jumps in enumerate(self.channel_jumps):
            flips = np.searchsorted(jumps, times, side="right")
            out[:, j] = 1.0 - (flips % 2)
        return out

    def error_measure(self, channel: int, T: float) -> float:
        return error_measure(self, channel, T)

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready mapping: channel index (as string) -> jump-time list."""
        return {
            "horizon": self.horizon,
            "channels": {str(j): jumps.tolist() for j, jumps in enumerate(self.channel_jumps)},
        }

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> NoiseRealization:
        channels = payload["channels"]
        ordered = [channels[str(j)] for j in range(len(channels))]
        return cls(ordered, float(payload["horizon"]))

    @classmethod
    def noise_free(cls, channels: int, horizon: float) -> NoiseRealization:
        return cls([[] for _ in range(channels)], horizon)


def alpha_at(r: NoiseRealization, channel: int, t: float) -> int:
    """Value of alpha_j(t): parity of the number of jumps in [0, t]."""
    if not 0 <= t <= r.horizon:
        raise ValueError(f"time {t} outside [0, {r.horizon}]")
    flips = int(np.searchsorted(r._jumps(channel), t, side="right"))
    return 1 - flips % 2


def error_measure(r: NoiseRealization, channel: int, T: float) -> float:
    """Lebesgue measure of {t <= T : alpha_j(t) = 0}."""
    if T > r.horizon:
        raise ValueError(f"T={T} exceeds the realization horizon {r.horizon}")
    jumps = r._jumps(channel)
    starts = jumps[0::2]
    ends = np.append(jumps[1::2], np.inf)[: starts.size]
    overlap = np.minimum(ends, T) - starts
    return float(np.sum(np.clip(overlap, 0.0, None)))


def satisfies_error_measure(
    r: NoiseRealization, T: float, threshold: float, require: str = "all"
) -> bool:
    """
    Membership test for the constraint set meas({t : alpha_j(t) = 0}) >= threshold.

    Args:
        r: Realization to test.
        T: Time window [0, T].
        threshold: Minimum error time per channel.
        require: 'all' channels or 'any' channel must meet the threshold.
    """
    if require not in ("all", "any"):
        raise ValueError("require must be 'all' or 'any'")
    met = [error_measure(r, j, T) >= threshold for j in range(r.channels)]
    return all(met) if require == "all" else any(met)


def _sample_channel(
    params: NoiseParams, horizon: float, rng: np.random.Generator
) -> list[float]:
    jumps: list[float] = []
    t = 0.0
    alpha = 1
    while True:
        rate = params.lambda_e if alpha == 1 else params.lambda_c
        if rate == 0.0:
            break
        t += rng.exponential(1.0 / rate)
        if t > horizon:
            break
        jumps.append(t)
        alpha = 1 - alpha
    return jumps


def sample_realization(
    params: NoiseParams, horizon: float, channels: int, rng: np.random.Generator
) -> NoiseRealization:
    """
    Sample alpha_j for `channels` independent channels on [0, horizon].

    Holding times are Exp(lambda_e) while alpha = 1 and Exp(lambda_c) while
    alpha = 0; channels are drawn in order from the same generator.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if channels < 0:
        raise ValueError("channels cannot be negative")
    return NoiseRealization(
        [_sample_channel(params, horizon, rng) for _ in range(channels)], horizon
    )
