from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np
import numpy.typing as npt
import pandas as pd

from qctl.linalg import HermitianMatrix, check_hermitian, qubit_count
from qctl.noise import NoiseRealization
from qctl.pauli import PauliBasis, operator_from_labels

TRACE_TOL = 1e-10
BOUND_RTOL = 1e-12


class HamiltonianSet:
    """
    Control channels j = 1..m, each an intended/erroneous pair (H_hat_j, H_breve_j).

    While alpha_j = 1 channel j applies H_hat_j; during an error it applies
    H_breve_j instead. All members must be traceless Hermitian so the noisy
    dynamics stay on SU(2^n).
    """

    def __init__(
        self,
        clean: Sequence[npt.ArrayLike],
        noisy: Sequence[npt.ArrayLike] | None = None,
    ) -> None:
        if not clean:
            raise ValueError("at least one control channel is required")
        noisy = clean if noisy is None else noisy
        if len(noisy) != len(clean):
            raise ValueError(
                f"got {len(clean)} intended and {len(noisy)} erroneous Hamiltonians"
            )

        members = [check_hermitian(h, f"intended Hamiltonian {j}") for j, h in enumerate(clean)]
        members += [check_hermitian(h, f"erroneous Hamiltonian {j}") for j, h in enumerate(noisy)]
        self.n = qubit_count(members[0])
        for j, member in enumerate(members):
            if member.shape != members[0].shape:
                raise ValueError("all Hamiltonians must share one dimension")
            if abs(np.trace(member)) > TRACE_TOL:
                raise ValueError(f"Hamiltonian {j % len(clean)} must be traceless")

        m = len(clean)
        self.clean = np.stack(members[:m])
        self.noisy = np.stack(members[m:])
        self.clean.setflags(write=False)
        self.noisy.setflags(write=False)

    @property
    def channels(self) -> int:
        return self.clean.shape[0]

    @property
    def dim(self) -> int:
        return self.clean.shape[1]

    @classmethod
    def from_labels(
        cls,
        n: int,
        clean: Sequence[dict[str, float]],
        noisy: Sequence[dict[str, float]] | None = None,
    ) -> HamiltonianSet:
        """
        Build channels from Pauli-label weights.

        Usage:
            HamiltonianSet.from_labels(1, [{"x": 1}, {"y": 1}], [{"x": 1}, {"x": 1}])
        """
        basis = PauliBasis(n)
        clean_ops = [operator_from_labels(terms, basis) for terms in clean]
        noisy_ops = None if noisy is None else [operator_from_labels(t, basis) for t in noisy]
        return cls(clean_ops, noisy_ops)


class ControlSchedule:
    """
    Piecewise-constant controls h_j(t_k) on a uniform grid.

    values[k, j] is the control of channel j on [k dt, (k + 1) dt). Every row
    must satisfy ||h(t_k)||_2 <= h_max; `project` maps arbitrary values onto
    that ball.
    """

    def __init__(self, dt: float, values: npt.ArrayLike, h_max: float) -> None:
        if not np.isfinite(dt) or dt <= 0:
            raise ValueError("dt must be positive")
        if not np.isfinite(h_max) or h_max <= 0:
            raise ValueError("h_max must be positive")
        grid = np.array(values, dtype=float)
        if grid.ndim != 2 or grid.shape[0] == 0:
            raise ValueError("values must be a non-empty (steps, channels) array")
        if not np.all(np.isfinite(grid)):
            raise ValueError("control values must be finite")
        norms = np.linalg.norm(grid, axis=1)
        if np.any(norms > h_max * (1.0 + BOUND_RTOL)):
            worst = int(np.argmax(norms))
            raise ValueError(
                f"control bound violated at step {worst}: |h| = {norms[worst]:.6g} > {h_max}"
            )
        grid.setflags(write=False)
        self.dt = float(dt)
        self.values = grid
        self.h_max = float(h_max)

    @property
    def steps(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    @property
    def horizon(self) -> float:
        return self.steps * self.dt

    @property
    def times(self) -> np.ndarray:
        """Grid times t_0 .. t_K."""
        return np.arange(self.steps + 1) * self.dt

    @staticmethod
    def project(values: np.ndarray, h_max: float) -> np.ndarray:
        """Scale each row down onto the ball ||h||_2 <= h_max."""
        norms = np.linalg.norm(values, axis=1, keepdims=True)
        scale = np.minimum(1.0, h_max / np.maximum(norms, np.finfo(float).tiny))
        return values * scale

    @classmethod
    def zeros(cls, steps: int, channels: int, dt: float, h_max: float) -> ControlSchedule:
        return cls(dt, np.zeros((steps, channels)), h_max)

    def with_values(self, values: np.ndarray) -> ControlSchedule:
        return ControlSchedule(self.dt, values, self.h_max)

    def refined(self, factor: int) -> ControlSchedule:
        """Same controls on a grid `factor` times finer."""
        return ControlSchedule(self.dt / factor, np.repeat(self.values, factor, axis=0), self.h_max)

    def to_frame(self) -> pd.DataFrame:
        """Columns t (start of each step), h_1 .. h_m."""
        frame = pd.DataFrame(
            self.values, columns=[f"h_{j + 1}" for j in range(self.channels)]
        )
        frame.insert(0, "t", self.times[:-1])
        return frame

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, h_max: float) -> ControlSchedule:
        """Inverse of `to_frame`; dt is read from the spacing of the t column."""
        if "t" not in frame.columns or len(frame) == 0:
            raise ValueError("schedule frame needs a 't' column and at least one row")
        control_cols = [c for c in frame.columns if str(c).startswith("h_")]
        if not control_cols:
            raise ValueError("schedule frame has no h_j columns")
        t = frame["t"].to_numpy(dtype=float)
        if len(t) > 1:
            dt = float(t[1] - t[0])
            if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12):
                raise ValueError("schedule times must be uniformly spaced")
        elif "dt" in frame.attrs:
            dt = float(frame.attrs["dt"])
        else:
            raise ValueError("cannot infer dt from a single-row schedule")
        return cls(dt, frame[control_cols].to_numpy(dtype=float), h_max)


class Segments(NamedTuple):
    """
    Sub-intervals of the grid on which both controls and alpha are constant.

    Attributes:
        controls: (S, m) control values per sub-interval.
        alphas: (S, m) alpha values per sub-interval.
        durations: (S,) sub-interval lengths.
        step_index: (S,) grid step each sub-interval belongs to.
    """

    controls: np.ndarray
    alphas: np.ndarray
    durations: np.ndarray
    step_index: np.ndarray


def segments(schedule: ControlSchedule, realization: NoiseRealization | None) -> Segments:
    """Split every grid interval at the interior noise jumps of all channels."""
    grid = schedule.times
    if realization is None:
        return Segments(
            controls=schedule.values,
            alphas=np.ones_like(schedule.values),
            durations=np.diff(grid),
            step_index=np.arange(schedule.steps),
        )

    if realization.channels != schedule.channels:
        raise ValueError(
            f"realization has {realization.channels} channels, schedule has {schedule.channels}"
        )
    if realization.horizon < schedule.horizon * (1.0 - 1e-12):
        raise ValueError(
            f"realization horizon {realization.horizon} is shorter than the schedule "
            f"horizon {schedule.horizon}"
        )

    jumps = np.concatenate([np.asarray(j) for j in realization.channel_jumps] + [grid])
    boundaries = np.unique(jumps[(jumps >= 0.0) & (jumps <= grid[-1])])
    durations = np.diff(boundaries)
    keep = durations > 0
    starts = boundaries[:-1][keep]
    durations = durations[keep]
    midpoints = starts + 0.5 * durations

    step_index = np.clip(
        np.searchsorted(grid, midpoints, side="right") - 1, 0, schedule.steps - 1
    )
    return Segments(
        controls=schedule.values[step_index],
        alphas=realization.alphas(midpoints),
        durations=durations,
        step_index=step_index,
    )


def effective_hamiltonian(
    h_k: npt.ArrayLike, alpha_k: npt.ArrayLike, hset: HamiltonianSet
) -> HermitianMatrix:
    """Sum_j h_j (alpha_j H_hat_j + (1 - alpha_j) H_breve_j)."""
    h = np.asarray(h_k, dtype=float)
    alpha = np.asarray(alpha_k, dtype=float)
    if h.shape != (hset.channels,) or alpha.shape != (hset.channels,):
        raise ValueError(
            f"expected {hset.channels} control values and alpha bits, "
            f"got {h.shape} and {alpha.shape}"
        )
    return effective_hamiltonians(h[None, :], alpha[None, :], hset)[0]


def effective_hamiltonians(
    controls: np.ndarray, alphas: np.ndarray, hset: HamiltonianSet
) -> np.ndarray:
    """Batched `effective_hamiltonian` over rows of (S, m) arrays."""
    clean_weight = controls * alphas
    noisy_weight = controls * (1.0 - alphas)
    return np.einsum("sj,jab->sab", clean_weight, hset.clean) + np.einsum(
        "sj,jab->sab", noisy_weight, hset.noisy
    )
