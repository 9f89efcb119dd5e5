"""Flawless pedestrian trajectory predictions truncated at the horizon.

The oracle extrapolates the pedestrian's constant-velocity crossing exactly,
so a prediction at offset t equals the simulated pedestrian state after
advancing t. Horizon zero yields the empty prediction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .simcore import AgentState

OFFSET_EPS = 1e-9  # tolerance for float division when counting samples


@dataclass(frozen=True)
class PredictedTrajectory:
    """Predicted positions at offsets dt_pred, 2*dt_pred, ... <= horizon."""

    offsets: np.ndarray = field(repr=False)  # strictly ascending, seconds
    xs: np.ndarray = field(repr=False)
    ys: np.ndarray = field(repr=False)
    horizon: float = 0.0
    dt_pred: float = 0.2

    def __post_init__(self) -> None:
        n = len(self.offsets)
        if len(self.xs) != n or len(self.ys) != n:
            raise ValueError("offsets, xs, ys must have equal length")
        if n > 0:
            if np.any(np.diff(self.offsets) <= 0):
                raise ValueError("offsets must be strictly ascending")
            if self.offsets[0] < self.dt_pred - OFFSET_EPS:
                raise ValueError("first offset must be >= dt_pred")
            if self.offsets[-1] > self.horizon + OFFSET_EPS:
                raise ValueError("last offset must be <= horizon")
        elif self.horizon > 0 and self.horizon >= self.dt_pred:
            raise ValueError("prediction may only be empty for horizon < dt_pred")

    def __len__(self) -> int:
        return len(self.offsets)

    @property
    def samples(self) -> list[tuple[float, float, float]]:
        """(t_offset, x, y) triples, in offset order."""
        return [(float(t), float(x), float(y))
                for t, x, y in zip(self.offsets, self.xs, self.ys)]


def oracle_predict(ped: AgentState, horizon: float, dt_pred: float = 0.2) -> PredictedTrajectory:
    """Exact future positions of a constant-velocity crossing pedestrian.

    The pedestrian walks perpendicular to the road (along +y) at its sampled
    speed, so x stays fixed and y advances linearly.
    """
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    if dt_pred <= 0:
        raise ValueError(f"dt_pred must be > 0, got {dt_pred}")
    n = int(np.floor(horizon / dt_pred + OFFSET_EPS))
    offsets = dt_pred * np.arange(1, n + 1)
    xs = np.full(n, ped.x)
    ys = ped.y + ped.v * offsets
    return PredictedTrajectory(offsets=offsets, xs=xs, ys=ys, horizon=horizon, dt_pred=dt_pred)
