"""Kinematic integration and collision detection primitives.

The ego drives a straight path along +x with its reference point at the rear
axle (footprint spans [x, x + ego_length]). The pedestrian crosses from the
right at constant speed along +y at a fixed longitudinal station. Episode
orchestration lives in episode.py.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

from .scenario import ScenarioGeometry

# Actuator envelope: emergency braking harder than the "highly uncomfortable"
# deceleration band, jerk bounded.
DEFAULT_A_MIN = -8.0   # m/s^2
DEFAULT_A_MAX = 2.0    # m/s^2
DEFAULT_J_MAX = 10.0   # m/s^3

DEFAULT_DT_SIM = 0.05         # s, 20 Hz
DEFAULT_REPLAN_PERIOD = 0.05  # s
DEFAULT_MAX_EPISODE_TIME = 60.0  # s


class EpisodeDeadlockError(RuntimeError):
    """Episode failed to terminate before max_episode_time."""


@dataclass(frozen=True)
class AgentState:
    """Point-mass state along the road frame."""

    x: float  # m, longitudinal (ego: rear axle)
    y: float  # m, lateral (ego path is y == 0)
    v: float  # m/s
    a: float  # m/s^2, last applied acceleration
    t: float  # s


@dataclass(frozen=True)
class SimConfig:
    """Integration and replan schedule configuration.

    latency_model maps horizon to the achieved replan frequency (Hz) as a
    step-function lookup: the value at the greatest knot <= horizon applies
    (the first value below the first knot). None means the configured
    replan_period always holds. An active latency model also delays each
    plan's activation by one achieved period (synthetic compute time).
    """

    dt_sim: float = DEFAULT_DT_SIM
    replan_period: float = DEFAULT_REPLAN_PERIOD
    latency_model: Optional[Tuple[Tuple[float, float], ...]] = None
    max_episode_time: float = DEFAULT_MAX_EPISODE_TIME

    def __post_init__(self) -> None:
        if not (0 < self.dt_sim <= self.replan_period):
            raise ValueError(
                f"need 0 < dt_sim <= replan_period, got dt_sim={self.dt_sim}, "
                f"replan_period={self.replan_period}"
            )
        if self.max_episode_time <= 0:
            raise ValueError("max_episode_time must be > 0")
        if self.latency_model is not None:
            knots = [h for h, _ in self.latency_model]
            freqs = [f for _, f in self.latency_model]
            if not knots:
                raise ValueError("latency_model must have at least one entry")
            if any(b <= a for a, b in zip(knots, knots[1:])):
                raise ValueError("latency_model horizons must be strictly ascending")
            if any(f <= 0 for f in freqs):
                raise ValueError("latency_model frequencies must be > 0")

    def replan_frequency(self, horizon: float) -> float:
        """Achieved replan frequency (Hz) for the given horizon."""
        if self.latency_model is None:
            return 1.0 / self.replan_period
        freq = self.latency_model[0][1]
        for knot, value in self.latency_model:
            if horizon >= knot:
                freq = value
            else:
                break
        return freq

    def replan_steps(self, horizon: float) -> int:
        """Replan period for the given horizon, in whole dt_sim steps (>= 1)."""
        period = 1.0 / self.replan_frequency(horizon)
        return max(1, int(round(period / self.dt_sim)))


@dataclass(frozen=True)
class RunResult:
    """Outcome and traces of one episode."""

    collided: bool
    collision_speed: Optional[float]      # m/s, present iff collided
    travel_time: Optional[float]          # s, present iff not collided
    accel_trace: Tuple[Tuple[float, float], ...]  # (t, applied accel) at every dt_sim
    min_planner_frequency: float          # Hz
    sc_id: str
    horizon: float
    sample_index: Optional[int]           # None for pedestrian-free runs

    def __post_init__(self) -> None:
        if self.collided:
            if self.collision_speed is None or self.collision_speed < 0:
                raise ValueError("collided runs need collision_speed >= 0")
            if self.travel_time is not None:
                raise ValueError("collided runs have no travel_time")
        else:
            if self.travel_time is None or self.travel_time <= 0:
                raise ValueError("completed runs need travel_time > 0")
            if self.collision_speed is not None:
                raise ValueError("completed runs have no collision_speed")


def step_ego(state: AgentState, a_cmd: float, dt: float,
             a_min: float = DEFAULT_A_MIN, a_max: float = DEFAULT_A_MAX,
             j_max: float = DEFAULT_J_MAX) -> AgentState:
    """Advance the ego one step under acceleration and jerk clamps.

    The commanded acceleration is clamped to [a_min, a_max] and then to the
    jerk-reachable band around the previous applied acceleration. Velocity is
    floored at zero (no reverse); when the ego stops mid-step the position
    update integrates only up to the stop instant.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    a = min(max(a_cmd, a_min), a_max)
    a = min(max(a, state.a - j_max * dt), state.a + j_max * dt)
    v_end = state.v + a * dt
    if v_end < 0.0:
        # stops after t_stop = -v/a; stays put for the remainder
        if state.v > 0.0:
            dx = -state.v * state.v / (2.0 * a)
        else:
            dx = 0.0
        v_new = 0.0
    else:
        dx = state.v * dt + 0.5 * a * dt * dt
        v_new = v_end
    return AgentState(x=state.x + dx, y=state.y, v=v_new, a=a, t=state.t + dt)


def step_pedestrian(state: AgentState, dt: float) -> AgentState:
    """Advance the pedestrian: constant speed toward and beyond the ego path."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if state.v <= 0:
        raise ValueError("pedestrian speed must be > 0 (scenario sampling precondition)")
    return replace(state, y=state.y + state.v * dt, t=state.t + dt)


def check_collision(ego: AgentState, ped: AgentState, geom: ScenarioGeometry) -> bool:
    """Circle-rectangle closest-point test between pedestrian disc and ego body."""
    dx = max(ego.x - ped.x, ped.x - ego.x - geom.ego_length, 0.0)
    dy = max(abs(ped.y - ego.y) - geom.ego_width / 2.0, 0.0)
    return math.hypot(dx, dy) <= geom.pedestrian_radius


