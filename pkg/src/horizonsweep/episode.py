"""Closed-loop episode execution: replan schedule, integration, termination.

An episode steps ego and pedestrian at dt_sim, replans at the achieved replan
period (from the latency model when one is active), and terminates on
collision, on route completion, or -- a planner deadlock -- at the episode
time limit.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .planner import (
    Footprint,
    Plan,
    PlannerConfig,
    mandatory_candidate_plans,
    optimize_plan,
    plan_cost,
)
from .predictor import PredictedTrajectory, oracle_predict
from .scenario import PedestrianSample, ScenarioCategory, ScenarioGeometry
from .simcore import (
    AgentState,
    EpisodeDeadlockError,
    RunResult,
    SimConfig,
    check_collision,
    step_ego,
    step_pedestrian,
)

DOMINANCE_TOL = 1e-9


def _empty_prediction(dt_pred: float) -> PredictedTrajectory:
    return PredictedTrajectory(offsets=np.empty(0), xs=np.empty(0), ys=np.empty(0),
                               horizon=0.0, dt_pred=dt_pred)


def _verify_dominance(plan: Plan, ego: AgentState, prediction: PredictedTrajectory,
                      cfg: PlannerConfig, v_ref: float, footprint: Footprint) -> None:
    for candidate in mandatory_candidate_plans(ego, cfg, len(plan)):
        cost = plan_cost(candidate, prediction, cfg, v_ref, footprint)
        if plan.total_cost > cost + DOMINANCE_TOL:
            raise AssertionError(
                f"candidate dominance violated at t={ego.t:.2f}: plan cost "
                f"{plan.total_cost:.9f} > candidate cost {cost:.9f} "
                f"(candidate accel[0]={candidate.accel[0] if len(candidate) else 0.0})"
            )


def run_episode(sc: ScenarioCategory, geom: ScenarioGeometry,
                ped: Optional[PedestrianSample], horizon: float,
                planner_cfg: PlannerConfig, sim_cfg: SimConfig,
                verify_candidates: bool = False) -> RunResult:
    """Run one episode and record its outcome and acceleration trace.

    The ego starts at ego_start_x at the reference speed; the pedestrian (if
    any) starts on the right curb at the crossing line. Every replan instant
    queries the oracle predictor and the planner; the active plan's profile
    steers until the next plan takes effect. With a latency model active,
    each plan (after the first) takes effect one achieved period late.
    """
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    v_ref = sc.ego_ref_speed
    dt = sim_cfg.dt_sim
    footprint = Footprint.from_geometry(geom)
    replan_steps = sim_cfg.replan_steps(horizon)
    lag_steps = replan_steps if sim_cfg.latency_model is not None else 0

    ego = AgentState(x=geom.ego_start_x, y=0.0, v=v_ref, a=0.0, t=0.0)
    ped_state: Optional[AgentState] = None
    if ped is not None:
        ped_state = AgentState(x=geom.crossing_x, y=-geom.lateral_offset,
                               v=ped.speed, a=0.0, t=0.0)

    plan: Optional[Plan] = None
    plan_start_t = 0.0
    pending: Optional[tuple[int, Plan, float]] = None  # (activation step, plan, its start t)
    trace: list[tuple[float, float]] = []
    n_replans = 0
    max_steps = int(round(sim_cfg.max_episode_time / dt))

    for step in range(max_steps):
        t = step * dt
        if step % replan_steps == 0:
            if ped_state is not None:
                prediction = oracle_predict(ped_state, horizon, planner_cfg.dt_plan)
            else:
                prediction = _empty_prediction(planner_cfg.dt_plan)
            new_plan = optimize_plan(ego, prediction, planner_cfg, v_ref, footprint)
            if verify_candidates:
                _verify_dominance(new_plan, ego, prediction, planner_cfg, v_ref, footprint)
            n_replans += 1
            if plan is None or lag_steps == 0:
                plan, plan_start_t = new_plan, t
            else:
                pending = (step + lag_steps, new_plan, t)
        if pending is not None and step >= pending[0]:
            _, plan, plan_start_t = pending
            pending = None

        a_cmd = plan.accel_at(t - plan_start_t) if plan is not None else 0.0
        x_prev = ego.x
        ego = step_ego(ego, a_cmd, dt, planner_cfg.a_min, planner_cfg.a_max,
                       planner_cfg.j_max)
        if ped_state is not None:
            ped_state = step_pedestrian(ped_state, dt)
        trace.append((ego.t, ego.a))

        min_freq = 1.0 / (replan_steps * dt)
        if ped_state is not None and check_collision(ego, ped_state, geom):
            return RunResult(
                collided=True, collision_speed=ego.v, travel_time=None,
                accel_trace=tuple(trace), min_planner_frequency=min_freq,
                sc_id=sc.id, horizon=horizon,
                sample_index=ped.sample_index if ped else None,
            )
        if ego.x >= geom.route_length:
            # linear interpolation inside the final step
            frac = (geom.route_length - x_prev) / (ego.x - x_prev) if ego.x > x_prev else 1.0
            travel_time = (ego.t - dt) + frac * dt
            return RunResult(
                collided=False, collision_speed=None, travel_time=travel_time,
                accel_trace=tuple(trace), min_planner_frequency=min_freq,
                sc_id=sc.id, horizon=horizon,
                sample_index=ped.sample_index if ped else None,
            )

    raise EpisodeDeadlockError(
        f"episode did not terminate within {sim_cfg.max_episode_time}s "
        f"(sc={sc.id}, horizon={horizon}, "
        f"sample={ped.sample_index if ped else None})"
    )


def baseline_travel_time(sc: ScenarioCategory, geom: ScenarioGeometry,
                         planner_cfg: PlannerConfig, sim_cfg: SimConfig) -> float:
    """Route completion time without a pedestrian crossing the road."""
    result = run_episode(sc, geom, None, 0.0, planner_cfg, sim_cfg)
    assert result.travel_time is not None
    return result.travel_time
