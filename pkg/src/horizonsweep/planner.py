"""Receding-horizon longitudinal planner with a Gaussian risk field.

Each replan minimizes, over jerk-feasible acceleration profiles, the sum of a
risk potential around predicted pedestrian positions plus reference-speed,
acceleration, and jerk penalties. The planning horizon equals the prediction
horizon. Two solver routes share one cost definition:

- a structured candidate search over constant-target, cruise-then-brake, and
  brake-then-release profiles (closed-loop default, fully vectorized);
- exact enumeration over a discretized acceleration lattice when
  ``accel_levels`` is configured and the lattice fits ``enum_cap``.

Either route also evaluates the mandatory fallback candidates (zero hold,
comfortable braking, maximum braking), so the returned plan never costs more
than any of them.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .predictor import PredictedTrajectory
from .simcore import AgentState, DEFAULT_A_MAX, DEFAULT_A_MIN, DEFAULT_J_MAX
from .scenario import (
    DEFAULT_EGO_LENGTH,
    DEFAULT_EGO_WIDTH,
    DEFAULT_PEDESTRIAN_RADIUS,
    ScenarioGeometry,
)

COMFORT_BRAKE = -0.89  # m/s^2, mandatory comfortable-braking candidate
HARD_BRAKE = -1.89     # m/s^2, highly-uncomfortable deceleration threshold

KNOT_MATCH_TOL = 1e-6  # s, offset-to-knot alignment tolerance
RATIO_EPS = 1e-9


@dataclass(frozen=True)
class Footprint:
    """Ego rectangle and pedestrian disc dimensions used by the risk field."""

    ego_length: float = DEFAULT_EGO_LENGTH
    ego_width: float = DEFAULT_EGO_WIDTH
    pedestrian_radius: float = DEFAULT_PEDESTRIAN_RADIUS

    @classmethod
    def from_geometry(cls, geom: ScenarioGeometry) -> "Footprint":
        return cls(geom.ego_length, geom.ego_width, geom.pedestrian_radius)


DEFAULT_FOOTPRINT = Footprint()


@dataclass(frozen=True)
class PlannerConfig:
    """Cost weights, risk-field scale, and solver discretization."""

    w_risk: float = 50.0
    w_speed: float = 1.0
    w_acc: float = 0.5        # applies to deceleration only (braking discomfort)
    w_unc: float = 0.0        # per-knot cost of uncomfortable-band deceleration
    w_highly: float = 0.0     # additional per-knot cost of highly-uncomfortable deceleration
    w_jerk: float = 0.2
    sigma_risk: float = 2.0   # m
    approach_factor: float = 3.0     # risk boost while the pedestrian walks toward the path
    overspeed_factor: float = 400.0  # reference speed is a limit, not a setpoint
    discount: float = 0.95    # per-knot stage-cost discount; saturates behavior in h
    dt_plan: float = 0.2      # s
    a_min: float = DEFAULT_A_MIN
    a_max: float = DEFAULT_A_MAX
    j_max: float = DEFAULT_J_MAX
    accel_levels: Optional[Tuple[float, ...]] = None  # lattice for exact enumeration
    enum_cap: int = 200_000   # max enumerated lattice plans
    max_switch_positions: int = 12  # switch-knot resolution of the candidate bank

    def __post_init__(self) -> None:
        for name in ("w_risk", "w_speed", "w_acc", "w_unc", "w_highly", "w_jerk"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.sigma_risk <= 0:
            raise ValueError("sigma_risk must be > 0")
        if self.approach_factor < 1:
            raise ValueError("approach_factor must be >= 1")
        if self.overspeed_factor < 1:
            raise ValueError("overspeed_factor must be >= 1")
        if not (0 < self.discount <= 1):
            raise ValueError("discount must be in (0, 1]")
        if self.dt_plan <= 0:
            raise ValueError("dt_plan must be > 0")
        if self.a_min >= 0 or self.a_max <= 0 or self.j_max <= 0:
            raise ValueError("need a_min < 0 < a_max and j_max > 0")
        if self.accel_levels is not None:
            if len(self.accel_levels) == 0:
                raise ValueError("accel_levels must be non-empty when given")
            for lvl in self.accel_levels:
                if not (self.a_min - 1e-12 <= lvl <= self.a_max + 1e-12):
                    raise ValueError(f"accel level {lvl} outside [{self.a_min}, {self.a_max}]")


@dataclass(frozen=True)
class Plan:
    """A jerk-feasible acceleration profile with its rolled-out knot states."""

    accel: np.ndarray = field(repr=False)   # (N,), m/s^2 per knot interval
    times: np.ndarray = field(repr=False)   # (N,), s offsets of the knots
    xs: np.ndarray = field(repr=False)      # (N,), ego reference x at knots
    vs: np.ndarray = field(repr=False)      # (N,)
    total_cost: float = 0.0
    initial_accel: float = 0.0              # applied accel the profile continues from
    dt_plan: float = 0.2

    def __len__(self) -> int:
        return len(self.accel)

    def accel_at(self, t_offset: float) -> float:
        """Control at a time offset since the plan start; empty plans hold zero."""
        if len(self.accel) == 0:
            return 0.0
        idx = int(t_offset / self.dt_plan + RATIO_EPS)
        return float(self.accel[min(idx, len(self.accel) - 1)])


def plan_knot_count(horizon: float, dt_plan: float) -> int:
    """Number of plan knots: ceil(horizon / dt_plan), robust to float division."""
    if horizon <= 0:
        return 0
    return int(math.ceil(horizon / dt_plan - RATIO_EPS))


def risk_potential(ego_pos: Tuple[float, float], ped_pos: Tuple[float, float],
                   sigma_risk: float, footprint: Footprint = DEFAULT_FOOTPRINT) -> float:
    """Gaussian potential of the pedestrian-disc distance to the ego rectangle.

    exp(-d^2 / (2 sigma^2)) with d the closest-point distance between the ego
    footprint (reference at the rear, rectangle extending ego_length forward)
    and the pedestrian disc center, minus the disc radius, floored at zero.
    """
    if sigma_risk <= 0:
        raise ValueError("sigma_risk must be > 0")
    ex, ey = ego_pos
    px, py = ped_pos
    dx = max(ex - px, px - ex - footprint.ego_length, 0.0)
    dy = max(abs(py - ey) - footprint.ego_width / 2.0, 0.0)
    d = max(math.hypot(dx, dy) - footprint.pedestrian_radius, 0.0)
    return math.exp(-d * d / (2.0 * sigma_risk * sigma_risk))


def rollout_plan(ego: AgentState, accels: Sequence[float], cfg: PlannerConfig) -> Plan:
    """Integrate an acceleration sequence into knot states (cost left at 0).

    Velocity is floored at zero; displacement uses the trapezoid of the
    (floored) knot velocities, which is exact for unclamped steps.
    """
    dt = cfg.dt_plan
    n = len(accels)
    accel = np.asarray(accels, dtype=float)
    times = dt * np.arange(1, n + 1)
    vs = np.empty(n)
    xs = np.empty(n)
    v, x = ego.v, ego.x
    for k in range(n):
        v_new = max(0.0, v + accel[k] * dt)
        x += 0.5 * (v + v_new) * dt
        v = v_new
        vs[k] = v
        xs[k] = x
    return Plan(accel=accel, times=times, xs=xs, vs=vs, total_cost=0.0,
                initial_accel=ego.a, dt_plan=dt)


def _approach_mask(prediction: PredictedTrajectory) -> np.ndarray:
    """True per sample while the pedestrian is still walking toward the ego path.

    The crossing direction comes from the prediction itself (constant-velocity
    samples); with fewer than two samples no boost applies.
    """
    ys = prediction.ys
    if len(ys) < 2:
        return np.zeros(len(ys), dtype=bool)
    direction = np.sign(ys[-1] - ys[0])
    return (ys * direction) < 0


def _matched_knots(prediction: PredictedTrajectory, n_knots: int,
                   dt_plan: float) -> Tuple[np.ndarray, np.ndarray]:
    """Indices of plan knots that carry a prediction sample, and the sample indices."""
    if len(prediction) == 0 or n_knots == 0:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    knot_idx = np.rint(prediction.offsets / dt_plan).astype(int)
    aligned = (np.abs(knot_idx * dt_plan - prediction.offsets) <= KNOT_MATCH_TOL)
    valid = aligned & (knot_idx >= 1) & (knot_idx <= n_knots)
    sample_idx = np.nonzero(valid)[0]
    return knot_idx[valid] - 1, sample_idx


def plan_cost(plan: Plan, prediction: PredictedTrajectory, cfg: PlannerConfig,
              v_ref: float, footprint: Footprint = DEFAULT_FOOTPRINT) -> float:
    """Reference (scalar) evaluation of the planner cost for one plan.

    The speed term is quadratic in the relative deviation from v_ref, scaled
    by overspeed_factor above the reference: v_ref is an urban speed limit,
    so the planner must not sprint past pedestrians. The acceleration term
    penalizes deceleration only; braking is what costs comfort, and pricing
    recovery acceleration would leave the ego dawdling after every stop.
    Stage costs are discounted per knot so closed-loop behavior saturates
    once the horizon covers the interaction.
    """
    n = len(plan)
    if n == 0:
        return 0.0
    cost = 0.0
    knots, samples = _matched_knots(prediction, n, cfg.dt_plan)
    approaching = _approach_mask(prediction)
    for k, j in zip(knots, samples):
        boost = cfg.approach_factor if approaching[j] else 1.0
        cost += (cfg.discount ** int(k)) * cfg.w_risk * boost * risk_potential(
            (float(plan.xs[k]), 0.0),
            (float(prediction.xs[j]), float(prediction.ys[j])),
            cfg.sigma_risk, footprint,
        )
    jerk_scale = cfg.j_max * cfg.dt_plan
    a_prev = plan.initial_accel
    for k in range(n):
        w = cfg.discount ** k
        dv = (plan.vs[k] - v_ref) / v_ref
        over = cfg.overspeed_factor if plan.vs[k] > v_ref else 1.0
        cost += w * cfg.w_speed * over * dv * dv
        ra = min(plan.accel[k], 0.0) / cfg.a_min
        cost += w * cfg.w_acc * ra * ra
        rh = min(plan.accel[k] - COMFORT_BRAKE, 0.0) / cfg.a_min
        cost += w * cfg.w_hard * rh * rh
        rj = (plan.accel[k] - a_prev) / jerk_scale
        cost += w * cfg.w_jerk * rj * rj
        a_prev = plan.accel[k]
    return cost


# ----------------------- vectorized profile evaluation -----------------------


def _evaluate_profiles(profiles: np.ndarray, ego: AgentState,
                       prediction: PredictedTrajectory, cfg: PlannerConfig,
                       v_ref: float, footprint: Footprint) -> np.ndarray:
    """Cost of each profile row, matching plan_cost's arithmetic vectorially."""
    dt = cfg.dt_plan
    n = profiles.shape[1]
    # floored velocity rollout: v_k = S_k - min(-v0, running-min S), with S the
    # unfloored velocity increments
    s = np.cumsum(profiles * dt, axis=1)
    running_min = np.minimum.accumulate(s, axis=1)
    vs = s - np.minimum(running_min, -ego.v)
    v_prev = np.concatenate([np.full((len(profiles), 1), ego.v), vs[:, :-1]], axis=1)
    xs = ego.x + np.cumsum(0.5 * (v_prev + vs) * dt, axis=1)

    costs = np.zeros(len(profiles))
    weights = cfg.discount ** np.arange(n)
    knots, samples = _matched_knots(prediction, n, dt)
    if len(knots) > 0:
        ex = xs[:, knots]
        dx = np.maximum(np.maximum(ex - prediction.xs[samples],
                                   prediction.xs[samples] - ex - footprint.ego_length), 0.0)
        dy = np.maximum(np.abs(prediction.ys[samples]) - footprint.ego_width / 2.0, 0.0)
        d = np.maximum(np.hypot(dx, dy) - footprint.pedestrian_radius, 0.0)
        risk = np.exp(-d * d / (2.0 * cfg.sigma_risk ** 2))
        boost = np.where(_approach_mask(prediction)[samples], cfg.approach_factor, 1.0)
        costs += cfg.w_risk * (risk * boost * weights[knots]).sum(axis=1)

    dv2 = ((vs - v_ref) / v_ref) ** 2
    speed = np.where(vs > v_ref, cfg.overspeed_factor * dv2, dv2)
    costs += cfg.w_speed * (speed * weights).sum(axis=1)
    costs += cfg.w_acc * (((np.minimum(profiles, 0.0) / cfg.a_min) ** 2) * weights).sum(axis=1)
    hard = np.minimum(profiles - COMFORT_BRAKE, 0.0) / cfg.a_min
    costs += cfg.w_hard * ((hard ** 2) * weights).sum(axis=1)
    a_anchor = np.concatenate([np.full((len(profiles), 1), ego.a), profiles[:, :-1]], axis=1)
    jerk_scale = cfg.j_max * dt
    costs += cfg.w_jerk * ((((profiles - a_anchor) / jerk_scale) ** 2) * weights).sum(axis=1)
    return costs


# --------------------------- candidate generation ---------------------------

_CONST_TARGET_BASE = (1.0, 0.5, 0.0, -0.3, -0.5, COMFORT_BRAKE, -1.3, -1.89, -3.0, -5.0)
# switch-profile levels: braking for timed arrivals, positive for speed recovery
_SWITCH_LEVEL_BASE = (2.0, 1.0, 0.5, -0.5, COMFORT_BRAKE, -1.3, -1.89, -3.5)
# escalating-brake pairs: a gentle lead-in followed by a harder core keeps the
# time-share of braking in the comfortable band high
_GENTLE_LEAD_LEVELS = (-0.5, COMFORT_BRAKE)
_HARD_CORE_LEVELS = (-1.3, -1.89, -3.5)

RISK_GATE_SIGMAS = 4.5  # beyond this many sigmas the risk term cannot matter


def _const_targets(cfg: PlannerConfig) -> np.ndarray:
    levels = {cfg.a_max, cfg.a_min, 0.0, COMFORT_BRAKE}
    levels.update(lvl for lvl in _CONST_TARGET_BASE if cfg.a_min <= lvl <= cfg.a_max)
    return np.array(sorted(levels, reverse=True))


def _switch_levels(cfg: PlannerConfig) -> np.ndarray:
    levels = {cfg.a_min, COMFORT_BRAKE}
    levels.update(lvl for lvl in _SWITCH_LEVEL_BASE if cfg.a_min <= lvl <= cfg.a_max)
    return np.array(sorted(levels, reverse=True))


def _switch_positions(n: int, cap: int) -> np.ndarray:
    if n <= 1:
        return np.empty(0, dtype=int)
    return np.unique(np.linspace(1, n - 1, min(cap, n - 1)).round().astype(int))


@functools.lru_cache(maxsize=256)
def _candidate_bank(cfg: PlannerConfig, n: int, with_switches: bool
                    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(target1, switch_knot, target2) triples describing each candidate profile.

    A profile ramps (jerk-feasibly) from the current accel toward target1,
    switches after ``switch_knot`` knots, then ramps toward target2. Constant
    profiles use switch_knot == n. The bank always contains the mandatory
    candidates: zero hold, comfortable braking, and maximum braking.
    """
    const = _const_targets(cfg)
    t1 = [const]
    sw = [np.full(len(const), n)]
    t2 = [const]
    positions = _switch_positions(n, cfg.max_switch_positions) if with_switches else ()
    if len(positions) > 0:
        levels = _switch_levels(cfg)
        l_grid, p_grid = np.meshgrid(levels, positions, indexing="ij")
        l_flat, p_flat = l_grid.ravel(), p_grid.ravel()
        # cruise-then-level (timed braking / deferred recovery)
        t1.append(np.zeros(len(l_flat)))
        sw.append(p_flat)
        t2.append(l_flat)
        # level-then-settle (braking window or speed recovery, then hold)
        t1.append(l_flat)
        sw.append(p_flat)
        t2.append(np.zeros(len(l_flat)))
        # gentle-then-harder braking (comfortable lead-in, short hard core)
        gentle = [g for g in _GENTLE_LEAD_LEVELS if cfg.a_min <= g < 0]
        hard = [b for b in _HARD_CORE_LEVELS if cfg.a_min <= b < 0] + [cfg.a_min]
        pairs = [(g, b) for g in gentle for b in hard if b < g]
        if pairs:
            g_arr = np.array([p[0] for p in pairs])
            b_arr = np.array([p[1] for p in pairs])
            gg, pp = np.meshgrid(g_arr, positions, indexing="ij")
            bb, _ = np.meshgrid(b_arr, positions, indexing="ij")
            t1.append(gg.ravel())
            sw.append(pp.ravel())
            t2.append(bb.ravel())
    return np.concatenate(t1), np.concatenate(sw), np.concatenate(t2)


def _risk_in_reach(ego: AgentState, prediction: PredictedTrajectory, cfg: PlannerConfig,
                   footprint: Footprint) -> bool:
    """Can any prediction sample contribute non-negligible risk to any profile?

    Conservative reachability bound: the ego cannot move backward and cannot
    pass x + v t + a_max t^2 / 2. Samples farther than RISK_GATE_SIGMAS sigmas
    from every reachable footprint cannot affect the choice of plan.
    """
    if len(prediction) == 0:
        return False
    margin = RISK_GATE_SIGMAS * cfg.sigma_risk + footprint.pedestrian_radius
    lateral_ok = np.abs(prediction.ys) <= footprint.ego_width / 2.0 + margin
    if not lateral_ok.any():
        return False
    t = prediction.offsets
    reach = ego.x + ego.v * t + 0.5 * cfg.a_max * t * t + footprint.ego_length
    longitudinal_ok = ((prediction.xs >= ego.x - margin)
                       & (prediction.xs <= reach + margin))
    return bool((lateral_ok & longitudinal_ok).any())


def _ramp_profiles(a_prev: float, t1: np.ndarray, sw: np.ndarray, t2: np.ndarray,
                   n: int, jstep: float) -> np.ndarray:
    """Jerk-feasible piecewise-ramp profiles, one row per (t1, sw, t2) triple."""
    k = np.arange(1, n + 1)
    phase1 = a_prev + np.clip(t1[:, None] - a_prev, -jstep * k, jstep * k)
    a_switch = a_prev + np.clip(t1 - a_prev, -jstep * sw, jstep * sw)
    steps_after = np.maximum(k - sw[:, None], 0)
    phase2 = a_switch[:, None] + np.clip(t2[:, None] - a_switch[:, None],
                                         -jstep * steps_after, jstep * steps_after)
    return np.where(k <= sw[:, None], phase1, phase2)


def _mandatory_profiles(cfg: PlannerConfig, a_prev: float, n: int) -> np.ndarray:
    jstep = cfg.j_max * cfg.dt_plan
    targets = np.array([0.0, max(COMFORT_BRAKE, cfg.a_min), cfg.a_min])
    sw = np.full(3, n)
    return _ramp_profiles(a_prev, targets, sw, targets, n, jstep)


def _enumerate_lattice(levels: Tuple[float, ...], n: int) -> np.ndarray:
    """All level sequences of length n, lexicographic in level order."""
    grids = np.meshgrid(*([np.asarray(levels, dtype=float)] * n), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def optimize_plan(ego: AgentState, prediction: PredictedTrajectory, cfg: PlannerConfig,
                  v_ref: float, footprint: Footprint = DEFAULT_FOOTPRINT) -> Plan:
    """Best feasible plan over the candidate set (or the exact lattice).

    Deterministic: ties resolve to the first candidate in generation order.
    The returned total_cost matches plan_cost's definition (vectorized
    evaluation, identical arithmetic up to floating-point summation order).
    """
    n = plan_knot_count(prediction.horizon, cfg.dt_plan)
    if n == 0:
        return rollout_plan(ego, [], cfg)
    if prediction.horizon < cfg.dt_plan - RATIO_EPS:
        # sub-knot horizon: hold zero acceleration
        plan = rollout_plan(ego, [0.0] * n, cfg)
        cost = plan_cost(plan, prediction, cfg, v_ref, footprint)
        return Plan(accel=plan.accel, times=plan.times, xs=plan.xs, vs=plan.vs,
                    total_cost=cost, initial_accel=ego.a, dt_plan=cfg.dt_plan)

    jstep = cfg.j_max * cfg.dt_plan
    profiles = None
    if cfg.accel_levels is not None and len(cfg.accel_levels) ** n <= cfg.enum_cap:
        lattice = _enumerate_lattice(cfg.accel_levels, n)
        deltas = np.diff(np.concatenate(
            [np.full((len(lattice), 1), ego.a), lattice], axis=1), axis=1)
        feasible = np.all(np.abs(deltas) <= jstep + 1e-9, axis=1)
        if feasible.any():
            profiles = np.concatenate(
                [lattice[feasible], _mandatory_profiles(cfg, ego.a, n)])
    if profiles is None:
        # switch profiles matter when risk is visible (timed braking) or while
        # off the reference speed (accelerate-then-settle recovery)
        with_switches = (abs(ego.v - v_ref) > 0.02 * v_ref
                         or _risk_in_reach(ego, prediction, cfg, footprint))
        t1, sw, t2 = _candidate_bank(cfg, n, with_switches)
        profiles = _ramp_profiles(ego.a, t1, sw, t2, n, jstep)

    costs = _evaluate_profiles(profiles, ego, prediction, cfg, v_ref, footprint)
    best = int(np.argmin(costs))
    plan = rollout_plan(ego, profiles[best], cfg)
    return Plan(accel=plan.accel, times=plan.times, xs=plan.xs, vs=plan.vs,
                total_cost=float(costs[best]), initial_accel=ego.a, dt_plan=cfg.dt_plan)


def mandatory_candidate_plans(ego: AgentState, cfg: PlannerConfig, n: int) -> list[Plan]:
    """The spec'd fallback candidates, clipped to jerk feasibility."""
    return [rollout_plan(ego, row, cfg) for row in _mandatory_profiles(cfg, ego.a, n)]
