"""Deterministic crossing-pedestrian sweeps with a risk-field planner, and
derivation of required/optimal prediction horizons from vehicle-level safety,
comfort, and efficiency metrics."""

from .scenario import (
    PedestrianSample,
    ScenarioCategory,
    ScenarioGeometry,
    SweepPlan,
    build_geometry,
    classify_speed_group,
    default_categories,
    default_horizons,
    sample_pedestrian_speeds,
)
from .simcore import (
    AgentState,
    EpisodeDeadlockError,
    RunResult,
    SimConfig,
    check_collision,
    step_ego,
    step_pedestrian,
)
from .predictor import PredictedTrajectory, oracle_predict
from .planner import (
    Footprint,
    Plan,
    PlannerConfig,
    optimize_plan,
    plan_cost,
    risk_potential,
    rollout_plan,
)
from .episode import baseline_travel_time, run_episode
from .metrics import (
    ComfortBreakdown,
    DecelClass,
    MetricTable,
    classify_decel,
    comfort_metric,
    efficiency_from_delays,
    interpolate_metric,
    safety_metric,
    travel_delay,
)
from .requirements import (
    AggregateResult,
    PerMetricHorizons,
    RequirementsConfig,
    WeightScheme,
    cost_fc,
    derive_application,
    indicator,
    normalize,
    optimal_overall,
    per_metric_required_optimal,
    required_overall,
)
from .config import AppConfig, ConfigError, default_config_dict, load_config, parse_config

__version__ = "0.1.0"
