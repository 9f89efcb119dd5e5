"""Sweep configuration: one JSON file fully determines a run.

Sections (all optional, defaults below): scenarios, geometry, pedestrians,
horizons_s, planner, simulation, weight_schemes, requirements, master_seed.
Validation errors name the offending field.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from .planner import PlannerConfig
from .requirements import RequirementsConfig, WeightScheme
from .scenario import (
    KMH_TO_MS,
    ScenarioCategory,
    ScenarioGeometry,
    build_geometry,
    default_horizons,
)
from .simcore import SimConfig

TOOL_VERSION = "0.1.0"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def default_config_dict() -> Dict[str, Any]:
    """Paper-scale defaults: 3 SCs x 22 horizons x 100 pedestrian speeds."""
    return {
        "master_seed": 7,
        "scenarios": [
            {"id": "SC1", "ego_ref_speed_kmh": 30.0},
            {"id": "SC2", "ego_ref_speed_kmh": 40.0},
            {"id": "SC3", "ego_ref_speed_kmh": 50.0},
        ],
        "geometry": {
            "lateral_offset_m": 4.0,
            "ego_length_m": 4.5,
            "ego_width_m": 1.8,
            "pedestrian_radius_m": 0.3,
            "route_length_m": 150.0,
            "ego_start_x_m": 0.0,
        },
        "pedestrians": {"count": 100, "mean_speed_ms": 1.34, "std_speed_ms": 0.37},
        "horizons_s": list(default_horizons()),
        "planner": {
            "w_risk": PlannerConfig.w_risk,
            "w_speed": PlannerConfig.w_speed,
            "w_acc": PlannerConfig.w_acc,
            "w_jerk": PlannerConfig.w_jerk,
            "sigma_risk_m": PlannerConfig.sigma_risk,
            "dt_plan_s": PlannerConfig.dt_plan,
            "a_min_ms2": PlannerConfig.a_min,
            "a_max_ms2": PlannerConfig.a_max,
            "j_max_ms3": PlannerConfig.j_max,
        },
        "simulation": {
            "dt_sim_s": 0.05,
            "replan_period_s": 0.05,
            "max_episode_time_s": 60.0,
            "latency_model": None,
        },
        "weight_schemes": [
            {"name": "a) general-purpose urban driving", "comfort": 1.0, "efficiency": 1.0,
             "scenarios": {"SC1": 1.0, "SC2": 1.0, "SC3": 1.0}},
            {"name": "b) driverless food delivery", "comfort": 0.0, "efficiency": 1.0,
             "scenarios": {"SC1": 0.2, "SC2": 0.1, "SC3": 0.7}},
            {"name": "c) driverless taxi (not hurried)", "comfort": 1.0, "efficiency": 0.0,
             "scenarios": {"SC1": 1.0, "SC2": 1.0, "SC3": 1.0}},
            {"name": "d) driverless taxi (hurried)", "comfort": 0.1, "efficiency": 2.0,
             "scenarios": {"SC1": 0.0, "SC2": 0.0, "SC3": 1.0}},
        ],
        "requirements": {
            "grid_step_s": 0.01,
            "satisficing_fraction": 0.85,
            "normalization_scope": "global",
            "comfort_requirement_basis": "comfortable",
        },
    }


@dataclass(frozen=True)
class AppConfig:
    """Typed view of a validated configuration."""

    categories: Tuple[ScenarioCategory, ...]
    geometries: Dict[str, ScenarioGeometry]
    ped_count: int
    ped_mean: float
    ped_std: float
    horizons: Tuple[float, ...]
    planner: PlannerConfig
    sim: SimConfig
    master_seed: int
    schemes: Tuple[WeightScheme, ...]
    requirements: RequirementsConfig
    raw: Dict[str, Any]

    @property
    def sc_ids(self) -> Tuple[str, ...]:
        return tuple(sc.id for sc in self.categories)


def _expect(mapping: Dict[str, Any], field: str, kind, where: str, default=None):
    value = mapping.get(field, default)
    if value is None:
        raise ConfigError(f"missing field {where}.{field}")
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"field {where}.{field} must be a number, got {value!r}")
        return float(value)
    if kind is int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"field {where}.{field} must be an integer, got {value!r}")
        return value
    if not isinstance(value, kind):
        raise ConfigError(f"field {where}.{field} must be {kind.__name__}, got {value!r}")
    return value


def parse_config(data: Dict[str, Any]) -> AppConfig:
    """Validate a config dict (missing sections take defaults)."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    defaults = default_config_dict()
    merged = {**defaults, **data}
    for section in ("geometry", "pedestrians", "planner", "simulation", "requirements"):
        merged[section] = {**defaults[section], **(data.get(section) or {})}

    try:
        categories = tuple(
            ScenarioCategory(
                id=_expect(sc, "id", str, f"scenarios[{i}]"),
                ego_ref_speed=_expect(sc, "ego_ref_speed_kmh", float, f"scenarios[{i}]") * KMH_TO_MS,
            )
            for i, sc in enumerate(merged["scenarios"])
        )
    except (TypeError, AttributeError):
        raise ConfigError("field scenarios must be a list of objects") from None
    if not categories:
        raise ConfigError("field scenarios must be non-empty")
    if len({sc.id for sc in categories}) != len(categories):
        raise ConfigError("field scenarios: ids must be unique")

    g = merged["geometry"]
    ped = merged["pedestrians"]
    ped_count = _expect(ped, "count", int, "pedestrians")
    ped_mean = _expect(ped, "mean_speed_ms", float, "pedestrians")
    ped_std = _expect(ped, "std_speed_ms", float, "pedestrians")
    if ped_count <= 0:
        raise ConfigError("field pedestrians.count must be > 0")
    if ped_std < 0:
        raise ConfigError("field pedestrians.std_speed_ms must be >= 0")

    horizons = merged["horizons_s"]
    if (not isinstance(horizons, list) or not horizons
            or not all(isinstance(h, (int, float)) and not isinstance(h, bool) for h in horizons)):
        raise ConfigError("field horizons_s must be a non-empty list of numbers")
    horizons = tuple(float(h) for h in horizons)
    if any(h < 0 for h in horizons) or any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise ConfigError("field horizons_s must be strictly ascending and >= 0")

    p = merged["planner"]
    try:
        planner = PlannerConfig(
            w_risk=_expect(p, "w_risk", float, "planner"),
            w_speed=_expect(p, "w_speed", float, "planner"),
            w_acc=_expect(p, "w_acc", float, "planner"),
            w_jerk=_expect(p, "w_jerk", float, "planner"),
            sigma_risk=_expect(p, "sigma_risk_m", float, "planner"),
            dt_plan=_expect(p, "dt_plan_s", float, "planner"),
            a_min=_expect(p, "a_min_ms2", float, "planner"),
            a_max=_expect(p, "a_max_ms2", float, "planner"),
            j_max=_expect(p, "j_max_ms3", float, "planner"),
        )
    except ValueError as e:
        raise ConfigError(f"field planner: {e}") from None

    s = merged["simulation"]
    latency = s.get("latency_model")
    latency_tuple: Optional[Tuple[Tuple[float, float], ...]] = None
    if latency is not None:
        if not isinstance(latency, list) or not latency:
            raise ConfigError("field simulation.latency_model must be null or a non-empty list")
        latency_tuple = tuple(
            (_expect(e, "horizon_s", float, f"simulation.latency_model[{i}]"),
             _expect(e, "frequency_hz", float, f"simulation.latency_model[{i}]"))
            for i, e in enumerate(latency)
        )
    try:
        sim = SimConfig(
            dt_sim=_expect(s, "dt_sim_s", float, "simulation"),
            replan_period=_expect(s, "replan_period_s", float, "simulation"),
            latency_model=latency_tuple,
            max_episode_time=_expect(s, "max_episode_time_s", float, "simulation"),
        )
    except ValueError as e:
        raise ConfigError(f"field simulation: {e}") from None

    sc_ids = {sc.id for sc in categories}
    schemes = []
    for i, entry in enumerate(merged["weight_schemes"]):
        where = f"weight_schemes[{i}]"
        name = _expect(entry, "name", str, where)
        scen_weights = _expect(entry, "scenarios", dict, where)
        for sc_id in scen_weights:
            if sc_id not in sc_ids:
                raise ConfigError(f"field {where}.scenarios references unknown scenario {sc_id!r}")
        try:
            schemes.append(WeightScheme(
                name=name,
                metric_weights={
                    "comfort": _expect(entry, "comfort", float, where, default=0.0),
                    "efficiency": _expect(entry, "efficiency", float, where, default=0.0),
                },
                scenario_weights={k: float(v) for k, v in scen_weights.items()},
            ))
        except ValueError as e:
            raise ConfigError(f"field {where}: {e}") from None

    r = merged["requirements"]
    try:
        requirements = RequirementsConfig(
            grid_step=_expect(r, "grid_step_s", float, "requirements"),
            satisficing_fraction=_expect(r, "satisficing_fraction", float, "requirements"),
            normalization_scope=_expect(r, "normalization_scope", str, "requirements"),
            comfort_requirement_basis=_expect(r, "comfort_requirement_basis", str, "requirements"),
        )
    except ValueError as e:
        raise ConfigError(f"field requirements: {e}") from None

    try:
        geometries = {
            sc.id: build_geometry(
                sc, ped_mean,
                lateral_offset=_expect(g, "lateral_offset_m", float, "geometry"),
                ego_length=_expect(g, "ego_length_m", float, "geometry"),
                ego_width=_expect(g, "ego_width_m", float, "geometry"),
                pedestrian_radius=_expect(g, "pedestrian_radius_m", float, "geometry"),
                route_length=_expect(g, "route_length_m", float, "geometry"),
                ego_start_x=_expect(g, "ego_start_x_m", float, "geometry"),
            )
            for sc in categories
        }
    except ValueError as e:
        raise ConfigError(f"field geometry: {e}") from None

    return AppConfig(
        categories=categories,
        geometries=geometries,
        ped_count=ped_count,
        ped_mean=ped_mean,
        ped_std=ped_std,
        horizons=horizons,
        planner=planner,
        sim=sim,
        master_seed=_expect(merged, "master_seed", int, "config"),
        schemes=tuple(schemes),
        requirements=requirements,
        raw=merged,
    )


def load_config(path: str | Path) -> AppConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from None
    return parse_config(data)


def canonical_json(data: Dict[str, Any]) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: AppConfig) -> str:
    """Stable digest of the effective (merged) configuration."""
    return hashlib.sha256(canonical_json(cfg.raw).encode()).hexdigest()
