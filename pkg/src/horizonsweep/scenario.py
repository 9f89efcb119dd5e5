"""Crossing-pedestrian scenario construction.

Builds scenario categories (one per ego reference speed), samples pedestrian
walking speeds from a normal distribution, derives the road geometry that
forces a mid-front collision at the nominal walking speed when the ego does
not react, and classifies each speed into the P1/P2/P3 conflict groups.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

KMH_TO_MS = 1.0 / 3.6

# Curbside start / actor envelopes (the source study states none of these).
DEFAULT_LATERAL_OFFSET = 4.0    # m, pedestrian start distance from ego path centerline
DEFAULT_EGO_LENGTH = 4.5        # m
DEFAULT_EGO_WIDTH = 1.8         # m
DEFAULT_PEDESTRIAN_RADIUS = 0.3  # m
DEFAULT_ROUTE_LENGTH = 150.0    # m, long enough to recover reference speed after the crossing
DEFAULT_EGO_START_X = 0.0       # m

NOMINAL_PED_SPEED = 1.34        # m/s, mean walking speed
PED_SPEED_STD = 0.37            # m/s
MIN_PED_SPEED = 0.2             # m/s, draws at or below this are redrawn
MAX_REJECTIONS = 1000

GROUP_P1 = "P1"  # too slow: ego passes first, collision-free
GROUP_P2 = "P2"  # conflicting: collision if the ego does not react
GROUP_P3 = "P3"  # too fast: pedestrian has crossed before the ego arrives


@dataclass(frozen=True)
class ScenarioCategory:
    """One scenario family, parameterized by the ego reference speed (SI)."""

    id: str
    ego_ref_speed: float  # m/s

    def __post_init__(self) -> None:
        if self.ego_ref_speed <= 0:
            raise ValueError(f"ego_ref_speed must be > 0, got {self.ego_ref_speed}")


@dataclass(frozen=True)
class ScenarioGeometry:
    """Straight-road crossing layout; ego reference point is the rear axle."""

    lateral_offset: float      # m, pedestrian start distance from centerline (crossing from the right)
    crossing_x: float          # m, longitudinal position of the crossing line
    ego_start_x: float         # m
    route_length: float        # m
    ego_length: float          # m
    ego_width: float           # m
    pedestrian_radius: float   # m

    def __post_init__(self) -> None:
        for name in ("lateral_offset", "route_length", "ego_length", "ego_width", "pedestrian_radius"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.lateral_offset <= self.ego_width / 2.0 + self.pedestrian_radius:
            raise ValueError("pedestrian must start outside the ego corridor")
        if not (self.ego_start_x < self.crossing_x < self.route_length):
            raise ValueError(
                f"crossing_x={self.crossing_x} must lie strictly between "
                f"ego_start_x={self.ego_start_x} and route_length={self.route_length}"
            )

    @property
    def corridor_half_width(self) -> float:
        """Half-width of the lateral band a pedestrian disc conflicts with."""
        return self.ego_width / 2.0 + self.pedestrian_radius


@dataclass(frozen=True)
class PedestrianSample:
    """One sampled walking speed; group is filled per scenario category."""

    speed: float               # m/s
    group: Optional[str]       # P1 | P2 | P3, None until classified
    sample_index: int
    seed: int

    def __post_init__(self) -> None:
        if self.speed <= 0:
            raise ValueError(f"pedestrian speed must be > 0, got {self.speed}")
        if self.group is not None and self.group not in (GROUP_P1, GROUP_P2, GROUP_P3):
            raise ValueError(f"unknown group {self.group!r}")


def default_horizons() -> Tuple[float, ...]:
    """The swept horizon set: {0, 0.2, ..., 2, 3, ..., 10, 12, 15, 20} s."""
    fine = [round(0.2 * k, 10) for k in range(0, 11)]   # 0 .. 2.0
    coarse = [float(k) for k in range(3, 11)]           # 3 .. 10
    return tuple(fine + coarse + [12.0, 15.0, 20.0])


def default_categories() -> Tuple[ScenarioCategory, ...]:
    """SC1/SC2/SC3 at 30/40/50 km/h."""
    return (
        ScenarioCategory("SC1", 30.0 * KMH_TO_MS),
        ScenarioCategory("SC2", 40.0 * KMH_TO_MS),
        ScenarioCategory("SC3", 50.0 * KMH_TO_MS),
    )


@dataclass(frozen=True)
class SweepPlan:
    """Full sweep grid: horizons x scenario categories x pedestrian samples."""

    horizons: Tuple[float, ...]
    scenario_categories: Tuple[ScenarioCategory, ...]
    pedestrian_samples: Tuple[PedestrianSample, ...]
    master_seed: int

    def __post_init__(self) -> None:
        hs = self.horizons
        if any(h < 0 for h in hs):
            raise ValueError("horizons must be >= 0")
        if any(b <= a for a, b in zip(hs, hs[1:])):
            raise ValueError("horizons must be strictly ascending")
        ids = [sc.id for sc in self.scenario_categories]
        if len(set(ids)) != len(ids):
            raise ValueError("scenario ids must be unique within a sweep")


def sample_pedestrian_speeds(n: int, mean: float = NOMINAL_PED_SPEED,
                             std: float = PED_SPEED_STD, seed: int = 0) -> list[PedestrianSample]:
    """Draw n walking speeds from Normal(mean, std), redrawing non-walking speeds.

    Draws at or below MIN_PED_SPEED are rejected and redrawn: the normal has
    small but nonzero mass there and a stopped pedestrian never completes the
    scenario. More than MAX_REJECTIONS consecutive rejections means the
    distribution parameters are incompatible with the sampler.
    """
    if n <= 0:
        raise ValueError(f"n must be > 0, got {n}")
    if std < 0:
        raise ValueError(f"std must be >= 0, got {std}")
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(n):
        rejections = 0
        while True:
            speed = float(rng.normal(mean, std))
            if speed > MIN_PED_SPEED:
                break
            rejections += 1
            if rejections > MAX_REJECTIONS:
                raise ValueError(
                    f"rejected {rejections} consecutive draws from "
                    f"Normal({mean}, {std}); distribution incompatible with "
                    f"minimum walking speed {MIN_PED_SPEED} m/s"
                )
        samples.append(PedestrianSample(speed=speed, group=None, sample_index=i, seed=seed))
    return samples


def build_geometry(sc: ScenarioCategory, nominal_ped_speed: float = NOMINAL_PED_SPEED,
                   lateral_offset: float = DEFAULT_LATERAL_OFFSET,
                   ego_length: float = DEFAULT_EGO_LENGTH,
                   ego_width: float = DEFAULT_EGO_WIDTH,
                   pedestrian_radius: float = DEFAULT_PEDESTRIAN_RADIUS,
                   route_length: float = DEFAULT_ROUTE_LENGTH,
                   ego_start_x: float = DEFAULT_EGO_START_X) -> ScenarioGeometry:
    """Place the crossing so a non-reacting ego hits the pedestrian mid-front.

    At the nominal walking speed the pedestrian reaches the ego path
    centerline exactly when the ego front bumper reaches the crossing line:

        (crossing_x - ego_start_x - ego_length) / ego_ref_speed
            == lateral_offset / nominal_ped_speed
    """
    if nominal_ped_speed <= 0:
        raise ValueError(f"nominal_ped_speed must be > 0, got {nominal_ped_speed}")
    crossing_time = lateral_offset / nominal_ped_speed
    crossing_x = ego_start_x + ego_length + sc.ego_ref_speed * crossing_time
    return ScenarioGeometry(
        lateral_offset=lateral_offset,
        crossing_x=crossing_x,
        ego_start_x=ego_start_x,
        route_length=route_length,
        ego_length=ego_length,
        ego_width=ego_width,
        pedestrian_radius=pedestrian_radius,
    )


def conflict_windows(sc: ScenarioCategory, geom: ScenarioGeometry,
                     ped_speed: float) -> Tuple[float, float, float, float]:
    """Closed-form occupancy windows for a non-reacting rollout.

    Returns (t_in, t_out, t_front, t_rear): the interval during which the
    pedestrian disc overlaps the ego corridor, and the interval during which
    the ego body (inflated longitudinally by the pedestrian radius) occupies
    the crossing line.
    """
    band = geom.corridor_half_width
    t_in = (geom.lateral_offset - band) / ped_speed
    t_out = (geom.lateral_offset + band) / ped_speed
    v = sc.ego_ref_speed
    t_front = (geom.crossing_x - geom.ego_start_x - geom.ego_length - geom.pedestrian_radius) / v
    t_rear = (geom.crossing_x - geom.ego_start_x + geom.pedestrian_radius) / v
    return t_in, t_out, t_front, t_rear


def classify_speed_group(sc: ScenarioCategory, geom: ScenarioGeometry, ped_speed: float) -> str:
    """P1 if the ego passes first, P3 if the pedestrian crossed already, else P2."""
    if ped_speed <= 0:
        raise ValueError(f"ped_speed must be > 0, got {ped_speed}")
    t_in, t_out, t_front, t_rear = conflict_windows(sc, geom, ped_speed)
    if t_in > t_rear:
        return GROUP_P1
    if t_out < t_front:
        return GROUP_P3
    return GROUP_P2


def classify_samples(sc: ScenarioCategory, geom: ScenarioGeometry,
                     samples: Sequence[PedestrianSample]) -> list[PedestrianSample]:
    """Return the samples with the group field set for this scenario category."""
    return [replace(s, group=classify_speed_group(sc, geom, s.speed)) for s in samples]
