"""Vehicle-level safety, comfort, and efficiency metrics.

Safety is the collision-free percentage of runs, comfort the share of braking
time in the comfortable deceleration band, and efficiency the travel-delay
headroom relative to the worst mean delay over the horizon sweep. Metric
series are sampled at the swept horizon knots and linearly interpolated in
between.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from .simcore import RunResult

# Deceleration comfort bands, m/s^2 (half-open on the left)
COMFORTABLE_BOUND = -0.89
UNCOMFORTABLE_BOUND = -1.89

SAFETY = "safety"
COMFORT = "comfort"
EFFICIENCY = "efficiency"
METRICS = (SAFETY, COMFORT, EFFICIENCY)

GROUP_ALL = "all"


class DecelClass(enum.Enum):
    NOT_BRAKING = "not_braking"
    COMFORTABLE = "comfortable"
    UNCOMFORTABLE = "uncomfortable"
    HIGHLY_UNCOMFORTABLE = "highly_uncomfortable"


def classify_decel(a: float) -> DecelClass:
    """Comfort band of one acceleration sample."""
    if a >= 0.0:
        return DecelClass.NOT_BRAKING
    if a >= COMFORTABLE_BOUND:
        return DecelClass.COMFORTABLE
    if a >= UNCOMFORTABLE_BOUND:
        return DecelClass.UNCOMFORTABLE
    return DecelClass.HIGHLY_UNCOMFORTABLE


@dataclass(frozen=True)
class ComfortBreakdown:
    """Shares of total braking time per comfort band, in percent."""

    comfortable: float
    uncomfortable: float
    highly_uncomfortable: float

    def __post_init__(self) -> None:
        total = self.comfortable + self.uncomfortable + self.highly_uncomfortable
        if abs(total - 100.0) > 1e-9:
            raise ValueError(f"comfort shares must sum to 100, got {total}")
        for share in (self.comfortable, self.uncomfortable, self.highly_uncomfortable):
            if not (0.0 <= share <= 100.0):
                raise ValueError(f"share {share} outside [0, 100]")


def _check_runs(runs: Sequence[RunResult]) -> None:
    if not runs:
        raise ValueError("empty run set (sweep bug: every cell must have runs)")
    key = (runs[0].sc_id, runs[0].horizon)
    for r in runs:
        if (r.sc_id, r.horizon) != key:
            raise ValueError(f"mixed cells: {key} vs {(r.sc_id, r.horizon)}")


def safety_metric(runs: Sequence[RunResult]) -> float:
    """Percentage of runs that are collision-free."""
    _check_runs(runs)
    free = sum(1 for r in runs if not r.collided)
    return 100.0 * free / len(runs)


def braking_step_counts(run: RunResult) -> Tuple[int, int, int]:
    """(comfortable, uncomfortable, highly uncomfortable) braking steps of one run."""
    a = np.array([s[1] for s in run.accel_trace])
    braking = a[a < 0.0]
    comfortable = int(np.count_nonzero(braking >= COMFORTABLE_BOUND))
    highly = int(np.count_nonzero(braking < UNCOMFORTABLE_BOUND))
    return comfortable, len(braking) - comfortable - highly, highly


def comfort_breakdown_from_times(comfortable: float, uncomfortable: float,
                                 highly: float) -> ComfortBreakdown:
    """Shares from pooled per-band braking times; zero braking counts as all-comfortable."""
    total = comfortable + uncomfortable + highly
    if total <= 0.0:
        return ComfortBreakdown(100.0, 0.0, 0.0)
    return ComfortBreakdown(100.0 * comfortable / total, 100.0 * uncomfortable / total,
                            100.0 * highly / total)


def comfort_metric(runs: Sequence[RunResult]) -> Tuple[ComfortBreakdown, float]:
    """Pool braking timesteps across runs; the metric is the comfortable share."""
    _check_runs(runs)
    counts = np.zeros(3)
    for run in runs:
        counts += braking_step_counts(run)
    breakdown = comfort_breakdown_from_times(*counts)
    return breakdown, breakdown.comfortable


def travel_delay(t: float, t_b: float) -> float:
    """Relative travel-time increase over the pedestrian-free baseline, percent."""
    if t_b <= 0:
        raise ValueError(f"baseline time must be > 0, got {t_b}")
    if t < 0:
        raise ValueError(f"travel time must be >= 0, got {t}")
    return 100.0 * (t - t_b) / t_b


def efficiency_from_delays(delay_curve: Mapping[float, float]) -> Dict[float, float]:
    """Flip the delay curve into a positive is-better efficiency series.

    f_eff(h) = -delay(h) + max_h' delay(h'); the maximum of the piecewise
    linear interpolant is attained at a knot, so the knot maximum is exact.
    """
    if not delay_curve:
        raise ValueError("empty delay curve")
    worst = max(delay_curve.values())
    return {h: worst - d for h, d in delay_curve.items()}


def interpolate_metric(series: Mapping[float, float], h: float) -> float:
    """Piecewise-linear interpolation between horizon knots; exact at knots."""
    knots = sorted(series)
    if not knots:
        raise ValueError("empty series")
    if h < knots[0] or h > knots[-1]:
        raise ValueError(
            f"h={h} outside the knot range [{knots[0]}, {knots[-1]}] "
            f"(evaluation-grid bug: no extrapolation)"
        )
    values = [series[k] for k in knots]
    return float(np.interp(h, knots, values))


@dataclass
class MetricTable:
    """Sampled metric values f^m(h, s) plus delay curves and baselines.

    Every per-(metric, sc) series covers the same horizon knots. The comfort
    breakdown series carry the per-band shares the requirements rules need.
    Group delay curves may contain NaN where a group has no completed runs.
    """

    horizons: Tuple[float, ...]
    sc_ids: Tuple[str, ...]
    entries: Dict[Tuple[str, str], np.ndarray]            # (metric, sc) -> values over knots
    delay: Dict[str, np.ndarray] = field(default_factory=dict)          # sc -> mean delay %
    delay_by_group: Dict[Tuple[str, str], np.ndarray] = field(default_factory=dict)
    breakdown: Dict[str, np.ndarray] = field(default_factory=dict)      # sc -> (K, 3) shares
    baselines: Dict[str, float] = field(default_factory=dict)           # sc -> t_b seconds

    def __post_init__(self) -> None:
        k = len(self.horizons)
        if any(b <= a for a, b in zip(self.horizons, self.horizons[1:])):
            raise ValueError("horizon knots must be strictly ascending")
        for key, values in self.entries.items():
            if len(values) != k:
                raise ValueError(f"series {key} covers {len(values)} knots, expected {k}")
            metric = key[0]
            if metric in (SAFETY, COMFORT):
                if np.any(values < -1e-9) or np.any(values > 100.0 + 1e-9):
                    raise ValueError(f"{metric} values must lie in [0, 100]")
        for sc, shares in self.breakdown.items():
            if shares.shape != (k, 3):
                raise ValueError(f"breakdown for {sc} must be (K, 3)")

    def series(self, metric: str, sc: str) -> np.ndarray:
        return self.entries[(metric, sc)]

    def highly_uncomfortable_series(self, sc: str) -> np.ndarray:
        return self.breakdown[sc][:, 2]

    def value_at(self, metric: str, sc: str, h: float) -> float:
        series = dict(zip(self.horizons, self.entries[(metric, sc)]))
        return interpolate_metric(series, h)


def build_metric_table(horizons: Sequence[float], sc_ids: Sequence[str],
                       runs_by_cell: Mapping[Tuple[str, float], Sequence[RunResult]],
                       baselines: Mapping[str, float],
                       groups_by_sample: Mapping[Tuple[str, int], str]) -> MetricTable:
    """Aggregate per-cell run sets into the full metric table.

    Collided runs are excluded from the delay averages (no travel time
    exists); comfort pools braking timesteps across every run of a cell.
    """
    horizons = tuple(horizons)
    sc_ids = tuple(sc_ids)
    entries: Dict[Tuple[str, str], np.ndarray] = {}
    delay: Dict[str, np.ndarray] = {}
    delay_by_group: Dict[Tuple[str, str], np.ndarray] = {}
    breakdown: Dict[str, np.ndarray] = {}
    for sc in sc_ids:
        t_b = baselines[sc]
        safety_vals = np.empty(len(horizons))
        comfort_vals = np.empty(len(horizons))
        shares = np.empty((len(horizons), 3))
        mean_delay = np.empty(len(horizons))
        group_delays = {g: np.full(len(horizons), np.nan) for g in ("P1", "P2", "P3")}
        for i, h in enumerate(horizons):
            runs = runs_by_cell[(sc, h)]
            safety_vals[i] = safety_metric(runs)
            bd, comfort_vals[i] = comfort_metric(runs)
            shares[i] = (bd.comfortable, bd.uncomfortable, bd.highly_uncomfortable)
            completed = [r for r in runs if not r.collided]
            if not completed:
                raise ValueError(f"no completed runs in cell ({sc}, {h}); delay undefined")
            delays = [travel_delay(r.travel_time, t_b) for r in completed]
            mean_delay[i] = float(np.mean(delays))
            for g in ("P1", "P2", "P3"):
                vals = [travel_delay(r.travel_time, t_b) for r in completed
                        if groups_by_sample[(sc, r.sample_index)] == g]
                if vals:
                    group_delays[g][i] = float(np.mean(vals))
        entries[(SAFETY, sc)] = safety_vals
        entries[(COMFORT, sc)] = comfort_vals
        eff = efficiency_from_delays(dict(zip(horizons, mean_delay)))
        entries[(EFFICIENCY, sc)] = np.array([eff[h] for h in horizons])
        delay[sc] = mean_delay
        breakdown[sc] = shares
        for g, vals in group_delays.items():
            delay_by_group[(sc, g)] = vals
    return MetricTable(horizons=horizons, sc_ids=sc_ids, entries=entries,
                       delay=delay, delay_by_group=delay_by_group,
                       breakdown=breakdown, baselines=dict(baselines))
