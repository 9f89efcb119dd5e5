"""Required and optimal prediction horizons from metric tables.

Per metric and scenario, the rules are: safety wants the shortest horizon
attaining the best safety value; comfort takes its optimum at the shortest
maximizer of the comfortable share and its requirement at the shortest
minimizer of the highly-uncomfortable share; efficiency takes its optimum at
the shortest maximizer and its requirement at the shortest satisficing
horizon (within 15% of the optimum by default).

Across scenarios and metrics, the overall optimum minimizes the weighted
squared deviation of normalized metric values from their per-scenario optima,
and the overall requirement is the shortest horizon satisfying every weighted
pair's requirement threshold; both are floored by the safety optimum. All
continuous searches run on a dense evaluation grid over the piecewise-linear
interpolants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .metrics import COMFORT, EFFICIENCY, SAFETY, MetricTable

GRID_EPS = 1e-9

NORMALIZATION_GLOBAL = "global"             # one affine map per metric over all scenarios
NORMALIZATION_PER_SCENARIO = "per_scenario"

COMFORT_BASIS_COMFORTABLE = "comfortable"   # literal reading of the requirement-set formula
COMFORT_BASIS_HIGHLY = "highly_uncomfortable"


@dataclass(frozen=True)
class RequirementsConfig:
    """Evaluation-grid and rule switches for the derivation."""

    grid_step: float = 0.01               # s
    satisficing_fraction: float = 0.85    # efficiency requirement: within 15% of optimal
    normalization_scope: str = NORMALIZATION_GLOBAL
    comfort_requirement_basis: str = COMFORT_BASIS_COMFORTABLE

    def __post_init__(self) -> None:
        if self.grid_step <= 0:
            raise ValueError("grid_step must be > 0")
        if not (0 < self.satisficing_fraction <= 1):
            raise ValueError("satisficing_fraction must be in (0, 1]")
        if self.normalization_scope not in (NORMALIZATION_GLOBAL, NORMALIZATION_PER_SCENARIO):
            raise ValueError(f"unknown normalization_scope {self.normalization_scope!r}")
        if self.comfort_requirement_basis not in (COMFORT_BASIS_COMFORTABLE, COMFORT_BASIS_HIGHLY):
            raise ValueError(f"unknown comfort_requirement_basis {self.comfort_requirement_basis!r}")


DEFAULT_REQUIREMENTS_CONFIG = RequirementsConfig()


@dataclass(frozen=True)
class WeightScheme:
    """Per-scenario and per-metric weights for one application (safety unweighted)."""

    name: str
    metric_weights: Mapping[str, float]     # comfort / efficiency
    scenario_weights: Mapping[str, float]   # sc id -> weight

    def __post_init__(self) -> None:
        for m, w in self.metric_weights.items():
            if m == SAFETY:
                raise ValueError("safety is not weighted; it is enforced via the safety floor")
            if m not in (COMFORT, EFFICIENCY):
                raise ValueError(f"unknown metric {m!r}")
            if w < 0:
                raise ValueError(f"metric weight for {m} must be >= 0")
        for s, w in self.scenario_weights.items():
            if w < 0:
                raise ValueError(f"scenario weight for {s} must be >= 0")
        if not any(indicator(ws, wm)
                   for ws in self.scenario_weights.values()
                   for wm in self.metric_weights.values()):
            raise ValueError(
                f"scheme {self.name!r} weights exclude every (scenario, metric) pair"
            )

    def metric_weight(self, metric: str) -> float:
        return float(self.metric_weights.get(metric, 0.0))

    def scenario_weight(self, sc: str) -> float:
        return float(self.scenario_weights.get(sc, 0.0))


@dataclass(frozen=True)
class PerMetricHorizons:
    """Required/optimal horizons of one (metric, scenario) series.

    required <= optimal is not assumed: the comfort requirement (minimum
    highly-uncomfortable share) can exceed its optimum.
    """

    metric: str
    sc: str
    required: Optional[float]
    optimal: float


@dataclass(frozen=True)
class AggregateResult:
    """Overall horizons for one weight scheme plus the per-pair breakdown."""

    scheme: WeightScheme
    required_overall: Optional[float]   # absent when no horizon satisfies every pair
    optimal_overall: float
    per_metric: Tuple[PerMetricHorizons, ...]


def indicator(w_s: float, w_m: float) -> int:
    """1 when both weights are nonzero, else 0 (pair exclusion)."""
    if w_s < 0 or w_m < 0:
        raise ValueError("weights must be >= 0")
    return 0 if (w_s == 0 or w_m == 0) else 1


def make_eval_grid(h_min: float, h_max: float, step: float) -> np.ndarray:
    """Dense horizon grid of multiples of step spanning [h_min, h_max]."""
    i0 = math.ceil(h_min / step - GRID_EPS)
    i1 = math.floor(h_max / step + GRID_EPS)
    if i1 < i0:
        raise ValueError(f"empty grid for range [{h_min}, {h_max}] at step {step}")
    return np.arange(i0, i1 + 1) * step


def _grid_values(table: MetricTable, metric: str, sc: str, grid: np.ndarray) -> np.ndarray:
    return np.interp(grid, table.horizons, table.series(metric, sc))


def _shortest_argmax(values: np.ndarray) -> int:
    return int(np.argmax(values >= values.max() - 1e-12))


def _shortest_argmin(values: np.ndarray) -> int:
    return int(np.argmax(values <= values.min() + 1e-12))


def per_metric_required_optimal(table: MetricTable, metric: str, sc: str,
                                cfg: RequirementsConfig = DEFAULT_REQUIREMENTS_CONFIG
                                ) -> PerMetricHorizons:
    """Apply the per-metric required/optimal rule on the evaluation grid."""
    grid = make_eval_grid(table.horizons[0], table.horizons[-1], cfg.grid_step)
    values = _grid_values(table, metric, sc, grid)
    if metric == SAFETY:
        o = grid[_shortest_argmax(values)]
        return PerMetricHorizons(metric, sc, required=float(o), optimal=float(o))
    if metric == COMFORT:
        o = grid[_shortest_argmax(values)]
        highly = np.interp(grid, table.horizons, table.highly_uncomfortable_series(sc))
        r = grid[_shortest_argmin(highly)]
        return PerMetricHorizons(metric, sc, required=float(r), optimal=float(o))
    if metric == EFFICIENCY:
        o_idx = _shortest_argmax(values)
        threshold = cfg.satisficing_fraction * values[o_idx]
        r_idx = int(np.argmax(values >= threshold - 1e-12))
        return PerMetricHorizons(metric, sc, required=float(grid[r_idx]),
                                 optimal=float(grid[o_idx]))
    raise ValueError(f"unknown metric {metric!r}")


@dataclass(frozen=True)
class NormalizedTable:
    """Per-(metric, sc) series affinely mapped so 0 is worst and 100 is best."""

    horizons: Tuple[float, ...]
    series: Dict[Tuple[str, str], np.ndarray] = field(repr=False)
    optima_h: Dict[Tuple[str, str], float] = field(repr=False)
    optima_value: Dict[Tuple[str, str], float] = field(repr=False)

    def grid_series(self, metric: str, sc: str, grid: np.ndarray) -> np.ndarray:
        return np.interp(grid, self.horizons, self.series[(metric, sc)])

    def value_at(self, metric: str, sc: str, h: float) -> float:
        return float(np.interp(h, self.horizons, self.series[(metric, sc)]))


def normalize(table: MetricTable, S: Sequence[str], M: Sequence[str],
              cfg: RequirementsConfig = DEFAULT_REQUIREMENTS_CONFIG) -> NormalizedTable:
    """Affine per-metric normalization over the pooled scenario series.

    The extrema of a piecewise-linear interpolant are attained at knots, so
    pooling the knot values equals pooling the dense grid. Constant series
    map to 100: a metric that never varies should not penalize any horizon.
    """
    series: Dict[Tuple[str, str], np.ndarray] = {}
    optima_h: Dict[Tuple[str, str], float] = {}
    optima_value: Dict[Tuple[str, str], float] = {}
    for m in M:
        pools: Dict[str, Tuple[float, float]] = {}
        if cfg.normalization_scope == NORMALIZATION_GLOBAL:
            pooled = np.concatenate([table.series(m, s) for s in S])
            lo, hi = float(pooled.min()), float(pooled.max())
            for s in S:
                pools[s] = (lo, hi)
        else:
            for s in S:
                vals = table.series(m, s)
                pools[s] = (float(vals.min()), float(vals.max()))
        for s in S:
            lo, hi = pools[s]
            vals = table.series(m, s)
            if hi - lo <= 0:
                series[(m, s)] = np.full(len(vals), 100.0)
            else:
                series[(m, s)] = 100.0 * (vals - lo) / (hi - lo)
    for m in M:
        for s in S:
            o = per_metric_required_optimal(table, m, s, cfg).optimal
            optima_h[(m, s)] = o
            optima_value[(m, s)] = float(np.interp(o, table.horizons, series[(m, s)]))
    return NormalizedTable(horizons=table.horizons, series=series,
                           optima_h=optima_h, optima_value=optima_value)


def cost_fc(h: float, S: Sequence[str], M: Sequence[str], scheme: WeightScheme,
            ntable: NormalizedTable) -> float:
    """Weighted squared deviation from each pair's optimal normalized value."""
    cost = 0.0
    for s in S:
        w_s = scheme.scenario_weight(s)
        for m in M:
            w_m = scheme.metric_weight(m)
            if not indicator(w_s, w_m):
                continue
            dev = ntable.value_at(m, s, h) - ntable.optima_value[(m, s)]
            cost += w_s * w_m * dev * dev
    return cost


def _contributing(S: Sequence[str], M: Sequence[str],
                  scheme: WeightScheme) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
    S_c = tuple(s for s in S if scheme.scenario_weight(s) > 0)
    M_c = tuple(m for m in M if scheme.metric_weight(m) > 0)
    return S_c, M_c


def _safety_floor(table: MetricTable, S_c: Sequence[str], cfg: RequirementsConfig) -> float:
    """Max over contributing scenarios of the per-scenario safety optimum."""
    if not S_c:
        raise ValueError("no contributing scenarios (all scenario weights zero)")
    return max(per_metric_required_optimal(table, SAFETY, s, cfg).optimal for s in S_c)


def optimal_overall(table: MetricTable, S: Sequence[str], M: Sequence[str],
                    scheme: WeightScheme,
                    cfg: RequirementsConfig = DEFAULT_REQUIREMENTS_CONFIG) -> float:
    """Grid argmin of the aggregation cost, floored by the safety optimum."""
    S_c, M_c = _contributing(S, M, scheme)
    floor = _safety_floor(table, S_c, cfg)
    grid = make_eval_grid(table.horizons[0], table.horizons[-1], cfg.grid_step)
    costs = np.zeros(len(grid))
    if S_c and M_c:
        ntable = normalize(table, S_c, M_c, cfg)
        for s in S_c:
            w_s = scheme.scenario_weight(s)
            for m in M_c:
                w_m = scheme.metric_weight(m)
                dev = ntable.grid_series(m, s, grid) - ntable.optima_value[(m, s)]
                costs += w_s * w_m * dev * dev
    argmin = int(np.argmax(costs <= costs.min() + 1e-12))  # ties toward the shortest
    return float(max(floor, grid[argmin]))


def required_overall(table: MetricTable, S: Sequence[str], M: Sequence[str],
                     scheme: WeightScheme,
                     cfg: RequirementsConfig = DEFAULT_REQUIREMENTS_CONFIG
                     ) -> Optional[float]:
    """Shortest horizon satisfying every contributing pair's requirement, if any.

    A horizon satisfies a pair when the (raw, interpolated) metric value is at
    least the value at that pair's required horizon. Comfort compares on the
    comfortable share by default (literal reading); the config can switch the
    comparison to the highly-uncomfortable share.
    """
    S_c, M_c = _contributing(S, M, scheme)
    floor = _safety_floor(table, S_c, cfg)
    grid = make_eval_grid(table.horizons[0], table.horizons[-1], cfg.grid_step)
    satisfied = np.ones(len(grid), dtype=bool)
    for s in S_c:
        for m in M_c:
            r = per_metric_required_optimal(table, m, s, cfg).required
            if m == COMFORT and cfg.comfort_requirement_basis == COMFORT_BASIS_HIGHLY:
                highly = np.interp(grid, table.horizons, table.highly_uncomfortable_series(s))
                threshold = float(np.interp(r, table.horizons,
                                            table.highly_uncomfortable_series(s)))
                satisfied &= highly <= threshold + 1e-12
            else:
                values = _grid_values(table, m, s, grid)
                threshold = float(np.interp(r, table.horizons, table.series(m, s)))
                satisfied &= values >= threshold - 1e-12
    if not satisfied.any():
        return None
    return float(max(floor, grid[int(np.argmax(satisfied))]))


def derive_application(table: MetricTable, scheme: WeightScheme,
                       cfg: RequirementsConfig = DEFAULT_REQUIREMENTS_CONFIG,
                       S: Optional[Sequence[str]] = None,
                       M: Optional[Sequence[str]] = None) -> AggregateResult:
    """Bundle per-pair horizons with the overall required/optimal pair."""
    S = tuple(S if S is not None else table.sc_ids)
    M = tuple(M if M is not None else (COMFORT, EFFICIENCY))
    S_c, M_c = _contributing(S, M, scheme)
    per_metric = [per_metric_required_optimal(table, SAFETY, s, cfg) for s in S_c]
    per_metric += [per_metric_required_optimal(table, m, s, cfg)
                   for s in S_c for m in M_c]
    return AggregateResult(
        scheme=scheme,
        required_overall=required_overall(table, S, M, scheme, cfg),
        optimal_overall=optimal_overall(table, S, M, scheme, cfg),
        per_metric=tuple(per_metric),
    )
