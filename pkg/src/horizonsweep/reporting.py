"""Persistence and reports: results CSV, manifests, metric tables, derivation.

All tabular outputs are UTF-8 CSV with a header row, '.' decimal separator,
and a fixed column order, so reruns diff bit-exactly. Floats are written in
shortest round-trip form. Manifests carry content hashes so downstream stages
can refuse mismatched inputs.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .config import AppConfig, TOOL_VERSION, config_hash
from .metrics import (
    COMFORT,
    EFFICIENCY,
    SAFETY,
    MetricTable,
    comfort_breakdown_from_times,
    efficiency_from_delays,
    travel_delay,
)
from .requirements import (
    AggregateResult,
    RequirementsConfig,
    WeightScheme,
    derive_application,
    per_metric_required_optimal,
)
from .sweep import SweepRecord

RESULTS_FILE = "results.csv"
MANIFEST_FILE = "manifest.json"
METRICS_MANIFEST_FILE = "metrics_manifest.json"

RESULTS_COLUMNS = (
    "sc", "horizon", "sample_index", "ped_speed", "group", "collided",
    "collision_speed", "travel_time", "comfort_share", "uncomfortable_share",
    "highly_uncomfortable_share", "braking_time", "min_planner_frequency",
)

PED_GROUPS = ("P1", "P2", "P3")


class PipelineError(RuntimeError):
    """Input files missing, incomplete, or inconsistent with their manifest."""


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float) and math.isnan(value):
        return ""
    return str(value)


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ------------------------------- sweep stage -------------------------------


def write_results(out_dir: Path, records: Sequence[SweepRecord], cfg: AppConfig,
                  baselines: Mapping[str, float]) -> Path:
    """Write results.csv, a copy of the effective config, and the manifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / RESULTS_FILE
    with results_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_COLUMNS)
        for r in records:
            writer.writerow([
                r.sc, _fmt(r.horizon), r.sample_index, _fmt(r.ped_speed), r.group,
                _fmt(r.collided), _fmt(r.collision_speed), _fmt(r.travel_time),
                _fmt(r.comfort_share), _fmt(r.uncomfortable_share),
                _fmt(r.highly_uncomfortable_share), _fmt(r.braking_time),
                _fmt(r.min_planner_frequency),
            ])
    (out_dir / "config.json").write_text(json.dumps(cfg.raw, indent=2, sort_keys=True) + "\n")
    manifest = {
        "tool_version": TOOL_VERSION,
        "config_hash": config_hash(cfg),
        "master_seed": cfg.master_seed,
        "n_rows": len(records),
        "sc_ids": list(cfg.sc_ids),
        "horizons_s": list(cfg.horizons),
        "pedestrian_count": cfg.ped_count,
        "baselines_s": dict(baselines),
        "results_sha256": sha256_file(results_path),
    }
    (out_dir / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return results_path


def read_results(results_path: Path) -> List[SweepRecord]:
    if not results_path.exists():
        raise PipelineError(f"results file not found: {results_path}")
    records = []
    with results_path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(RESULTS_COLUMNS):
            raise PipelineError(
                f"unexpected results columns in {results_path}: {reader.fieldnames}"
            )
        for row in reader:
            records.append(SweepRecord(
                sc=row["sc"],
                horizon=float(row["horizon"]),
                sample_index=int(row["sample_index"]),
                ped_speed=float(row["ped_speed"]),
                group=row["group"],
                collided=row["collided"] == "true",
                collision_speed=float(row["collision_speed"]) if row["collision_speed"] else None,
                travel_time=float(row["travel_time"]) if row["travel_time"] else None,
                comfort_share=float(row["comfort_share"]),
                uncomfortable_share=float(row["uncomfortable_share"]),
                highly_uncomfortable_share=float(row["highly_uncomfortable_share"]),
                braking_time=float(row["braking_time"]),
                min_planner_frequency=float(row["min_planner_frequency"]),
            ))
    return records


def read_manifest(results_path: Path) -> dict:
    manifest_path = results_path.parent / MANIFEST_FILE
    if not manifest_path.exists():
        raise PipelineError(f"manifest not found next to results: {manifest_path}")
    return json.loads(manifest_path.read_text())


def verify_sweep_manifest(results_path: Path) -> dict:
    """Check the results file and stored config against the manifest hashes."""
    manifest = read_manifest(results_path)
    actual = sha256_file(results_path)
    if actual != manifest.get("results_sha256"):
        raise PipelineError(
            f"results file {results_path} does not match its manifest hash "
            f"(expected {manifest.get('results_sha256')}, got {actual})"
        )
    config_path = results_path.parent / "config.json"
    if config_path.exists():
        from .config import parse_config
        stored = parse_config(json.loads(config_path.read_text()))
        if config_hash(stored) != manifest.get("config_hash"):
            raise PipelineError(
                f"stored config {config_path} does not match the manifest config hash"
            )
    return manifest


# ------------------------------ metrics stage ------------------------------


def check_completeness(records: Sequence[SweepRecord], manifest: dict) -> None:
    expected = {
        (sc, float(h), i)
        for sc in manifest["sc_ids"]
        for h in manifest["horizons_s"]
        for i in range(manifest["pedestrian_count"])
    }
    got = {r.key for r in records}
    missing = expected - got
    if missing:
        cells = sorted({(sc, h) for sc, h, _ in missing})
        raise PipelineError(
            f"results incomplete: {len(missing)} episodes missing from "
            f"{len(cells)} cells; absent (sc, horizon) pairs: {cells[:20]}"
        )


def table_from_records(records: Sequence[SweepRecord], horizons: Sequence[float],
                       sc_ids: Sequence[str],
                       baselines: Mapping[str, float]) -> MetricTable:
    """Rebuild the metric table from persisted rows.

    Pooled comfort uses share x braking_time per run, which reproduces the
    timestep pooling of the in-memory metric. Collided runs contribute no
    travel time and are excluded from the delay means.
    """
    by_cell: Dict[Tuple[str, float], List[SweepRecord]] = {}
    for r in records:
        by_cell.setdefault((r.sc, r.horizon), []).append(r)

    horizons = tuple(float(h) for h in horizons)
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
        group_delay = {g: np.full(len(horizons), np.nan) for g in PED_GROUPS}
        for i, h in enumerate(horizons):
            rows = by_cell.get((sc, h))
            if not rows:
                raise PipelineError(f"no rows for cell ({sc}, {h})")
            safety_vals[i] = 100.0 * sum(1 for r in rows if not r.collided) / len(rows)
            pooled = [0.0, 0.0, 0.0]
            for r in rows:
                pooled[0] += r.comfort_share / 100.0 * r.braking_time
                pooled[1] += r.uncomfortable_share / 100.0 * r.braking_time
                pooled[2] += r.highly_uncomfortable_share / 100.0 * r.braking_time
            bd = comfort_breakdown_from_times(*pooled)
            comfort_vals[i] = bd.comfortable
            shares[i] = (bd.comfortable, bd.uncomfortable, bd.highly_uncomfortable)
            completed = [r for r in rows if not r.collided]
            if not completed:
                raise PipelineError(f"every run collided in cell ({sc}, {h}); delay undefined")
            mean_delay[i] = float(np.mean([travel_delay(r.travel_time, t_b) for r in completed]))
            for g in PED_GROUPS:
                vals = [travel_delay(r.travel_time, t_b) for r in completed if r.group == g]
                if vals:
                    group_delay[g][i] = float(np.mean(vals))
        entries[(SAFETY, sc)] = safety_vals
        entries[(COMFORT, sc)] = comfort_vals
        eff = efficiency_from_delays(dict(zip(horizons, mean_delay)))
        entries[(EFFICIENCY, sc)] = np.array([eff[h] for h in horizons])
        delay[sc] = mean_delay
        breakdown[sc] = shares
        for g in PED_GROUPS:
            delay_by_group[(sc, g)] = group_delay[g]
    return MetricTable(horizons=horizons, sc_ids=tuple(sc_ids), entries=entries,
                       delay=delay, delay_by_group=delay_by_group,
                       breakdown=breakdown, baselines=dict(baselines))


def frequency_stats(records: Sequence[SweepRecord], horizons: Sequence[float],
                    sc_ids: Sequence[str]) -> Dict[Tuple[str, float], Tuple[float, float]]:
    """(mean, std) of per-run minimum planner frequency per cell."""
    stats = {}
    by_cell: Dict[Tuple[str, float], List[float]] = {}
    for r in records:
        by_cell.setdefault((r.sc, r.horizon), []).append(r.min_planner_frequency)
    for sc in sc_ids:
        for h in horizons:
            vals = np.array(by_cell.get((sc, float(h)), []))
            if len(vals):
                stats[(sc, float(h))] = (float(vals.mean()), float(vals.std()))
    return stats


def write_metric_tables(out_dir: Path, table: MetricTable,
                        freq: Mapping[Tuple[str, float], Tuple[float, float]],
                        results_path: Path, manifest: dict) -> None:
    """Emit metric-table, delay-curve, breakdown, frequency, and baseline CSVs."""
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "metric_table.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "sc", "horizon", "value"])
        for metric in (SAFETY, COMFORT, EFFICIENCY):
            for sc in table.sc_ids:
                for h, v in zip(table.horizons, table.series(metric, sc)):
                    writer.writerow([metric, sc, _fmt(h), _fmt(float(v))])
    with (out_dir / "delay_curves.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sc", "group", "horizon", "mean_delay_percent"])
        for sc in table.sc_ids:
            for group in ("all",) + PED_GROUPS:
                series = table.delay[sc] if group == "all" else table.delay_by_group[(sc, group)]
                for h, v in zip(table.horizons, series):
                    writer.writerow([sc, group, _fmt(h), _fmt(float(v))])
    with (out_dir / "comfort_breakdown.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sc", "horizon", "comfortable", "uncomfortable",
                         "highly_uncomfortable"])
        for sc in table.sc_ids:
            for h, row in zip(table.horizons, table.breakdown[sc]):
                writer.writerow([sc, _fmt(h)] + [_fmt(float(v)) for v in row])
    with (out_dir / "frequency.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sc", "horizon", "mean_min_frequency_hz", "std_min_frequency_hz"])
        for sc in table.sc_ids:
            for h in table.horizons:
                if (sc, h) in freq:
                    mean, std = freq[(sc, h)]
                    writer.writerow([sc, _fmt(h), _fmt(mean), _fmt(std)])
    with (out_dir / "baselines.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sc", "baseline_travel_time_s"])
        for sc in table.sc_ids:
            writer.writerow([sc, _fmt(table.baselines[sc])])
    metrics_manifest = {
        "tool_version": TOOL_VERSION,
        "config_hash": manifest.get("config_hash"),
        "results_sha256": sha256_file(results_path),
        "sc_ids": list(table.sc_ids),
        "horizons_s": list(table.horizons),
        "metric_table_sha256": sha256_file(out_dir / "metric_table.csv"),
    }
    (out_dir / METRICS_MANIFEST_FILE).write_text(
        json.dumps(metrics_manifest, indent=2, sort_keys=True) + "\n")


def read_metric_tables(metrics_dir: Path) -> Tuple[MetricTable, dict]:
    """Load the metric table files back; verifies the metrics manifest hash."""
    manifest_path = metrics_dir / METRICS_MANIFEST_FILE
    if not manifest_path.exists():
        raise PipelineError(f"metrics manifest not found: {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    table_path = metrics_dir / "metric_table.csv"
    if not table_path.exists():
        raise PipelineError(f"metric table not found: {table_path}")
    actual = sha256_file(table_path)
    if actual != manifest.get("metric_table_sha256"):
        raise PipelineError(
            f"metric table {table_path} does not match its manifest hash"
        )
    sc_ids = tuple(manifest["sc_ids"])
    horizons = tuple(float(h) for h in manifest["horizons_s"])
    idx = {h: i for i, h in enumerate(horizons)}
    entries = {
        (m, sc): np.full(len(horizons), np.nan)
        for m in (SAFETY, COMFORT, EFFICIENCY) for sc in sc_ids
    }
    with table_path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            entries[(row["metric"], row["sc"])][idx[float(row["horizon"])]] = float(row["value"])
    for key, vals in entries.items():
        if np.isnan(vals).any():
            raise PipelineError(f"metric table incomplete for {key}")
    breakdown = {sc: np.full((len(horizons), 3), np.nan) for sc in sc_ids}
    with (metrics_dir / "comfort_breakdown.csv").open(newline="") as fh:
        for row in csv.DictReader(fh):
            breakdown[row["sc"]][idx[float(row["horizon"])]] = (
                float(row["comfortable"]), float(row["uncomfortable"]),
                float(row["highly_uncomfortable"]))
    delay = {sc: np.full(len(horizons), np.nan) for sc in sc_ids}
    delay_by_group = {(sc, g): np.full(len(horizons), np.nan)
                      for sc in sc_ids for g in PED_GROUPS}
    with (metrics_dir / "delay_curves.csv").open(newline="") as fh:
        for row in csv.DictReader(fh):
            value = float(row["mean_delay_percent"]) if row["mean_delay_percent"] else np.nan
            if row["group"] == "all":
                delay[row["sc"]][idx[float(row["horizon"])]] = value
            else:
                delay_by_group[(row["sc"], row["group"])][idx[float(row["horizon"])]] = value
    baselines = {}
    with (metrics_dir / "baselines.csv").open(newline="") as fh:
        for row in csv.DictReader(fh):
            baselines[row["sc"]] = float(row["baseline_travel_time_s"])
    table = MetricTable(horizons=horizons, sc_ids=sc_ids, entries=entries,
                        delay=delay, delay_by_group=delay_by_group,
                        breakdown=breakdown, baselines=baselines)
    return table, manifest


# ------------------------------- derive stage -------------------------------


def _fmt_h(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.2f}"


def _aggregate(table: MetricTable, scope: Sequence[str], weights: Dict[str, float],
               cfg: RequirementsConfig) -> Tuple[Optional[float], float]:
    scheme = WeightScheme(name="overview", metric_weights=weights,
                          scenario_weights={s: 1.0 for s in scope})
    result = derive_application(table, scheme, cfg, S=scope)
    return result.required_overall, result.optimal_overall


def overview_results(table: MetricTable, cfg: RequirementsConfig
                     ) -> Dict[str, Dict[str, Tuple[Optional[float], float]]]:
    """Per-SC and pooled rows of required/optimal horizons per metric + overall.

    Per-SC rows show the per-metric rule values directly. The pooled row and
    every "overall" column aggregate with equal weights (single-metric schemes
    for the pooled metric columns), safety floor applied throughout.
    """
    rows: Dict[str, Dict[str, Tuple[Optional[float], float]]] = {}
    for sc in table.sc_ids:
        row: Dict[str, Tuple[Optional[float], float]] = {}
        for metric in (SAFETY, COMFORT, EFFICIENCY):
            per = per_metric_required_optimal(table, metric, sc, cfg)
            row[metric] = (per.required, per.optimal)
        row["overall"] = _aggregate(table, (sc,), {COMFORT: 1.0, EFFICIENCY: 1.0}, cfg)
        rows[sc] = row

    pooled: Dict[str, Tuple[Optional[float], float]] = {}
    safety_opt = max(per_metric_required_optimal(table, SAFETY, s, cfg).optimal
                     for s in table.sc_ids)
    pooled[SAFETY] = (safety_opt, safety_opt)
    pooled[COMFORT] = _aggregate(table, table.sc_ids, {COMFORT: 1.0}, cfg)
    pooled[EFFICIENCY] = _aggregate(table, table.sc_ids, {EFFICIENCY: 1.0}, cfg)
    pooled["overall"] = _aggregate(table, table.sc_ids, {COMFORT: 1.0, EFFICIENCY: 1.0}, cfg)
    rows["Overall"] = pooled
    return rows


def render_report(table: MetricTable,
                  results: Sequence[AggregateResult],
                  cfg: RequirementsConfig) -> str:
    """Human-readable report: per-SC/metric overview plus per-application table."""
    lines = []
    lines.append("Required and optimal prediction horizons (seconds)")
    lines.append("")
    lines.append("Per scenario and metric ('-' = no satisfying horizon exists):")
    header = f"{'':10s}" + "".join(f"{m:>16s}" for m in ("safety", "comfort", "efficiency", "overall"))
    sub = f"{'':10s}" + "".join(f"{'r':>8s}{'o':>8s}" for _ in range(4))
    lines.append(header)
    lines.append(sub)
    for label, row in overview_results(table, cfg).items():
        cells = ""
        for metric in (SAFETY, COMFORT, EFFICIENCY, "overall"):
            r, o = row[metric]
            cells += f"{_fmt_h(r):>8s}{_fmt_h(o):>8s}"
        lines.append(f"{label:10s}" + cells)
    lines.append("")
    lines.append("Per application:")
    name_width = max([len(res.scheme.name) for res in results] + [12])
    lines.append(f"{'application':{name_width}s}{'r':>8s}{'o':>8s}")
    for res in results:
        lines.append(
            f"{res.scheme.name:{name_width}s}"
            f"{_fmt_h(res.required_overall):>8s}{_fmt_h(res.optimal_overall):>8s}"
        )
    lines.append("")
    return "\n".join(lines)


def derived_json(table: MetricTable, results: Sequence[AggregateResult],
                 cfg: RequirementsConfig) -> dict:
    def pair(r: Optional[float], o: float) -> dict:
        return {"required_s": r, "optimal_s": o}

    overview = {
        label: {metric: pair(*vals) for metric, vals in row.items()}
        for label, row in overview_results(table, cfg).items()
    }
    applications = []
    for res in results:
        applications.append({
            "name": res.scheme.name,
            "metric_weights": dict(res.scheme.metric_weights),
            "scenario_weights": dict(res.scheme.scenario_weights),
            "required_s": res.required_overall,
            "optimal_s": res.optimal_overall,
            "per_metric": [
                {"metric": p.metric, "sc": p.sc, "required_s": p.required,
                 "optimal_s": p.optimal}
                for p in res.per_metric
            ],
        })
    return {"overview": overview, "applications": applications}
