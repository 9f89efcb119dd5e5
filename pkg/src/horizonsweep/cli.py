"""Command-line pipeline: sweep -> metrics -> derive.

`sweep` runs every (scenario x horizon x pedestrian) episode and writes the
per-run results CSV plus a manifest; `metrics` aggregates the results into
metric-table CSVs (and figures); `derive` computes required/optimal horizons
per weight scheme into a text report, a JSON twin, and a figure. The
HORIZONSWEEP_OUT environment variable overrides output locations. Exit code 0
on success, nonzero with a diagnostic on any error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path
from typing import List, Optional, Tuple

from .config import (
    AppConfig,
    ConfigError,
    TOOL_VERSION,
    config_hash,
    load_config,
    parse_config,
)
from .metrics import COMFORT, EFFICIENCY
from .reporting import (
    MANIFEST_FILE,
    PipelineError,
    RESULTS_FILE,
    check_completeness,
    derived_json,
    frequency_stats,
    read_metric_tables,
    read_results,
    render_report,
    table_from_records,
    verify_sweep_manifest,
    write_metric_tables,
    write_results,
)
from .requirements import RequirementsConfig, WeightScheme, derive_application
from .simcore import EpisodeDeadlockError
from .sweep import compute_baselines, run_sweep

OUT_ENV_VAR = "HORIZONSWEEP_OUT"


def _out_dir(requested: str) -> Path:
    override = os.environ.get(OUT_ENV_VAR)
    return Path(override) if override else Path(requested)


def _out_file(requested: str) -> Path:
    override = os.environ.get(OUT_ENV_VAR)
    path = Path(requested)
    return Path(override) / path.name if override else path


def _progress_printer(label: str, total: int):
    marks = {max(1, int(total * f / 20)) for f in range(1, 21)}

    def report(done: int, _total: int) -> None:
        if done in marks:
            print(f"{label}: {done}/{total} episodes", file=sys.stderr)

    return report


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    out_dir = _out_dir(args.out)
    results_path = out_dir / RESULTS_FILE
    existing = None
    if args.resume and results_path.exists():
        manifest = verify_sweep_manifest(results_path)
        if manifest.get("config_hash") != config_hash(cfg):
            raise PipelineError(
                "cannot resume: existing results were produced by a different config"
            )
        existing = read_results(results_path)
        print(f"resuming: {len(existing)} rows already complete", file=sys.stderr)
    n_total = len(cfg.sc_ids) * len(cfg.horizons) * cfg.ped_count
    t0 = time.perf_counter()
    records = run_sweep(cfg, jobs=args.jobs, existing=existing,
                        progress=_progress_printer("sweep", n_total - len(existing or [])))
    baselines = compute_baselines(cfg)
    write_results(out_dir, records, cfg, baselines)
    elapsed = time.perf_counter() - t0
    print(f"wrote {len(records)} rows to {results_path} in {elapsed:.1f}s",
          file=sys.stderr)
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    results_path = Path(args.results)
    manifest = verify_sweep_manifest(results_path)
    records = read_results(results_path)
    if not records:
        raise PipelineError(f"results file {results_path} is empty")
    check_completeness(records, manifest)
    horizons = [float(h) for h in manifest["horizons_s"]]
    sc_ids = list(manifest["sc_ids"])
    table = table_from_records(records, horizons, sc_ids, manifest["baselines_s"])
    freq = frequency_stats(records, horizons, sc_ids)
    out_dir = _out_dir(args.out)
    write_metric_tables(out_dir, table, freq, results_path, manifest)
    if not args.no_plots:
        from .plots import render_metrics_figures
        render_metrics_figures(out_dir, records, table, freq)
    print(f"wrote metric tables to {out_dir}", file=sys.stderr)
    return 0


def _load_schemes(path: Path, sc_ids: Tuple[str, ...]
                  ) -> Tuple[List[WeightScheme], RequirementsConfig]:
    """Weight schemes + requirements switches from a config or standalone file."""
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"weights file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"weights file {path} is not valid JSON: {e}") from None
    if "scenarios" not in data:
        # standalone weights file: validate scheme scenario ids against the table
        data = {**data, "scenarios": [
            {"id": sc, "ego_ref_speed_kmh": 30.0} for sc in sc_ids
        ]}
    cfg = parse_config(data)
    for scheme in cfg.schemes:
        for sc in scheme.scenario_weights:
            if sc not in sc_ids:
                raise ConfigError(
                    f"weight scheme {scheme.name!r} references scenario {sc!r} "
                    f"not present in the metric table {sorted(sc_ids)}"
                )
    if not cfg.schemes:
        raise ConfigError("weights file defines no weight_schemes")
    return list(cfg.schemes), cfg.requirements


def cmd_derive(args: argparse.Namespace) -> int:
    table, _manifest = read_metric_tables(Path(args.metrics))
    schemes, req_cfg = _load_schemes(Path(args.weights), table.sc_ids)
    results = [derive_application(table, scheme, req_cfg,
                                  S=table.sc_ids, M=(COMFORT, EFFICIENCY))
               for scheme in schemes]
    out_path = _out_file(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(render_report(table, results, req_cfg))
    json_path = out_path.with_suffix(".json")
    json_path.write_text(json.dumps(derived_json(table, results, req_cfg),
                                    indent=2, sort_keys=True) + "\n")
    if not args.no_plots:
        from .plots import plot_derived_horizons
        plot_derived_horizons(results, out_path.with_suffix(".png"))
    print(f"wrote report to {out_path}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="horizonsweep",
        description="Crossing-pedestrian sweeps and prediction-horizon requirements",
    )
    parser.add_argument("--version", action="version", version=TOOL_VERSION)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run all episodes and write results.csv")
    p_sweep.add_argument("--config", required=True, help="JSON configuration file")
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--jobs", type=int, default=0,
                         help="worker processes (0 = one per core, 1 = inline)")
    p_sweep.add_argument("--resume", action="store_true",
                         help="keep completed rows from an interrupted sweep")
    p_sweep.set_defaults(func=cmd_sweep)

    p_metrics = sub.add_parser("metrics", help="aggregate results into metric tables")
    p_metrics.add_argument("--results", required=True, help="results.csv from sweep")
    p_metrics.add_argument("--out", required=True, help="output directory")
    p_metrics.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p_metrics.set_defaults(func=cmd_metrics)

    p_derive = sub.add_parser("derive", help="derive required/optimal horizons")
    p_derive.add_argument("--metrics", required=True, help="metrics output directory")
    p_derive.add_argument("--weights", required=True,
                          help="config or standalone weight-schemes JSON file")
    p_derive.add_argument("--out", required=True, help="report file to write")
    p_derive.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p_derive.set_defaults(func=cmd_derive)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PipelineError, EpisodeDeadlockError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
