"""Figure rendering for sweep results, metric curves, and derived horizons.

Figures are written as PNG next to the delimited outputs. They mirror the
tabular data: a collision map over (horizon, pedestrian speed), comfort-share
curves, travel-delay curves per speed group, planner-frequency curves, and a
per-application horizon chart.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import MetricTable
from .reporting import PED_GROUPS
from .requirements import AggregateResult
from .sweep import SweepRecord

DPI = 130
SAVEFIG_KWARGS = {"dpi": DPI, "metadata": {"Software": None}}  # keep bytes stable

GROUP_COLORS = {"P1": "tab:orange", "P2": "tab:red", "P3": "tab:green", "all": "tab:blue"}
SHARE_COLORS = {"comfortable": "tab:green", "uncomfortable": "tab:orange",
                "highly_uncomfortable": "tab:red"}


def plot_safety_map(records: Sequence[SweepRecord], sc_ids: Sequence[str],
                    out_path: Path) -> Path:
    """Collision map: x marks collisions (colored by impact speed), dots clear runs."""
    fig, axes = plt.subplots(1, len(sc_ids), figsize=(4.2 * len(sc_ids), 3.6),
                             sharey=True, squeeze=False)
    for ax, sc in zip(axes[0], sc_ids):
        rows = [r for r in records if r.sc == sc]
        clear = [(r.horizon, r.ped_speed) for r in rows if not r.collided]
        hit = [(r.horizon, r.ped_speed, r.collision_speed) for r in rows if r.collided]
        if clear:
            hs, vs = zip(*clear)
            ax.plot(hs, vs, ".", color="tab:blue", markersize=3, label="no collision")
        if hit:
            hs, vs, speeds = zip(*hit)
            sc_plot = ax.scatter(hs, vs, c=speeds, cmap="plasma", marker="x", s=24,
                                 label="collision")
            fig.colorbar(sc_plot, ax=ax, label="impact speed [m/s]")
        ax.set_title(sc)
        ax.set_xlabel("prediction horizon [s]")
        ax.grid(alpha=0.3)
    axes[0][0].set_ylabel("pedestrian speed [m/s]")
    fig.tight_layout()
    fig.savefig(out_path, **SAVEFIG_KWARGS)
    plt.close(fig)
    return out_path


def plot_comfort_shares(table: MetricTable, out_path: Path) -> Path:
    fig, axes = plt.subplots(1, len(table.sc_ids), figsize=(4.2 * len(table.sc_ids), 3.6),
                             sharey=True, squeeze=False)
    for ax, sc in zip(axes[0], table.sc_ids):
        shares = table.breakdown[sc]
        for i, name in enumerate(("comfortable", "uncomfortable", "highly_uncomfortable")):
            ax.plot(table.horizons, shares[:, i], marker=".",
                    color=SHARE_COLORS[name], label=name.replace("_", " "))
        ax.set_title(sc)
        ax.set_xlabel("prediction horizon [s]")
        ax.grid(alpha=0.3)
    axes[0][0].set_ylabel("share of braking time [%]")
    axes[0][-1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, **SAVEFIG_KWARGS)
    plt.close(fig)
    return out_path


def plot_delay_curves(table: MetricTable, out_path: Path) -> Path:
    fig, axes = plt.subplots(1, len(table.sc_ids), figsize=(4.2 * len(table.sc_ids), 3.6),
                             sharey=True, squeeze=False)
    for ax, sc in zip(axes[0], table.sc_ids):
        for group in PED_GROUPS + ("all",):
            series = (table.delay[sc] if group == "all"
                      else table.delay_by_group[(sc, group)])
            ax.plot(table.horizons, series, marker=".", color=GROUP_COLORS[group],
                    label=group)
        ax.set_title(sc)
        ax.set_xlabel("prediction horizon [s]")
        ax.grid(alpha=0.3)
    axes[0][0].set_ylabel("mean travel delay [%]")
    axes[0][-1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, **SAVEFIG_KWARGS)
    plt.close(fig)
    return out_path


def plot_frequency(freq: Mapping[Tuple[str, float], Tuple[float, float]],
                   horizons: Sequence[float], sc_ids: Sequence[str],
                   out_path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    for sc in sc_ids:
        hs = [h for h in horizons if (sc, h) in freq]
        means = np.array([freq[(sc, h)][0] for h in hs])
        stds = np.array([freq[(sc, h)][1] for h in hs])
        ax.errorbar(hs, means, yerr=stds, marker=".", capsize=2, label=sc)
    ax.set_xlabel("prediction horizon [s]")
    ax.set_ylabel("min planner frequency [Hz]")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, **SAVEFIG_KWARGS)
    plt.close(fig)
    return out_path


def plot_derived_horizons(results: Sequence[AggregateResult], out_path: Path) -> Path:
    """Required/optimal horizons per application; missing requirements marked."""
    fig, ax = plt.subplots(figsize=(6.4, 0.9 * len(results) + 1.6))
    ys = np.arange(len(results))[::-1]
    for y, res in zip(ys, results):
        ax.plot([res.optimal_overall], [y], "o", color="tab:blue",
                label="optimal" if y == ys[0] else None)
        if res.required_overall is not None:
            ax.plot([res.required_overall], [y], "s", color="tab:red",
                    label="required" if y == ys[0] else None)
            ax.plot([res.required_overall, res.optimal_overall], [y, y],
                    color="gray", lw=1, alpha=0.6)
        else:
            ax.annotate("no satisfying horizon", (res.optimal_overall, y),
                        textcoords="offset points", xytext=(8, -3), fontsize=7,
                        color="tab:red")
    ax.set_yticks(ys)
    ax.set_yticklabels([res.scheme.name for res in results], fontsize=8)
    ax.set_xlabel("prediction horizon [s]")
    ax.grid(alpha=0.3, axis="x")
    ax.legend(fontsize=8, loc="lower right")
    fig.tight_layout()
    fig.savefig(out_path, **SAVEFIG_KWARGS)
    plt.close(fig)
    return out_path


def render_metrics_figures(out_dir: Path, records: Sequence[SweepRecord],
                           table: MetricTable,
                           freq: Mapping[Tuple[str, float], Tuple[float, float]]
                           ) -> List[Path]:
    return [
        plot_safety_map(records, table.sc_ids, out_dir / "safety_map.png"),
        plot_comfort_shares(table, out_dir / "comfort_shares.png"),
        plot_delay_curves(table, out_dir / "delay_curves.png"),
        plot_frequency(freq, table.horizons, table.sc_ids, out_dir / "frequency.png"),
    ]
