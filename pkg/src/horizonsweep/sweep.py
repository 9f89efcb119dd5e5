"""Sweep orchestration: one episode per (scenario, horizon, pedestrian sample).

Episodes are independent and deterministic given the configuration and master
seed (the only randomness is the pedestrian speed sampling), so the sweep may
fan out to a worker pool; records are canonicalized by (sc, horizon,
sample_index) regardless of execution order.
"""

from __future__ import annotations

import concurrent.futures
import os
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

from .config import AppConfig
from .episode import baseline_travel_time, run_episode
from .metrics import braking_step_counts
from .planner import PlannerConfig
from .scenario import (
    PedestrianSample,
    ScenarioCategory,
    ScenarioGeometry,
    classify_speed_group,
    sample_pedestrian_speeds,
)
from .simcore import RunResult, SimConfig


@dataclass(frozen=True)
class SweepRecord:
    """One row per episode, the unit persisted to the results CSV."""

    sc: str
    horizon: float
    sample_index: int
    ped_speed: float
    group: str
    collided: bool
    collision_speed: Optional[float]
    travel_time: Optional[float]
    comfort_share: float
    uncomfortable_share: float
    highly_uncomfortable_share: float
    braking_time: float            # s, total braking time of the run
    min_planner_frequency: float   # Hz

    @property
    def key(self) -> Tuple[str, float, int]:
        return (self.sc, self.horizon, self.sample_index)


def record_from_run(run: RunResult, ped: PedestrianSample, group: str,
                    dt_sim: float) -> SweepRecord:
    """Reduce an episode result to its persisted row."""
    comfortable, uncomfortable, highly = braking_step_counts(run)
    total = comfortable + uncomfortable + highly
    if total > 0:
        shares = (100.0 * comfortable / total, 100.0 * uncomfortable / total,
                  100.0 * highly / total)
    else:
        shares = (100.0, 0.0, 0.0)
    return SweepRecord(
        sc=run.sc_id,
        horizon=run.horizon,
        sample_index=ped.sample_index,
        ped_speed=ped.speed,
        group=group,
        collided=run.collided,
        collision_speed=run.collision_speed,
        travel_time=run.travel_time,
        comfort_share=shares[0],
        uncomfortable_share=shares[1],
        highly_uncomfortable_share=shares[2],
        braking_time=total * dt_sim,
        min_planner_frequency=run.min_planner_frequency,
    )


def run_one(sc: ScenarioCategory, geom: ScenarioGeometry, ped: PedestrianSample,
            horizon: float, planner_cfg: PlannerConfig, sim_cfg: SimConfig) -> SweepRecord:
    group = ped.group or classify_speed_group(sc, geom, ped.speed)
    run = run_episode(sc, geom, ped, horizon, planner_cfg, sim_cfg)
    return record_from_run(run, ped, group, sim_cfg.dt_sim)


def _run_one_task(task) -> SweepRecord:
    return run_one(*task)


def sweep_tasks(cfg: AppConfig, skip: Optional[Set[Tuple[str, float, int]]] = None) -> List[tuple]:
    """Build the (sc x horizon x sample) task list, minus already-done keys."""
    samples = sample_pedestrian_speeds(cfg.ped_count, cfg.ped_mean, cfg.ped_std,
                                       cfg.master_seed)
    tasks = []
    for sc in cfg.categories:
        geom = cfg.geometries[sc.id]
        for horizon in cfg.horizons:
            for ped in samples:
                if skip and (sc.id, horizon, ped.sample_index) in skip:
                    continue
                tasks.append((sc, geom, ped, horizon, cfg.planner, cfg.sim))
    return tasks


def run_sweep(cfg: AppConfig, jobs: int = 0,
              existing: Optional[Sequence[SweepRecord]] = None,
              progress: Optional[Callable[[int, int], None]] = None) -> List[SweepRecord]:
    """Execute the sweep; returns all records in canonical order.

    jobs <= 1 runs inline; 0 means one worker per available core. `existing`
    rows (from an interrupted sweep) are kept and their episodes skipped.
    """
    done = {r.key for r in existing} if existing else set()
    tasks = sweep_tasks(cfg, skip=done)
    records: List[SweepRecord] = list(existing) if existing else []
    if jobs == 0:
        jobs = os.cpu_count() or 1
    total = len(tasks)
    if jobs <= 1 or total <= 1:
        for i, task in enumerate(tasks):
            records.append(_run_one_task(task))
            if progress:
                progress(i + 1, total)
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            chunk = max(1, total // (jobs * 8))
            for i, record in enumerate(pool.map(_run_one_task, tasks, chunksize=chunk)):
                records.append(record)
                if progress:
                    progress(i + 1, total)
    records.sort(key=lambda r: (r.sc, r.horizon, r.sample_index))
    return records


def compute_baselines(cfg: AppConfig) -> Dict[str, float]:
    """Pedestrian-free travel time per scenario category."""
    return {
        sc.id: baseline_travel_time(sc, cfg.geometries[sc.id], cfg.planner, cfg.sim)
        for sc in cfg.categories
    }
