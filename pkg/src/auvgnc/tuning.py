"""Covariance auto-tuning: objective evaluation and optimizer drivers.

Five log10 multipliers scale designated process/measurement noise blocks
of the selected filter. A candidate is scored over three fixed-seed
trajectory episodes (spiral, zigzag, lawnmower) with a 30 s USBL outage:
open-loop mode scores estimation accuracy with the GNC driven by ground
truth, closed-loop mode scores the maximum path-tracking deviation with
the GNC driven by the filter itself. Episodes that crash the filter or
miss the goal within the time budget yield no objective value at all and
are handled by the optimizers as crash constraints.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bayesopt import bo_minimize
from .config import TUNING_SEEDS, ScenarioConfig, desk_scale_config
from .episode import RunMetrics, run_episode
from .opt_base import OptResult
from .pso import pso_minimize

TUNING_DIM = 5
TUNING_BOUNDS = (-3.0, 3.0)  # log10 multipliers
EULER_RMS_MAX_DEG = 3.0  # feasibility threshold on attitude accuracy
TRAJECTORIES = ("spiral", "zigzag", "lawnmower")


@dataclass
class TuningVector:
    """Five log10 multipliers on the filter's designated noise blocks."""

    a: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        if self.a.shape != (TUNING_DIM,):
            raise ValueError("tuning vector must have 5 entries")
        if np.any(self.a < TUNING_BOUNDS[0]) or np.any(self.a > TUNING_BOUNDS[1]):
            raise ValueError("tuning vector outside the search box")

    @staticmethod
    def nominal() -> "TuningVector":
        return TuningVector(np.zeros(TUNING_DIM))


@dataclass
class EvalResult:
    """Aggregated objective of one candidate; crashed runs carry no values."""

    J: float | None
    g: float | None
    crashed: bool
    per_trajectory: dict = field(default_factory=dict)


def tuning_episode_config(
    trajectory: str,
    filter_kind: str,
    mode: str,
    a: np.ndarray | None,
    outage_duration: float = 30.0,
    outage_fraction: float = 0.4,
) -> ScenarioConfig:
    """One of the three fixed-seed episodes of the tuning objective."""
    from .trajectories import build_trajectory, path_length

    cfg = desk_scale_config(trajectory, filter_kind=filter_kind, mode=mode, tuning=a)
    seeds = TUNING_SEEDS[trajectory]
    cfg = cfg.with_updates(seed_sensor=seeds[0], seed_current=seeds[1], seed_mismatch=seeds[2])
    if outage_duration > 0:
        wps = build_trajectory(trajectory, cfg.trajectory_params, cfg.start, cfg.surge_ref)
        start = outage_fraction * path_length(wps) / cfg.surge_ref
        cfg = cfg.with_updates(outages=[(start, outage_duration)])
    return cfg


def evaluate_candidate(
    a: np.ndarray | None,
    filter_kind: str,
    mode: str,
    outage_duration: float = 30.0,
) -> EvalResult:
    """Score one tuning vector over the three fixed-seed trajectories.

    The objective aggregates by mean: RMS position error in open loop,
    maximum tracking deviation in closed loop. A crash on any trajectory
    (filter breakdown or goal missed within the time budget) makes the
    whole evaluation a crash observation.
    """
    per = {}
    Js, gs = [], []
    for traj in TRAJECTORIES:
        cfg = tuning_episode_config(traj, filter_kind, mode, a, outage_duration)
        metrics, _ = run_episode(cfg, record=True)
        per[traj] = metrics
        if metrics.crash or not metrics.goal_reached:
            return EvalResult(J=None, g=None, crashed=True, per_trajectory=per)
        Js.append(metrics.rms_pos_err if mode == "ol" else metrics.max_tracking_err)
        gs.append(metrics.rms_euler_err)
    return EvalResult(
        J=float(np.mean(Js)), g=float(np.mean(gs)), crashed=False, per_trajectory=per
    )


def tune_filter(
    filter_kind: str,
    mode: str,
    optimizer: str = "bo",
    budget: int = 60,
    seed: int = 0,
    outage_duration: float = 30.0,
    include_nominal: bool = True,
    progress=None,
) -> OptResult:
    """Run one budgeted optimization of the five tuning parameters.

    The nominal vector (all multipliers one) seeds the initial design so
    the returned best never regresses below the default parametrization
    when that default is feasible.
    """
    if optimizer not in ("bo", "pso"):
        raise ValueError(f"unknown optimizer {optimizer!r}")
    count = [0]

    def objective(x):
        count[0] += 1
        res = evaluate_candidate(x, filter_kind, mode, outage_duration)
        if progress is not None:
            progress(count[0], x, res)
        return res

    if optimizer == "bo":
        return bo_minimize(
            objective,
            dim=TUNING_DIM,
            budget=budget,
            seed=seed,
            lower=TUNING_BOUNDS[0],
            upper=TUNING_BOUNDS[1],
            g_max=EULER_RMS_MAX_DEG,
            x0=np.zeros(TUNING_DIM) if include_nominal else None,
        )
    return pso_minimize(
        objective,
        dim=TUNING_DIM,
        budget=budget,
        seed=seed,
        lower=TUNING_BOUNDS[0],
        upper=TUNING_BOUNDS[1],
        g_max=EULER_RMS_MAX_DEG,
    )


def write_history_csv(result: OptResult, path: str | Path, g_max: float = EULER_RMS_MAX_DEG):
    """Tuning history with a running best-feasible column."""
    path = Path(path)
    best_so_far = result.best_so_far(g_max)
    with open(path, "w", newline="") as fh:
        fh.write("# auvgnc tuning history v1\n")
        writer = csv.writer(fh)
        writer.writerow(["iter", "a1", "a2", "a3", "a4", "a5", "J", "g", "crashed", "best_so_far"])
        for i, obs in enumerate(result.history):
            writer.writerow(
                [
                    i,
                    *[f"{v:.10g}" for v in obs.x],
                    "" if obs.J is None else f"{obs.J:.10g}",
                    "" if obs.g is None else f"{obs.g:.10g}",
                    int(obs.crashed),
                    "" if np.isnan(best_so_far[i]) else f"{best_so_far[i]:.10g}",
                ]
            )


def read_history_csv(path: str | Path):
    """Replay helper for the history file (used to audit the reported best)."""
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                continue
            rows.append(line.strip().split(","))
    header, data = rows[0], rows[1:]
    out = []
    for r in data:
        out.append(
            {
                "x": np.array([float(v) for v in r[1:6]]),
                "J": float(r[6]) if r[6] else None,
                "g": float(r[7]) if r[7] else None,
                "crashed": bool(int(r[8])),
                "best_so_far": float(r[9]) if r[9] else np.nan,
            }
        )
    return out


def write_best_config_fragment(result: OptResult, filter_kind: str, mode: str, path: str | Path):
    """TOML fragment holding the best tuning vector for reuse."""
    with open(path, "w") as fh:
        fh.write("# auvgnc tuned parameters v1\n")
        fh.write("[scenario]\n")
        fh.write(f'filter = "{filter_kind}"\n')
        fh.write(f'mode = "{mode}"\n')
        if result.best_x is not None:
            vals = ", ".join(f"{v:.10g}" for v in result.best_x)
            fh.write(f"tuning = [{vals}]\n")
        fh.write(f"# best_J = {result.best_J}\n")
        fh.write(f"# feasible = {result.feasible}\n")
