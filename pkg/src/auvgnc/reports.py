"""Report rendering: delimited outputs and matplotlib figures.

Every CLI subcommand that produces tabular output also renders the
matching figure(s) next to it. All files carry a versioned header line.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .campaign import CampaignResult
from .episode import EpisodeData, RunMetrics


def write_timeseries_csv(data: EpisodeData, path: str | Path):
    cols, table = data.as_table()
    with open(path, "w", newline="") as fh:
        fh.write("# auvgnc timeseries v1\n")
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in table:
            writer.writerow([f"{v:.10g}" for v in row])


def write_metrics_json(metrics: RunMetrics, path: str | Path):
    payload = {
        "version": "auvgnc metrics v1",
        "rms_pos_err": metrics.rms_pos_err,
        "rms_euler_err_deg": metrics.rms_euler_err,
        "max_tracking_err": metrics.max_tracking_err,
        "goal_reached": metrics.goal_reached,
        "crash": metrics.crash,
        "sim_time": metrics.sim_time,
        "outlier_count": metrics.outlier_count,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def plot_episode(data: EpisodeData, metrics: RunMetrics, path: str | Path):
    """Four-panel overview: plan view, depth, estimation error, attitude."""
    fig, axes = plt.subplots(2, 2, figsize=(11, 8))

    ax = axes[0, 0]
    ax.plot(data.path_points[:, 1], data.path_points[:, 0], "k--", lw=1, label="reference")
    ax.plot(data.truth_pos[:, 1], data.truth_pos[:, 0], "b-", lw=1.2, label="truth")
    ax.plot(data.est_pos[:, 1], data.est_pos[:, 0], "r:", lw=1.0, label="estimate")
    ax.set_xlabel("east [m]")
    ax.set_ylabel("north [m]")
    ax.set_title(f"plan view (max tracking err {metrics.max_tracking_err:.2f} m)")
    ax.axis("equal")
    ax.legend(fontsize=8)

    ax = axes[0, 1]
    ax.plot(data.t, data.truth_pos[:, 2], "b-", label="truth depth")
    ax.plot(data.t, data.est_pos[:, 2], "r:", label="estimated")
    ax.plot(data.t, data.ref_point[:, 2], "k--", lw=0.8, label="reference")
    ax.invert_yaxis()
    ax.set_xlabel("t [s]")
    ax.set_ylabel("depth [m]")
    ax.legend(fontsize=8)

    ax = axes[1, 0]
    err = np.linalg.norm(data.est_pos - data.truth_pos, axis=1)
    sigma = np.linalg.norm(data.est_pos_sigma, axis=1)
    ax.plot(data.t, err, "r-", lw=1, label="|position error|")
    ax.plot(data.t, 3 * sigma, "k--", lw=0.8, label="3-sigma bound")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("error [m]")
    ax.set_title(f"RMS position error {metrics.rms_pos_err:.3f} m")
    ax.legend(fontsize=8)

    ax = axes[1, 1]
    for i, name in enumerate(("roll", "pitch", "yaw")):
        d = np.rad2deg(np.arctan2(np.sin(data.est_euler[:, i] - data.truth_euler[:, i]),
                                  np.cos(data.est_euler[:, i] - data.truth_euler[:, i])))
        ax.plot(data.t, d, lw=1, label=name)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("attitude error [deg]")
    ax.legend(fontsize=8)

    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_tuning_history(history_rows, path: str | Path, title: str = "tuning"):
    """Objective scatter and running best over the evaluation budget."""
    fig, ax = plt.subplots(figsize=(8, 5))
    xs = np.arange(len(history_rows))
    J = np.array([np.nan if r["J"] is None else r["J"] for r in history_rows])
    crashed = np.array([r["crashed"] for r in history_rows])
    best = np.array([r["best_so_far"] for r in history_rows])
    ax.plot(xs[~crashed], J[~crashed], "o", ms=4, alpha=0.5, label="evaluations")
    if crashed.any():
        ymax = np.nanmax(J) if np.isfinite(J).any() else 1.0
        ax.plot(xs[crashed], np.full(crashed.sum(), ymax), "rx", ms=5, label="crashed")
    ax.plot(xs, best, "k-", lw=1.5, label="best so far")
    ax.set_xlabel("evaluation")
    ax.set_ylabel("objective")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_campaign_box(results: dict[str, CampaignResult], path: str | Path):
    """Box plots of goal-reaching runs plus a goals-reached bar chart."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 5))
    labels = list(results)
    series = [results[k].tracking_errors() for k in labels]
    ax1.boxplot([s if s.size else [np.nan] for s in series], tick_labels=labels)
    ax1.set_ylabel("max tracking error [m]")
    ax1.set_title("tracking error (goal-reaching runs)")
    ax1.tick_params(axis="x", rotation=20)
    reached = [results[k].goals_reached for k in labels]
    total = [results[k].n_runs for k in labels]
    ax2.bar(np.arange(len(labels)), reached, color="tab:blue")
    ax2.set_xticks(np.arange(len(labels)))
    ax2.set_xticklabels(labels, rotation=20)
    for i, (r, n) in enumerate(zip(reached, total)):
        ax2.text(i, r + 0.2, f"{r}/{n}", ha="center", fontsize=9)
    ax2.set_ylabel("goals reached")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def write_allan_csv(taus: np.ndarray, adevs: np.ndarray, path: str | Path):
    with open(path, "w", newline="") as fh:
        fh.write("# auvgnc allan v1\n")
        writer = csv.writer(fh)
        writer.writerow(["tau_s", "adev"])
        for t, a in zip(taus, adevs):
            writer.writerow([f"{t:.10g}", f"{a:.10g}"])


def plot_allan(taus, adevs, path: str | Path, model=None):
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.loglog(taus, adevs, "b.-", ms=4, lw=0.8, label="measured")
    if model is not None:
        ax.loglog(taus, model, "r--", lw=1.2, label="fitted model")
    ax.set_xlabel("cluster time tau [s]")
    ax.set_ylabel("Allan deviation")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
