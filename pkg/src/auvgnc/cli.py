"""Command-line interface: simulate, tune, montecarlo, allan."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import allan as allan_mod
from . import reports
from .campaign import run_campaign, write_campaign_csv
from .config import ScenarioConfig, load_config
from .episode import run_episode
from .tuning import (
    EULER_RMS_MAX_DEG,
    read_history_csv,
    tune_filter,
    write_best_config_fragment,
    write_history_csv,
)


def _outdir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    out = _outdir(args.out)
    metrics, data = run_episode(cfg, record=True)
    reports.write_timeseries_csv(data, out / "timeseries.csv")
    reports.write_metrics_json(metrics, out / "metrics.json")
    reports.plot_episode(data, metrics, out / "episode.png")
    print(
        f"episode finished: goal={metrics.goal_reached} crash={metrics.crash} "
        f"rms_pos={metrics.rms_pos_err:.3f} m track={metrics.max_tracking_err:.2f} m"
    )
    return 0


def cmd_tune(args) -> int:
    out = _outdir(args.out)

    def progress(i, x, res):
        if args.verbose:
            val = "crash" if res.crashed else f"J={res.J:.3f} g={res.g:.2f}"
            print(f"  eval {i:3d}: {val}")

    result = tune_filter(
        filter_kind=args.filter,
        mode=args.mode,
        optimizer=args.opt,
        budget=args.budget,
        seed=args.seed,
        outage_duration=args.outage,
        progress=progress,
    )
    history_path = out / "history.csv"
    write_history_csv(result, history_path)
    write_best_config_fragment(result, args.filter, args.mode, out / "best_tuning.toml")
    reports.plot_tuning_history(
        read_history_csv(history_path),
        out / "history.png",
        title=f"{args.filter} {args.mode} {args.opt} (budget {args.budget}, seed {args.seed})",
    )
    if result.best_x is None:
        print("no scored evaluation at all; see history.csv")
        return 1
    flag = "" if result.feasible else " [INFEASIBLE: no candidate met the attitude bound]"
    print(f"best J = {result.best_J:.4f} at a = {np.round(result.best_x, 3)}{flag}")
    return 0


def cmd_montecarlo(args) -> int:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    out = _outdir(args.out)
    result = run_campaign(cfg, n_runs=args.runs, seed0=args.seed, workers=args.workers)
    write_campaign_csv(result, out / "campaign.csv")
    reports.plot_campaign_box({f"{cfg.filter_kind} {cfg.mode}": result}, out / "campaign.png")
    q = result.tracking_quantiles()
    summary = {
        "version": "auvgnc campaign summary v1",
        "runs": result.n_runs,
        "goals_reached": result.goals_reached,
        "tracking_quantiles": q,
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(
        f"{result.goals_reached}/{result.n_runs} goals reached, "
        f"median tracking {q['median']:.2f} m"
    )
    return 0


def cmd_allan(args) -> int:
    out = _outdir(args.out)
    series = np.loadtxt(args.input, delimiter=",", comments="#")
    if series.ndim != 1:
        series = series[:, 0]
    taus, adevs = allan_mod.allan_deviation(series, args.fs)
    reports.write_allan_csv(taus, adevs, out / "allan.csv")
    model = None
    if args.fit:
        params = allan_mod.fit_gm_params(taus, adevs, corr_time=args.corr_time)
        model = allan_mod.analytic_allan(taus, params.N[0], params.B[0], params.K[0], args.corr_time)
        with open(out / "gm_fit.json", "w") as fh:
            json.dump(
                {
                    "version": "auvgnc gm fit v1",
                    "white_noise": params.N[0],
                    "bias_instability": params.B[0],
                    "random_walk": params.K[0],
                    "corr_time": args.corr_time,
                },
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
        print(f"fit: N={params.N[0]:.4g} B={params.B[0]:.4g} K={params.K[0]:.4g}")
    reports.plot_allan(taus, adevs, out / "allan.png", model=model)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="auvgnc", description="AUV GNC simulation and filter tuning")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one episode from a config file")
    sim.add_argument("--config", help="TOML scenario config (defaults if omitted)")
    sim.add_argument("--out", required=True, help="output directory")
    sim.set_defaults(func=cmd_simulate)

    tune = sub.add_parser("tune", help="auto-tune filter covariances")
    tune.add_argument("--filter", choices=("sins", "hmm"), required=True)
    tune.add_argument("--mode", choices=("ol", "cl"), required=True)
    tune.add_argument("--opt", choices=("bo", "pso"), default="bo")
    tune.add_argument("--budget", type=int, default=60)
    tune.add_argument("--seed", type=int, default=0)
    tune.add_argument("--outage", type=float, default=30.0, help="USBL outage length [s]")
    tune.add_argument("--out", required=True)
    tune.add_argument("--verbose", action="store_true")
    tune.set_defaults(func=cmd_tune)

    mc = sub.add_parser("montecarlo", help="Monte Carlo campaign")
    mc.add_argument("--config", help="TOML scenario config (defaults if omitted)")
    mc.add_argument("--runs", type=int, required=True)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--workers", type=int, default=1)
    mc.add_argument("--out", required=True)
    mc.set_defaults(func=cmd_montecarlo)

    al = sub.add_parser("allan", help="Allan deviation of a single-column CSV series")
    al.add_argument("--input", required=True)
    al.add_argument("--fs", type=float, required=True, help="sample rate [Hz]")
    al.add_argument("--fit", action="store_true", help="also fit the three-term noise model")
    al.add_argument("--corr-time", type=float, default=100.0, dest="corr_time")
    al.add_argument("--out", required=True)
    al.set_defaults(func=cmd_allan)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
