"""CLI surface tests: subcommands, file outputs, determinism."""

import filecmp
import json
from pathlib import Path

import numpy as np
import pytest

from auvgnc.cli import main

SMALL_SCENARIO = """
[scenario]
trajectory = "zigzag"
trajectory_params = {legs = 2, leg_length = 10.0, angle_deg = 45.0}
filter = "hmm"
mode = "cl"
goal_radius = 3.0

[seeds]
sensor = 11
current = 12
mismatch = 13

[guidance]
turn_radius = 3.0
waypoint_switch_dist = 2.0

[outage]
windows = [[10.0, 5.0]]
"""


@pytest.fixture
def scenario_file(tmp_path):
    p = tmp_path / "scenario.toml"
    p.write_text(SMALL_SCENARIO)
    return p


class TestSimulate:
    def test_outputs_exist(self, scenario_file, tmp_path):
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(scenario_file), "--out", str(out)]) == 0
        assert (out / "timeseries.csv").exists()
        assert (out / "metrics.json").exists()
        assert (out / "episode.png").exists()
        header = (out / "timeseries.csv").read_text().splitlines()[0]
        assert header.startswith("# auvgnc timeseries v")
        metrics = json.loads((out / "metrics.json").read_text())
        assert "rms_pos_err" in metrics and "version" in metrics

    def test_byte_identical_reruns(self, scenario_file, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["simulate", "--config", str(scenario_file), "--out", str(out1)])
        main(["simulate", "--config", str(scenario_file), "--out", str(out2)])
        assert filecmp.cmp(out1 / "timeseries.csv", out2 / "timeseries.csv", shallow=False)
        assert filecmp.cmp(out1 / "metrics.json", out2 / "metrics.json", shallow=False)


class TestMontecarlo:
    def test_campaign_outputs_and_worker_invariance(self, scenario_file, tmp_path):
        out1, out2 = tmp_path / "w1", tmp_path / "w2"
        rc = main([
            "montecarlo", "--config", str(scenario_file), "--runs", "3",
            "--seed", "4", "--workers", "1", "--out", str(out1),
        ])
        assert rc == 0
        rc = main([
            "montecarlo", "--config", str(scenario_file), "--runs", "3",
            "--seed", "4", "--workers", "2", "--out", str(out2),
        ])
        assert rc == 0
        assert filecmp.cmp(out1 / "campaign.csv", out2 / "campaign.csv", shallow=False)
        assert (out1 / "campaign.png").exists()
        assert (out1 / "summary.json").exists()


class TestTune:
    def test_tiny_budget_run(self, tmp_path):
        out = tmp_path / "tune"
        rc = main([
            "tune", "--filter", "hmm", "--mode", "cl", "--opt", "pso",
            "--budget", "16", "--seed", "0", "--outage", "5.0", "--out", str(out),
        ])
        assert rc == 0
        history = (out / "history.csv").read_text().splitlines()
        assert history[0].startswith("# auvgnc tuning history v")
        assert len(history) == 2 + 16  # version line + header + rows
        assert (out / "best_tuning.toml").exists()
        assert (out / "history.png").exists()

    def test_history_determinism(self, tmp_path):
        args = [
            "tune", "--filter", "hmm", "--mode", "cl", "--opt", "pso",
            "--budget", "16", "--seed", "3", "--outage", "5.0",
        ]
        main(args + ["--out", str(tmp_path / "t1")])
        main(args + ["--out", str(tmp_path / "t2")])
        assert filecmp.cmp(
            tmp_path / "t1" / "history.csv", tmp_path / "t2" / "history.csv", shallow=False
        )


class TestAllan:
    def test_allan_csv_and_fit(self, tmp_path):
        rng = np.random.default_rng(0)
        series = 0.02 * rng.standard_normal(60_000)
        src = tmp_path / "series.csv"
        np.savetxt(src, series, delimiter=",")
        out = tmp_path / "allan"
        rc = main([
            "allan", "--input", str(src), "--fs", "100", "--fit",
            "--corr-time", "50", "--out", str(out),
        ])
        assert rc == 0
        lines = (out / "allan.csv").read_text().splitlines()
        assert lines[0].startswith("# auvgnc allan v")
        fit = json.loads((out / "gm_fit.json").read_text())
        # white-only series: N = sigma * sqrt(dt) = 0.002
        assert abs(fit["white_noise"] - 0.002) / 0.002 < 0.1
        assert (out / "allan.png").exists()
