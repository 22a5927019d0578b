"""Episode orchestration: plant + sensors + GNC + navigation filter.

One episode is a fixed-step co-simulation at the 100 Hz base rate with
rate-divided subsystems (guidance/control 10 Hz, depth 2 Hz, USBL 1 Hz).
In closed-loop mode the GNC stack consumes the filter estimate; in
open-loop mode it consumes ground truth while the filter runs passively
on the same sensor streams. Crashes (covariance breakdown, non-finite
states, runaway position error) are recorded in the metrics, never
raised.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import frames
from ._kernels import _fossen_nu_dot
from .config import ScenarioConfig
from .control import LqrController, LqrGains, lqr_synthesize
from .filters import FilterCrash, HmmFilter, MahonyAhrs, SinsFilter
from .guidance import PathGuidance
from .plant import (
    ActuatorCommand,
    PlantDivergedError,
    VehicleState,
    actuator_map,
    apply_model_mismatch,
    current_step,
    integrate_plant,
)
from .sensors import DepthModel, ImuModel, MagModel, UsblModel
from .trajectories import build_trajectory, path_length


@dataclass
class RunMetrics:
    """Episode-level scores used by the tuning objectives and campaigns."""

    rms_pos_err: float
    rms_euler_err: float  # deg, largest per-axis RMS
    max_tracking_err: float
    goal_reached: bool
    crash: bool
    wall_time: float
    sim_time: float
    outlier_count: int = 0

    def __post_init__(self):
        if self.goal_reached and self.crash:
            raise ValueError("goal_reached and crash are mutually exclusive")


@dataclass
class EpisodeStreams:
    """Raw sensor streams and commanded forces recorded from one episode."""

    init_truth: VehicleState
    imu: list
    mag: list
    depth: list  # (step, DepthSample)
    usbl: list  # (step, UsblFix)
    tau: list  # (step, tau) at command instants


@dataclass
class EpisodeData:
    """Recorded time series (at the record rate) plus the reference path."""

    t: np.ndarray
    truth_pos: np.ndarray
    truth_euler: np.ndarray
    truth_vel: np.ndarray
    est_pos: np.ndarray
    est_euler: np.ndarray
    est_vel: np.ndarray
    est_pos_sigma: np.ndarray
    ref_point: np.ndarray
    ref_angles: np.ndarray  # (psi_d, theta_d, u_ref)
    commands: np.ndarray  # (main, diff, vert, movable_mass, buoyancy)
    current: np.ndarray
    path_points: np.ndarray  # flown reference polyline (n, e, d)
    streams: "EpisodeStreams | None" = None

    def as_table(self) -> tuple[list[str], np.ndarray]:
        cols = (
            ["t"]
            + [f"truth_{c}" for c in ("n", "e", "d", "roll", "pitch", "yaw", "u", "v", "w")]
            + [f"est_{c}" for c in ("n", "e", "d", "roll", "pitch", "yaw", "u", "v", "w")]
            + ["sigma_n", "sigma_e", "sigma_d"]
            + ["ref_n", "ref_e", "ref_d", "psi_d", "theta_d", "u_ref"]
            + ["cmd_main", "cmd_diff", "cmd_vert", "cmd_mass", "cmd_buoy"]
            + ["cur_n", "cur_e", "cur_d"]
        )
        table = np.column_stack(
            [
                self.t,
                self.truth_pos, self.truth_euler, self.truth_vel,
                self.est_pos, self.est_euler, self.est_vel,
                self.est_pos_sigma,
                self.ref_point, self.ref_angles,
                self.commands,
                self.current,
            ]
        )
        return cols, table


_GAINS_CACHE: dict = {}


def _cached_gains(cfg: ScenarioConfig) -> LqrGains:
    """LQR synthesis depends only on the nominal vehicle; memoize it."""
    h, w = cfg.hydro, cfg.lqr
    key = (
        h.M_rb.tobytes(), h.M_a.tobytes(), h.D_lin.tobytes(),
        h.weight, h.buoyancy, h.r_g.tobytes(), h.r_b.tobytes(),
        w.state.tobytes(), w.integral.tobytes(), w.control.tobytes(),
        cfg.act.main_thrust_max, cfg.act.vert_lever_x, cfg.surge_ref,
    )
    if key not in _GAINS_CACHE:
        _GAINS_CACHE[key] = lqr_synthesize(cfg.hydro, cfg.act, trim_surge=cfg.surge_ref, weights=w)
    return _GAINS_CACHE[key]


def truth_nu_dot(truth: VehicleState, tau: np.ndarray, v_c: np.ndarray, params) -> np.ndarray:
    """Body acceleration of the truth model (feeds the IMU emulator)."""
    nu = np.concatenate([truth.nu1, truth.nu2])
    return _fossen_nu_dot(
        nu, truth.q, v_c, tau,
        params.M_rb, params.M_a, params.mass_matrix_inv, params.D_lin,
        params.weight, params.buoyancy, params.r_g, params.r_b,
    )


def nominal_reference_polyline(cfg: ScenarioConfig) -> np.ndarray:
    """Static 3-D reference path through the waypoint list (for plots)."""
    wps = build_trajectory(cfg.trajectory, cfg.trajectory_params, cfg.start, cfg.surge_ref)
    guide = PathGuidance(wps, cfg.guidance)
    return segments_to_polyline(guide.nominal_plan())


def segments_to_polyline(segments) -> np.ndarray:
    """Concatenate planned legs into one 3-D polyline."""
    pts = []
    for seg in segments:
        depth = np.array([seg.depth_at(i) for i in range(len(seg.points))])
        pts.append(np.column_stack([seg.points, depth]))
    return np.vstack(pts)


def point_to_polyline_distances(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Exact min distance from each point to the piecewise-linear path."""
    a = poly[:-1]
    b = poly[1:]
    ab = b - a
    denom = np.maximum(np.sum(ab * ab, axis=1), 1e-12)
    out = np.empty(points.shape[0])
    for i, p in enumerate(points):
        t = np.clip(np.sum((p - a) * ab, axis=1) / denom, 0.0, 1.0)
        proj = a + t[:, None] * ab
        out[i] = np.sqrt(np.min(np.sum((proj - p) ** 2, axis=1)))
    return out


def compute_metrics(
    data: EpisodeData,
    goal_reached: bool,
    crash: bool,
    wall_time: float,
    sim_time: float,
    outlier_count: int = 0,
) -> RunMetrics:
    """Estimation and tracking scores from recorded series."""
    pos_err = np.linalg.norm(data.est_pos - data.truth_pos, axis=1)
    rms_pos = float(np.sqrt(np.mean(pos_err**2))) if pos_err.size else np.inf
    eul_err = frames.wrap_angle(data.est_euler - data.truth_euler)
    rms_eul = float(np.rad2deg(np.max(np.sqrt(np.mean(eul_err**2, axis=0))))) if eul_err.size else np.inf
    track = point_to_polyline_distances(data.truth_pos, data.path_points)
    max_track = float(np.max(track)) if track.size else np.inf
    return RunMetrics(
        rms_pos_err=rms_pos,
        rms_euler_err=rms_eul,
        max_tracking_err=max_track,
        goal_reached=goal_reached,
        crash=crash,
        wall_time=wall_time,
        sim_time=sim_time,
        outlier_count=outlier_count,
    )


class _Recorder:
    def __init__(self):
        self.rows = {k: [] for k in (
            "t", "truth_pos", "truth_euler", "truth_vel", "est_pos", "est_euler",
            "est_vel", "sigma", "ref_point", "ref_angles", "cmd", "current",
        )}

    def add(self, t, truth, est_pos, est_euler, est_vel, sigma, ref, cmd, v_c):
        r = self.rows
        r["t"].append(t)
        r["truth_pos"].append(truth.eta1.copy())
        r["truth_euler"].append(frames.quat_to_euler(truth.q))
        r["truth_vel"].append(truth.nu1.copy())
        r["est_pos"].append(est_pos.copy())
        r["est_euler"].append(est_euler.copy())
        r["est_vel"].append(est_vel.copy())
        r["sigma"].append(sigma.copy())
        r["ref_point"].append(ref[0])
        r["ref_angles"].append(ref[1])
        r["cmd"].append(cmd)
        r["current"].append(v_c.copy())

    def finish(self, path_points) -> EpisodeData:
        r = self.rows
        return EpisodeData(
            t=np.array(r["t"]),
            truth_pos=np.array(r["truth_pos"]).reshape(-1, 3),
            truth_euler=np.array(r["truth_euler"]).reshape(-1, 3),
            truth_vel=np.array(r["truth_vel"]).reshape(-1, 3),
            est_pos=np.array(r["est_pos"]).reshape(-1, 3),
            est_euler=np.array(r["est_euler"]).reshape(-1, 3),
            est_vel=np.array(r["est_vel"]).reshape(-1, 3),
            est_pos_sigma=np.array(r["sigma"]).reshape(-1, 3),
            ref_point=np.array(r["ref_point"]).reshape(-1, 3),
            ref_angles=np.array(r["ref_angles"]).reshape(-1, 3),
            commands=np.array(r["cmd"]).reshape(-1, 5),
            current=np.array(r["current"]).reshape(-1, 3),
            path_points=path_points,
        )


def run_episode(
    cfg: ScenarioConfig,
    record: bool = True,
    record_streams: bool = False,
) -> tuple[RunMetrics, EpisodeData]:
    """Run one episode to goal, crash or the duration cap.

    With ``record_streams`` the raw sensor streams are attached to the
    returned data as ``data.streams`` for offline filter replay.
    """
    t_wall = time.time()
    dt = cfg.dt

    wps = build_trajectory(cfg.trajectory, cfg.trajectory_params, cfg.start, cfg.surge_ref)
    nominal_time = path_length(wps) / cfg.surge_ref
    cap = cfg.duration_cap if cfg.duration_cap is not None else 2.0 * nominal_time
    n_steps = int(round(cap / dt))

    # plant: mismatch applies to the truth only; filters keep the nominal
    plant_params = (
        apply_model_mismatch(cfg.hydro, cfg.seed_mismatch) if cfg.apply_mismatch else cfg.hydro
    )

    # deterministic per-stream RNGs
    ss = np.random.SeedSequence(cfg.seed_sensor)
    rng_imu, rng_mag, rng_depth, rng_usbl = [np.random.default_rng(s) for s in ss.spawn(4)]
    rng_current = np.random.default_rng(cfg.seed_current)

    sens = cfg.sensors
    imu_model = ImuModel(sens.accel, sens.gyro, rng_imu)
    mag_model = MagModel(sens.mag_field, sens.mag, rng_mag)
    depth_model = DepthModel(rng_depth, sigma=sens.depth_sigma, quantization_step=sens.depth_quantization)
    usbl_model = UsblModel(sens.usbl, rng_usbl, outage_windows=cfg.outages)

    heading0 = wps[0].heading
    if heading0 is None:
        heading0 = np.arctan2(wps[1].e - wps[0].n, wps[1].n - wps[0].n)
    q0 = frames.euler_to_quat(0.0, 0.0, heading0)
    truth = VehicleState.at_rest(cfg.start.copy(), q0)
    v_c = np.zeros(3)

    nav = _make_filter(cfg)
    nav.initialize_from_truth(truth)

    guide = PathGuidance(wps, cfg.guidance)
    guide.start(np.array([truth.eta1[0], truth.eta1[1], heading0]), truth.eta1[2])

    controller = LqrController(_cached_gains(cfg), cfg.hydro, cfg.act)

    recorder = _Recorder() if record else None
    streams = (
        EpisodeStreams(init_truth=truth.copy(), imu=[], mag=[], depth=[], usbl=[], tau=[])
        if record_streams
        else None
    )
    tau = np.zeros(6)
    cmd = ActuatorCommand()
    ref_log = (np.zeros(3), np.zeros(3))
    goal_reached = False
    crash = False
    final_wp = np.array([wps[-1].n, wps[-1].e, wps[-1].d])
    k = 0

    try:
        for k in range(n_steps):
            t = k * dt
            v_c_eff = v_c if cfg.current_enabled else np.zeros(3)
            nu_dot = truth_nu_dot(truth, tau, v_c_eff, plant_params)
            imu = imu_model.sample(nu_dot[0:3], truth.q, truth.nu2, t, dt)
            mag = mag_model.sample(truth.q, t, dt)
            depth = depth_model.sample(truth.eta1[2], t) if k % cfg.depth_every == 0 else None
            fix = usbl_model.fix(truth.eta1, truth.q, t) if k % cfg.usbl_every == 0 else None
            if streams is not None:
                streams.imu.append(imu)
                streams.mag.append(mag)
                if depth is not None:
                    streams.depth.append((k, depth))
                if fix is not None:
                    streams.usbl.append((k, fix))

            nav.process_measurements(k, cfg, imu, mag, depth, fix)

            if k % cfg.control_every == 0:
                est = nav.estimate(imu)
                if np.linalg.norm(est.pos - truth.eta1) > 1e4:
                    raise FilterCrash("position error above 1e4 m")
                fb = _truth_feedback(truth) if cfg.mode == "ol" else est
                ref = guide.step(fb.pos, fb.euler[2], fb.vel[0], fb.vel[1])
                cmd = controller.step(
                    fb.vel[0], fb.euler[1], fb.euler[2], fb.rates[1], fb.rates[2],
                    ref.u_ref, ref.theta_d, ref.psi_d,
                )
                tau = actuator_map(cmd, cfg.act)
                nav.on_command(tau)
                if streams is not None:
                    streams.tau.append((k, tau.copy()))
                ref_log = (ref.path_point, np.array([ref.psi_d, ref.theta_d, ref.u_ref]))
                if np.linalg.norm(truth.eta1 - final_wp) < cfg.goal_radius:
                    goal_reached = True

            if record and k % cfg.record_every == 0:
                est = nav.estimate(imu)
                recorder.add(
                    t, truth, est.pos, est.euler, est.vel, est.pos_sigma,
                    ref_log,
                    np.array([*cmd.thruster, cmd.movable_mass_pos, cmd.buoyancy_delta]),
                    v_c,
                )
            if goal_reached:
                break

            nav.predict_step(k, cfg, imu, tau)
            truth = integrate_plant(truth, tau, v_c_eff, plant_params, dt)
            if cfg.current_enabled:
                v_c = current_step(v_c, cfg.current, dt, rng_current.standard_normal(3))
    except (FilterCrash, PlantDivergedError, frames.GimbalLockError, np.linalg.LinAlgError):
        crash = True
        goal_reached = False

    sim_time = (k + 1) * dt
    # tracking is judged against the reference legs the guidance actually
    # commanded (replans included): the cross-track the LOS law acts on
    path_points = segments_to_polyline(guide.segments)
    if recorder is not None and not recorder.rows["t"]:
        # crashed before the first record: log the initial condition
        recorder.add(
            0.0, truth,
            truth.eta1, frames.quat_to_euler(truth.q), truth.nu1,
            np.zeros(3), (np.zeros(3), np.zeros(3)), np.zeros(5), v_c,
        )
    data = recorder.finish(path_points) if recorder is not None else None
    metrics = compute_metrics(
        data if data is not None else _empty_data(path_points),
        goal_reached,
        crash,
        time.time() - t_wall,
        sim_time,
        nav.outlier_count,
    )
    if data is not None:
        data.streams = streams
    return metrics, data


def _empty_data(path_points):
    z = np.zeros((0, 3))
    return EpisodeData(
        t=np.zeros(0), truth_pos=z, truth_euler=z, truth_vel=z,
        est_pos=z, est_euler=z, est_vel=z, est_pos_sigma=z,
        ref_point=z, ref_angles=z, commands=np.zeros((0, 5)), current=z,
        path_points=path_points,
    )


@dataclass
class _Estimate:
    pos: np.ndarray
    euler: np.ndarray
    vel: np.ndarray
    rates: np.ndarray
    pos_sigma: np.ndarray


def _truth_feedback(truth: VehicleState) -> _Estimate:
    return _Estimate(
        pos=truth.eta1,
        euler=frames.quat_to_euler(truth.q),
        vel=truth.nu1,
        rates=truth.nu2,
        pos_sigma=np.zeros(3),
    )


class _SinsRunner:
    """Drives the strapdown filter at the sensor rates."""

    def __init__(self, cfg: ScenarioConfig):
        self.f = SinsFilter(
            cfg.noise, cfg.sensors.mag_field, tuning=cfg.tuning, ned_velocity=cfg.ned_velocity
        )
        self._last_imu = None

    @property
    def outlier_count(self):
        return self.f.outlier_count

    def initialize_from_truth(self, truth: VehicleState):
        self.f.initialize(truth.nu1, truth.eta1, truth.q)

    def process_measurements(self, k, cfg, imu, mag, depth, fix):
        self._last_imu = imu
        self.f.update_mag(mag)
        if depth is not None:
            self.f.update_depth(depth.p_abs)
        if fix is not None and fix.valid:
            self.f.update_usbl(fix)

    def on_command(self, tau):
        pass

    def predict_step(self, k, cfg, imu, tau):
        self.f.predict(imu, cfg.dt)

    def estimate(self, imu) -> _Estimate:
        f = self.f
        rates = f.rates(imu.omega_ib_b) if imu is not None else np.zeros(3)
        return _Estimate(
            pos=f.eta1.copy(),
            euler=frames.quat_to_euler(f.q),
            vel=f.body_velocity().copy(),
            rates=rates,
            pos_sigma=np.sqrt(np.diag(f.P)[3:6]),
        )


class _HmmRunner:
    """Drives the hydrodynamic filter at the control rate, AHRS alongside."""

    def __init__(self, cfg: ScenarioConfig):
        self.f = HmmFilter(cfg.noise, cfg.hydro, tuning=cfg.tuning)
        self.ahrs = None
        self.cfg_mahony = cfg.mahony
        self.field = cfg.sensors.mag_field
        self._tau = np.zeros(6)

    @property
    def outlier_count(self):
        return self.f.outlier_count

    def initialize_from_truth(self, truth: VehicleState):
        self.f.initialize(truth.nu1, truth.nu2, truth.eta1, truth.q)
        self.ahrs = MahonyAhrs(self.cfg_mahony, self.field, truth.q)

    def process_measurements(self, k, cfg, imu, mag, depth, fix):
        self.ahrs.step(imu, mag, cfg.dt)
        if k % cfg.ahrs_every == 0:
            self.f.update_ahrs(self.ahrs.euler())
        if depth is not None:
            self.f.update_depth(depth.p_abs)
        if fix is not None and fix.valid:
            self.f.update_usbl(fix)

    def on_command(self, tau):
        self._tau = tau

    def predict_step(self, k, cfg, imu, tau):
        if (k + 1) % cfg.control_every == 0:
            # one coarse Euler step covering the past control interval
            self.f.predict(self._tau, cfg.dt * cfg.control_every)

    def estimate(self, imu) -> _Estimate:
        f = self.f
        return _Estimate(
            pos=f.eta1.copy(),
            euler=frames.quat_to_euler(f.q),
            vel=f.nu1.copy(),
            rates=f.nu2.copy(),
            pos_sigma=np.sqrt(np.diag(f.P)[6:9]),
        )


def _make_filter(cfg: ScenarioConfig):
    return _SinsRunner(cfg) if cfg.filter_kind == "sins" else _HmmRunner(cfg)


def run_filter(
    streams: EpisodeStreams,
    cfg: ScenarioConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Replay recorded sensor streams through a freshly built filter.

    Steps the selected filter offline over the episode's raw streams
    (IMU/MAG at the base rate, depth/USBL/commands at their recorded
    instants) and returns (t, position, euler) series at the record rate.
    Raises :class:`FilterCrash` exactly like the online path.
    """
    nav = _make_filter(cfg)
    nav.initialize_from_truth(streams.init_truth)
    depth_at = dict(streams.depth)
    usbl_at = dict(streams.usbl)
    tau_at = dict(streams.tau)
    tau = np.zeros(6)
    t_out, pos_out, eul_out = [], [], []
    for k, (imu, mag) in enumerate(zip(streams.imu, streams.mag)):
        fix = usbl_at.get(k)
        nav.process_measurements(k, cfg, imu, mag, depth_at.get(k), fix)
        if k in tau_at:
            tau = tau_at[k]
            nav.on_command(tau)
        if k % cfg.record_every == 0:
            est = nav.estimate(imu)
            t_out.append(k * cfg.dt)
            pos_out.append(est.pos.copy())
            eul_out.append(est.euler.copy())
        nav.predict_step(k, cfg, imu, tau)
    return np.array(t_out), np.array(pos_out), np.array(eul_out)
