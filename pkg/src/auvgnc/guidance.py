"""Path planning and line-of-sight guidance.

Horizontal paths are Dubins segments between waypoints; depth references
interpolate linearly along each segment. Yaw guidance is lookahead-based
LOS with adaptive sideslip compensation; vertical guidance applies the
same lookahead law to the depth error and commands a (saturated) pitch
reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dubins import DubinsPath, dubins_shortest
from .frames import wrap_angle


@dataclass
class Waypoint:
    n: float
    e: float
    d: float
    heading: float | None = None  # rad; inferred from the leg when absent
    surge_ref: float = 0.5  # m/s


@dataclass
class GuidanceParams:
    lookahead: float = 4.0  # m, horizontal LOS lookahead
    vertical_lookahead: float = 4.0  # m
    max_pitch_ref: float = np.deg2rad(20.0)
    min_surge_for_sideslip: float = 0.05  # m/s
    turn_radius: float = 5.0  # m, Dubins planner
    waypoint_switch_dist: float = 3.0  # m
    path_sample_step: float = 0.25  # m


def depth_reference(d_start: float, d_goal: float, s: float) -> float:
    """Linear depth interpolation at along-path fraction s in [0, 1]."""
    return d_start + s * (d_goal - d_start)


def los_yaw_reference(
    gamma_p: float,
    h_e: float,
    lookahead: float,
    v_est: float,
    u_est: float,
    min_surge: float = 0.05,
) -> float:
    """LOS heading: path angle, cross-track correction, sideslip compensation.

    The sideslip term atan(v/u) is dropped below ``min_surge`` to avoid the
    blow-up of the ratio at standstill.
    """
    beta = np.arctan(v_est / u_est) if abs(u_est) >= min_surge else 0.0
    return wrap_angle(gamma_p + np.arctan(-h_e / lookahead) - beta)


def vertical_guidance(
    depth_error: float,
    lookahead: float,
    max_pitch: float = np.deg2rad(20.0),
) -> float:
    """Pitch reference from the depth error via the same lookahead law.

    Positive depth error (too shallow) commands nose-down pitch. The
    reference saturates to protect the small-angle validity of the law.
    """
    theta_d = -np.arctan(depth_error / lookahead)
    return float(np.clip(theta_d, -max_pitch, max_pitch))


@dataclass
class GuidanceReference:
    """One guidance output sample for the controller and the logs."""

    psi_d: float
    theta_d: float
    u_ref: float
    d_ref: float
    path_point: np.ndarray  # closest reference-path point (n, e, d)
    cross_track: float
    goal_reached: bool


class _Segment:
    """A planned Dubins leg with its depth profile, densely sampled."""

    def __init__(self, path: DubinsPath, d_start: float, d_goal: float, step: float):
        self.path = path
        self.d_start = d_start
        self.d_goal = d_goal
        pts, headings = path.sample(step)
        self.points = pts
        self.headings = headings
        if path.total_length > 0:
            seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
            self.arclength = np.concatenate([[0.0], np.cumsum(seg)])
        else:
            self.arclength = np.zeros(len(pts))
        self.length = self.arclength[-1] if len(self.arclength) else 0.0

    def nearest(self, ne: np.ndarray) -> int:
        d2 = np.sum((self.points - ne) ** 2, axis=1)
        return int(np.argmin(d2))

    def fraction(self, idx: int) -> float:
        return float(self.arclength[idx] / self.length) if self.length > 0 else 1.0

    def depth_at(self, idx: int) -> float:
        return depth_reference(self.d_start, self.d_goal, self.fraction(idx))


class PathGuidance:
    """Event-driven planner plus 10 Hz LOS guidance over a waypoint list.

    Replans the Dubins leg from the estimated pose on each waypoint
    arrival; in between, emits yaw/pitch/surge references from the current
    estimate. The concatenated planned legs double as the reference path
    for tracking-error metrics.
    """

    def __init__(self, waypoints: list[Waypoint], params: GuidanceParams):
        if len(waypoints) < 2:
            raise ValueError("need at least two waypoints")
        self.waypoints = waypoints
        self.params = params
        self.target_idx = 1
        self.segment: _Segment | None = None
        self.segments: list[_Segment] = []
        self.finished = False

    def _plan_leg(self, pose_ne_psi: np.ndarray, depth_from: float):
        wp = self.waypoints[self.target_idx]
        heading = wp.heading
        if heading is None:
            heading = np.arctan2(wp.e - pose_ne_psi[1], wp.n - pose_ne_psi[0])
        path = dubins_shortest(pose_ne_psi, np.array([wp.n, wp.e, heading]), self.params.turn_radius)
        self.segment = _Segment(path, depth_from, wp.d, self.params.path_sample_step)
        self.segments.append(self.segment)

    def start(self, pose_ne_psi: np.ndarray, depth: float):
        self._plan_leg(np.asarray(pose_ne_psi, dtype=float), depth)

    def nominal_plan(self) -> list[_Segment]:
        """Static plan through all waypoints from their nominal poses."""
        segs = []
        prev = self.waypoints[0]
        psi = prev.heading
        if psi is None:
            psi = np.arctan2(self.waypoints[1].e - prev.e, self.waypoints[1].n - prev.n)
        pose = np.array([prev.n, prev.e, psi])
        depth = prev.d
        for wp in self.waypoints[1:]:
            heading = wp.heading
            if heading is None:
                heading = np.arctan2(wp.e - pose[1], wp.n - pose[0])
            path = dubins_shortest(pose, np.array([wp.n, wp.e, heading]), self.params.turn_radius)
            segs.append(_Segment(path, depth, wp.d, self.params.path_sample_step))
            pose = np.array([wp.n, wp.e, heading])
            depth = wp.d
        return segs

    def step(
        self,
        pos_ned: np.ndarray,
        psi_est: float,
        u_est: float,
        v_est: float,
    ) -> GuidanceReference:
        p = self.params
        ne = np.asarray(pos_ned[:2], dtype=float)
        depth = float(pos_ned[2])
        wp = self.waypoints[self.target_idx]
        dist_wp = float(np.hypot(wp.n - ne[0], wp.e - ne[1]))
        seg = self.segment
        idx = seg.nearest(ne)
        near_end = seg.fraction(idx) >= 0.999
        if (dist_wp < p.waypoint_switch_dist or near_end) and not self.finished:
            if self.target_idx == len(self.waypoints) - 1:
                self.finished = True
            else:
                self.target_idx += 1
                self._plan_leg(np.array([ne[0], ne[1], psi_est]), depth)
                seg = self.segment
                idx = seg.nearest(ne)

        gamma_p = seg.headings[idx]
        ref_pt = seg.points[idx]
        h_e = -np.sin(gamma_p) * (ne[0] - ref_pt[0]) + np.cos(gamma_p) * (ne[1] - ref_pt[1])
        psi_d = los_yaw_reference(gamma_p, h_e, p.lookahead, v_est, u_est, p.min_surge_for_sideslip)
        d_ref = seg.depth_at(idx)
        theta_d = vertical_guidance(d_ref - depth, p.vertical_lookahead, p.max_pitch_ref)
        return GuidanceReference(
            psi_d=psi_d,
            theta_d=theta_d,
            u_ref=wp.surge_ref,
            d_ref=d_ref,
            path_point=np.array([ref_pt[0], ref_pt[1], d_ref]),
            cross_track=float(h_e),
            goal_reached=self.finished,
        )
