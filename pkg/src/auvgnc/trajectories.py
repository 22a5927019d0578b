"""Reference trajectory generators: spiral, zigzag, lawnmower."""

from __future__ import annotations

import numpy as np

from .guidance import Waypoint

DEFAULTS = {
    "spiral": {"radius": 15.0, "turns": 3.0, "depth_end": 40.0, "wp_per_turn": 8},
    "zigzag": {"legs": 6, "leg_length": 40.0, "angle_deg": 45.0},
    "lawnmower": {"legs": 4, "leg_length": 60.0, "spacing": 15.0},
}


def build_trajectory(kind: str, params: dict | None, start, surge_ref: float = 0.5) -> list[Waypoint]:
    """Waypoint list for one of the survey patterns, starting at ``start``.

    Unspecified parameters take the documented full-scale defaults; the
    tuning studies pass their own desk-scale values.
    """
    if kind not in DEFAULTS:
        raise ValueError(f"unknown trajectory kind {kind!r}")
    p = dict(DEFAULTS[kind])
    p.update(params or {})
    start = np.asarray(start, dtype=float)
    if kind == "spiral":
        return _spiral(p, start, surge_ref)
    if kind == "zigzag":
        return _zigzag(p, start, surge_ref)
    return _lawnmower(p, start, surge_ref)


def _spiral(p, start, surge_ref):
    """Helical descent: circular arcs with linear depth per waypoint."""
    radius, turns = p["radius"], p["turns"]
    n_wp = max(int(round(p["wp_per_turn"] * turns)), 2)
    depths = np.linspace(start[2], p["depth_end"], n_wp + 1)
    center = start[:2] + np.array([0.0, radius])
    wps = []
    for k in range(n_wp + 1):
        phi = -np.pi / 2 + 2 * np.pi * turns * k / n_wp
        n = center[0] + radius * np.cos(phi)
        e = center[1] + radius * np.sin(phi)
        heading = phi + np.pi / 2
        wps.append(Waypoint(n, e, depths[k], heading=float(heading), surge_ref=surge_ref))
    return wps


def _zigzag(p, start, surge_ref):
    """Alternating +-angle legs about north at constant depth."""
    angle = np.deg2rad(p["angle_deg"])
    pos = start[:2].copy()
    wps = [Waypoint(pos[0], pos[1], start[2], heading=angle, surge_ref=surge_ref)]
    for leg in range(p["legs"]):
        psi = angle if leg % 2 == 0 else -angle
        pos = pos + p["leg_length"] * np.array([np.cos(psi), np.sin(psi)])
        wps.append(Waypoint(pos[0], pos[1], start[2], heading=psi, surge_ref=surge_ref))
    return wps


def _lawnmower(p, start, surge_ref):
    """Parallel survey legs joined by U-turns, constant depth."""
    pos = start[:2].copy()
    wps = [Waypoint(pos[0], pos[1], start[2], heading=0.0, surge_ref=surge_ref)]
    for leg in range(p["legs"]):
        direction = 0.0 if leg % 2 == 0 else np.pi
        step = p["leg_length"] * np.array([np.cos(direction), np.sin(direction)])
        pos = pos + step
        wps.append(Waypoint(pos[0], pos[1], start[2], heading=direction, surge_ref=surge_ref))
        if leg < p["legs"] - 1:
            pos = pos + np.array([0.0, p["spacing"]])
            next_dir = np.pi if leg % 2 == 0 else 0.0
            wps.append(Waypoint(pos[0], pos[1], start[2], heading=next_dir, surge_ref=surge_ref))
    return wps


def check_feasible(wps: list[Waypoint], turn_radius: float) -> bool:
    """Consecutive waypoints must be farther apart than 2x the turn radius."""
    pts = np.array([[w.n, w.e] for w in wps])
    gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    return bool(np.all(gaps >= 2.0 * turn_radius))


def path_length(wps: list[Waypoint]) -> float:
    """Straight-line length of the waypoint polyline (lower bound)."""
    pts = np.array([[w.n, w.e, w.d] for w in wps])
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
