"""Dubins shortest paths in the horizontal plane.

Poses are (n, e, psi) with psi measured from north toward east, which maps
one-to-one onto the textbook (x, y, theta) convention, so the standard six
word solutions apply unchanged. Ties between words are broken by the
enumeration order LSL, RSR, LSR, RSL, RLR, LRL.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WORDS = ("LSL", "RSR", "LSR", "RSL", "RLR", "LRL")


def mod2pi(x: float) -> float:
    return x % (2.0 * np.pi)


def _lsl(alpha, beta, d):
    sa, sb, ca, cb = np.sin(alpha), np.sin(beta), np.cos(alpha), np.cos(beta)
    p_sq = 2.0 + d * d - 2.0 * np.cos(alpha - beta) + 2.0 * d * (sa - sb)
    if p_sq < 0.0:
        return None
    tmp = np.arctan2(cb - ca, d + sa - sb)
    return mod2pi(-alpha + tmp), np.sqrt(p_sq), mod2pi(beta - tmp)


def _rsr(alpha, beta, d):
    sa, sb, ca, cb = np.sin(alpha), np.sin(beta), np.cos(alpha), np.cos(beta)
    p_sq = 2.0 + d * d - 2.0 * np.cos(alpha - beta) + 2.0 * d * (sb - sa)
    if p_sq < 0.0:
        return None
    tmp = np.arctan2(ca - cb, d - sa + sb)
    return mod2pi(alpha - tmp), np.sqrt(p_sq), mod2pi(-beta + tmp)


def _lsr(alpha, beta, d):
    sa, sb, ca, cb = np.sin(alpha), np.sin(beta), np.cos(alpha), np.cos(beta)
    p_sq = -2.0 + d * d + 2.0 * np.cos(alpha - beta) + 2.0 * d * (sa + sb)
    if p_sq < 0.0:
        return None
    p = np.sqrt(p_sq)
    tmp = np.arctan2(-ca - cb, d + sa + sb) - np.arctan2(-2.0, p)
    return mod2pi(-alpha + tmp), p, mod2pi(-mod2pi(beta) + tmp)


def _rsl(alpha, beta, d):
    sa, sb, ca, cb = np.sin(alpha), np.sin(beta), np.cos(alpha), np.cos(beta)
    p_sq = -2.0 + d * d + 2.0 * np.cos(alpha - beta) - 2.0 * d * (sa + sb)
    if p_sq < 0.0:
        return None
    p = np.sqrt(p_sq)
    tmp = np.arctan2(ca + cb, d - sa - sb) - np.arctan2(2.0, p)
    return mod2pi(alpha - tmp), p, mod2pi(beta - tmp)


def _rlr(alpha, beta, d):
    sa, sb, ca, cb = np.sin(alpha), np.sin(beta), np.cos(alpha), np.cos(beta)
    tmp = (6.0 - d * d + 2.0 * np.cos(alpha - beta) + 2.0 * d * (sa - sb)) / 8.0
    if abs(tmp) > 1.0:
        return None
    p = mod2pi(2.0 * np.pi - np.arccos(tmp))
    t = mod2pi(alpha - np.arctan2(ca - cb, d - sa + sb) + p / 2.0)
    return t, p, mod2pi(alpha - beta - t + p)


def _lrl(alpha, beta, d):
    sa, sb, ca, cb = np.sin(alpha), np.sin(beta), np.cos(alpha), np.cos(beta)
    tmp = (6.0 - d * d + 2.0 * np.cos(alpha - beta) + 2.0 * d * (sb - sa)) / 8.0
    if abs(tmp) > 1.0:
        return None
    p = mod2pi(2.0 * np.pi - np.arccos(tmp))
    t = mod2pi(-alpha + np.arctan2(-ca + cb, d + sa - sb) + p / 2.0)
    return t, p, mod2pi(mod2pi(beta) - alpha + p - t)


_SOLVERS = {"LSL": _lsl, "RSR": _rsr, "LSR": _lsr, "RSL": _rsl, "RLR": _rlr, "LRL": _lrl}


@dataclass
class DubinsPath:
    """One Dubins word with segment lengths in meters."""

    word: str
    lengths: np.ndarray  # three nonnegative segment lengths, m
    radius: float
    start: np.ndarray  # (n, e, psi)
    end: np.ndarray

    @property
    def total_length(self) -> float:
        return float(np.sum(self.lengths))

    def sample(self, step: float = 0.25) -> tuple[np.ndarray, np.ndarray]:
        """Points (m, 2) and tangent headings (m,) along the path.

        Always includes both endpoints; spacing is at most ``step``.
        """
        n_pts = max(int(np.ceil(self.total_length / step)) + 1, 2)
        s_vals = np.linspace(0.0, self.total_length, n_pts)
        pts = np.empty((n_pts, 2))
        headings = np.empty(n_pts)
        for i, s in enumerate(s_vals):
            pts[i], headings[i] = self.point_at(s)
        return pts, headings

    def point_at(self, s: float) -> tuple[np.ndarray, float]:
        """Pose after arc length s from the start."""
        n, e, psi = self.start
        s = float(np.clip(s, 0.0, self.total_length))
        for letter, seg_len in zip(self.word, self.lengths):
            ds = min(s, seg_len)
            if letter == "S":
                n += ds * np.cos(psi)
                e += ds * np.sin(psi)
            else:
                sign = 1.0 if letter == "L" else -1.0
                dpsi = sign * ds / self.radius
                n += self.radius * sign * (np.sin(psi + dpsi) - np.sin(psi))
                e += self.radius * sign * (np.cos(psi) - np.cos(psi + dpsi))
                psi += dpsi
            s -= ds
            if s <= 0.0:
                break
        return np.array([n, e]), psi


def word_lengths(start, goal, radius: float) -> dict[str, np.ndarray]:
    """Segment lengths (m) for every feasible word; basis of the planner."""
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    dn, de = goal[0] - start[0], goal[1] - start[1]
    D = np.hypot(dn, de)
    d = D / radius
    theta = np.arctan2(de, dn) if D > 1e-12 else 0.0
    alpha = mod2pi(start[2] - theta)
    beta = mod2pi(goal[2] - theta)
    out = {}
    for word in WORDS:
        res = _SOLVERS[word](alpha, beta, d)
        if res is None:
            continue
        t, p, q = res
        seg = np.array([t * radius, p * radius if word[1] == "S" else p * radius, q * radius])
        out[word] = seg
    return out


def dubins_shortest(start, goal, radius: float) -> DubinsPath:
    """Shortest Dubins path between two planar poses.

    A degenerate zero-length path is returned when start and goal coincide.
    """
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    if radius <= 0:
        raise ValueError("radius must be positive")
    if (
        np.hypot(goal[0] - start[0], goal[1] - start[1]) < 1e-12
        and abs(mod2pi(goal[2] - start[2])) < 1e-12
    ):
        return DubinsPath("LSL", np.zeros(3), radius, start.copy(), goal.copy())
    best = None
    for word, seg in word_lengths(start, goal, radius).items():
        total = float(np.sum(seg))
        if best is None or total < best[1] - 1e-12:
            best = (word, total, seg)
    word, _, seg = best
    return DubinsPath(word, seg, radius, start.copy(), goal.copy())
