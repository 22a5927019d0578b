"""Shared pieces of the black-box optimizers: observations, results, designs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NoFeasiblePointError(RuntimeError):
    """All evaluations were infeasible (reported, not raised, by default)."""


@dataclass
class Observation:
    """One evaluated candidate; J and g are absent for crashed runs."""

    x: np.ndarray
    J: float | None
    g: float | None
    crashed: bool

    def feasible(self, g_max: float | None) -> bool:
        if self.crashed or self.J is None:
            return False
        if g_max is not None and self.g is not None and self.g > g_max:
            return False
        return True


@dataclass
class OptResult:
    """Outcome of a budgeted optimization run."""

    best_x: np.ndarray | None
    best_J: float | None
    best_g: float | None
    feasible: bool
    history: list[Observation] = field(default_factory=list)

    @property
    def n_evals(self) -> int:
        return len(self.history)

    def best_so_far(self, g_max: float | None = None) -> np.ndarray:
        """Running best feasible J (nan before the first feasible point)."""
        best = np.nan
        out = np.empty(len(self.history))
        for i, obs in enumerate(self.history):
            if obs.feasible(g_max) and (np.isnan(best) or obs.J < best):
                best = obs.J
            out[i] = best
        return out


def normalize_outcome(res) -> tuple[float | None, float | None, bool]:
    """Accept plain objective values, (J, g, crashed) tuples, or objects."""
    if isinstance(res, (int, float, np.floating)):
        return float(res), None, False
    if isinstance(res, tuple):
        J, g, crashed = res
        return (None if J is None else float(J)), (None if g is None else float(g)), bool(crashed)
    return (
        None if res.J is None else float(res.J),
        None if getattr(res, "g", None) is None else float(res.g),
        bool(res.crashed),
    )


def latin_hypercube(n: int, dim: int, rng: np.random.Generator, lower, upper) -> np.ndarray:
    """Space-filling initial design with one sample per stratum per axis."""
    lower = np.broadcast_to(np.asarray(lower, float), (dim,))
    upper = np.broadcast_to(np.asarray(upper, float), (dim,))
    u = (rng.permuted(np.tile(np.arange(n), (dim, 1)), axis=1).T + rng.uniform(0, 1, (n, dim))) / n
    return lower + u * (upper - lower)


def pick_best(history: list[Observation], g_max: float | None) -> OptResult:
    """Best feasible point, or the best-J infeasible point flagged as such."""
    feas = [o for o in history if o.feasible(g_max)]
    if feas:
        best = min(feas, key=lambda o: o.J)
        return OptResult(best.x.copy(), best.J, best.g, True, history)
    scored = [o for o in history if o.J is not None]
    if scored:
        best = min(scored, key=lambda o: o.J)
        return OptResult(best.x.copy(), best.J, best.g, False, history)
    return OptResult(None, None, None, False, history)
