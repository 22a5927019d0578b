"""Constrained global-best particle swarm optimization.

Feasibility-first handling: any feasible particle dominates any
infeasible one; infeasible particles compare by constraint violation with
crashes counted as unbounded violation. Same evaluation contract as the
Bayesian optimizer so the two can share benchmarks head-to-head.
"""

from __future__ import annotations

import numpy as np

from .opt_base import Observation, OptResult, normalize_outcome, pick_best


def _score(obs: Observation, g_max: float | None) -> tuple[int, float]:
    """Orderable key: feasible-first, then objective / violation."""
    if obs.feasible(g_max):
        return (0, obs.J)
    if obs.crashed or obs.J is None:
        return (1, np.inf)
    violation = 0.0
    if g_max is not None and obs.g is not None:
        violation = max(obs.g - g_max, 0.0)
    return (1, violation)


def pso_minimize(
    func,
    dim: int,
    budget: int,
    seed: int = 0,
    lower=-3.0,
    upper=3.0,
    g_max: float | None = None,
    swarm_size: int = 15,
    inertia: float = 0.7,
    cognitive: float = 1.5,
    social: float = 1.5,
) -> OptResult:
    """Global-best PSO within box bounds under an evaluation budget."""
    rng = np.random.default_rng(seed)
    lower = np.broadcast_to(np.asarray(lower, float), (dim,)).copy()
    upper = np.broadcast_to(np.asarray(upper, float), (dim,)).copy()
    span = upper - lower
    history: list[Observation] = []

    def evaluate(x) -> Observation:
        x = np.clip(x, lower, upper)
        J, g, crashed = normalize_outcome(func(x))
        obs = Observation(x.copy(), J, g, crashed)
        history.append(obs)
        return obs

    pos = lower + rng.uniform(0, 1, size=(swarm_size, dim)) * span
    vel = np.zeros((swarm_size, dim))
    pbest = [evaluate(pos[i]) for i in range(swarm_size)]
    gbest = min(pbest, key=lambda o: _score(o, g_max))

    while len(history) + swarm_size <= budget:
        # asynchronous update: later particles in the generation already
        # steer toward improvements found earlier in it. The inertia factor
        # multiplies the whole update (constriction form), which contracts
        # faster at small budgets than the additive-inertia form.
        for i in range(swarm_size):
            r1 = rng.uniform(0, 1, dim)
            r2 = rng.uniform(0, 1, dim)
            vel[i] = inertia * (
                vel[i]
                + cognitive * r1 * (pbest[i].x - pos[i])
                + social * r2 * (gbest.x - pos[i])
            )
            vel[i] = np.clip(vel[i], -0.5 * span, 0.5 * span)
            pos[i] = np.clip(pos[i] + vel[i], lower, upper)
            obs = evaluate(pos[i])
            if _score(obs, g_max) < _score(pbest[i], g_max):
                pbest[i] = obs
                if _score(obs, g_max) < _score(gbest, g_max):
                    gbest = obs

    return pick_best(history, g_max)
