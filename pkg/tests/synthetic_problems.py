"""Synthetic benchmark problems shared by the optimizer tests.

The constrained bowl has a known optimum on the active constraint
boundary, which makes it the reference problem for the BO-vs-PSO
comparisons.
"""

import numpy as np

BOWL_CENTER = np.array([1.6, 0.8])
DISK_RADIUS = 1.5
BOWL_OPTIMUM_X = DISK_RADIUS * BOWL_CENTER / np.linalg.norm(BOWL_CENTER)
BOWL_OPTIMUM_J = float((np.linalg.norm(BOWL_CENTER) - DISK_RADIUS) ** 2)


def constrained_bowl(x):
    """Quadratic bowl with a disk feasibility constraint g <= DISK_RADIUS."""
    x = np.asarray(x, float)
    J = float(np.sum((x - BOWL_CENTER) ** 2))
    g = float(np.linalg.norm(x))
    return J, g, False


def crashing_bowl(x):
    """Bowl whose left half-plane crashes instead of returning values."""
    x = np.asarray(x, float)
    if x[0] < -1.0:
        return None, None, True
    return float(np.sum((x - BOWL_CENTER) ** 2)), None, False


def sphere(x):
    return float(np.sum(np.asarray(x, float) ** 2))
