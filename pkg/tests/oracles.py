"""Independent brute-force oracles used to pin expected values.

These deliberately avoid the library's own code paths: the prox oracle is a
dense 1-D grid minimization, the selector oracles are linear scans.  Keep
them dumb.
"""

import numpy as np


def grid_prox_1d(h_1d, t, xi, n_points=100_000):
    """Grid-minimize ``h(u) + (u - xi)^2 / (2t)`` over one coordinate.

    Grid spans ``[xi - 3 t s, xi + 3 t s]`` with ``s = 1 + |xi|``.  ``h_1d``
    must accept a vector of candidates and may return ``inf`` entries.
    """
    s = 1.0 + abs(xi)
    grid = np.linspace(xi - 3.0 * t * s, xi + 3.0 * t * s, n_points)
    vals = h_1d(grid) + (grid - xi) ** 2 / (2.0 * t)
    return float(grid[int(np.argmin(vals))])


def grid_prox(h_1d, t, x, n_points=100_000):
    """Coordinatewise grid prox for a separable function with 1-D profile ``h_1d``."""
    return np.array([grid_prox_1d(h_1d, t, xi, n_points) for xi in np.atleast_1d(x)])


def scan_argmin(values, lo, hi):
    """Linear-scan argmin of ``values[lo..hi]`` inclusive, first index on ties."""
    best, best_val = lo, values[lo]
    for j in range(lo + 1, hi + 1):
        if values[j] < best_val:
            best, best_val = j, values[j]
    return best


# 1-D profiles of the shipped separable functions
def l1_profile(u):
    return np.abs(u)


def sq_l2_profile(u, mu=1.0):
    return mu * u * u


def elastic_net_profile(u, l1=1.0, mu=0.05):
    return l1 * np.abs(u) + mu * u * u


def box_profile(u, lo=-1.0, hi=1.0):
    return np.where((u >= lo) & (u <= hi), 0.0, np.inf)


def zero_profile(u):
    return np.zeros_like(u)
