"""Fourth-order finite-difference stencils on uniform grids (one-sided at the ends)."""
from __future__ import annotations

import numpy as np

# first derivative, units of 1/(12 h)
D1_INTERIOR = np.array([1.0, -8.0, 0.0, 8.0, -1.0])
D1_ROW0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0])
D1_ROW1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0])
# second derivative, units of 1/(12 h^2)
D2_INTERIOR = np.array([-1.0, 16.0, -30.0, 16.0, -1.0])
D2_ROW0 = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0])
D2_ROW1 = np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0])
# Kreiss-Oliger sixth difference, units of 1/64
KO6 = np.array([1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0])

MIN_POINTS = 7


def _moved(f, axis):
    f = np.asarray(f)
    return np.moveaxis(f, axis, -1)


def d1(f, h: float, axis: int = -1) -> np.ndarray:
    """Fourth-order first derivative along ``axis``."""
    g = _moved(f, axis)
    n = g.shape[-1]
    if n < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} points for the stencil, got {n}")
    out = np.empty(g.shape, dtype=np.result_type(g, float))
    out[..., 2:-2] = (g[..., :-4] - 8 * g[..., 1:-3] + 8 * g[..., 3:-1] - g[..., 4:]) / 12.0
    out[..., 0] = g[..., :5] @ D1_ROW0 / 12.0
    out[..., 1] = g[..., :5] @ D1_ROW1 / 12.0
    out[..., -1] = -(g[..., -1:-6:-1] @ D1_ROW0) / 12.0
    out[..., -2] = -(g[..., -1:-6:-1] @ D1_ROW1) / 12.0
    return np.moveaxis(out / h, -1, axis)


def d2(f, h: float, axis: int = -1) -> np.ndarray:
    """Fourth-order second derivative along ``axis``."""
    g = _moved(f, axis)
    n = g.shape[-1]
    if n < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} points for the stencil, got {n}")
    out = np.empty(g.shape, dtype=np.result_type(g, float))
    out[..., 2:-2] = (-g[..., :-4] + 16 * g[..., 1:-3] - 30 * g[..., 2:-2] + 16 * g[..., 3:-1] - g[..., 4:]) / 12.0
    out[..., 0] = g[..., :6] @ D2_ROW0 / 12.0
    out[..., 1] = g[..., :6] @ D2_ROW1 / 12.0
    out[..., -1] = g[..., -1:-7:-1] @ D2_ROW0 / 12.0
    out[..., -2] = g[..., -1:-7:-1] @ D2_ROW1 / 12.0
    return np.moveaxis(out / (h * h), -1, axis)


def lagrange_weights(x_nodes: np.ndarray, x: float) -> np.ndarray:
    """Weights of the interpolating polynomial through ``x_nodes`` evaluated at ``x``."""
    x_nodes = np.asarray(x_nodes, dtype=float)
    w = np.ones_like(x_nodes)
    for j, xj in enumerate(x_nodes):
        for k, xk in enumerate(x_nodes):
            if k != j:
                w[j] *= (x - xk) / (xj - xk)
    return w


def interp_stencil(x_grid: np.ndarray, x: float, width: int = 6):
    """Indices and Lagrange weights of a ``width``-point stencil around ``x``."""
    n = len(x_grid)
    h = x_grid[1] - x_grid[0]
    i0 = int(np.floor((x - x_grid[0]) / h)) - width // 2 + 1
    i0 = min(max(i0, 0), n - width)
    idx = np.arange(i0, i0 + width)
    return idx, lagrange_weights(x_grid[idx], x)
