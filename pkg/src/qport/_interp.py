"""Local cubic interpolation on an ascending scalar grid.

Cubic Hermite segments with central-difference tangents (the Catmull-Rom
choice on uniform grids).  The stencil is local, so linear and quadratic data
away from feature points are reproduced exactly, and endpoint segments fall
back to one-sided tangents through linear ghost extension.
"""

from __future__ import annotations

import numpy as np


class GridRangeError(ValueError):
    """Raised when a query point leaves the sampled range."""


class CubicHermite:
    """Entrywise cubic interpolant over values of shape (n, ...)."""

    def __init__(self, x: np.ndarray, y: np.ndarray):
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise ValueError("need at least two samples")
        if np.any(np.diff(x) <= 0):
            raise ValueError("grid must be strictly ascending")
        y = np.asarray(y)
        if y.shape[0] != x.size:
            raise ValueError("value count does not match grid")
        self.x = x
        self.y = y
        # Ghost-extended central-difference tangents.
        y_prev = np.concatenate([(2 * y[0] - y[1])[None], y[:-1]], axis=0)
        y_next = np.concatenate([y[1:], (2 * y[-1] - y[-2])[None]], axis=0)
        x_prev = np.concatenate([[2 * x[0] - x[1]], x[:-1]])
        x_next = np.concatenate([x[1:], [2 * x[-1] - x[-2]]])
        span = (x_next - x_prev).reshape((-1,) + (1,) * (y.ndim - 1))
        self.slope = (y_next - y_prev) / span

    def __call__(self, xq: float):
        x = self.x
        if xq < x[0] or xq > x[-1]:
            raise GridRangeError(
                f"query {xq:g} outside sampled range [{x[0]:g}, {x[-1]:g}]"
            )
        idx = int(np.searchsorted(x, xq))
        if idx < x.size and x[idx] == xq:
            return self.y[idx].copy() if isinstance(self.y[idx], np.ndarray) else self.y[idx]
        i = idx - 1
        h = x[i + 1] - x[i]
        t = (xq - x[i]) / h
        h00 = (1 + 2 * t) * (1 - t) ** 2
        h10 = t * (1 - t) ** 2
        h01 = t * t * (3 - 2 * t)
        h11 = t * t * (t - 1)
        return (
            h00 * self.y[i] + h01 * self.y[i + 1]
            + h * (h10 * self.slope[i] + h11 * self.slope[i + 1])
        )
