"""Ordinary least squares on log-log data."""
from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, FitError

__all__ = ["loglog_fit", "linear_fit"]


def linear_fit(x, y, min_points: int = 3) -> tuple[float, float, float]:
    """OLS of ``y`` on ``x`` -> ``(slope, intercept, r2)``.

    ``r2`` is ``nan`` when ``y`` has zero variance (slope is then exactly 0).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise FitError("x and y must be 1-d arrays of equal length")
    if x.size < min_points:
        raise FitError(f"need at least {min_points} points, got {x.size}")
    if np.ptp(x) == 0:
        raise FitError("x values are all equal")
    if np.ptp(y) == 0:
        return 0.0, float(y[0]), math.nan
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    sxy = float(np.sum((x - xm) * (y - ym)))
    syy = float(np.sum((y - ym) ** 2))
    slope = sxy / sxx
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    return slope, float(intercept), 1.0 - float(np.sum(resid ** 2)) / syy


def loglog_fit(x, y=None, min_points: int = 3) -> tuple[float, float, float]:
    """Fit ``log y = slope * log x + intercept``.

    Accepts either two sequences or a single sequence of ``(x, y)`` pairs.
    """
    if y is None:
        pts = np.asarray(x, dtype=float).reshape(-1, 2)
        x, y = pts[:, 0], pts[:, 1]
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(~np.isfinite(y)) or np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("log-log fit needs finite, strictly positive values")
    return linear_fit(np.log(x), np.log(y), min_points)
