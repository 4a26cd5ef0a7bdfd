"""Correlation statistics for size-versus-cost measurements."""

from __future__ import annotations

import numpy as np

from .errors import InsufficientData


def _ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks, ties sharing their average rank."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=float)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    dx = x - x.mean()
    dy = y - y.mean()
    denom = np.sqrt((dx * dx).sum() * (dy * dy).sum())
    if denom == 0:
        return float("nan")
    return float((dx * dy).sum() / denom)


def correlation_report(pairs) -> dict[str, float]:
    """Pearson r, Spearman rho, least-squares slope, and the RMSE of y/x.

    ``rmse`` measures how far the per-unit cost ``y / x`` strays from its
    mean (the root mean square of its deviations). It needs every x nonzero.
    """
    data = np.asarray(list(pairs), dtype=float)
    if data.ndim != 2 or data.shape[0] < 3 or data.shape[1] != 2:
        raise InsufficientData("need at least 3 (x, y) pairs")
    x, y = data[:, 0], data[:, 1]
    if np.all(x == x[0]):
        raise InsufficientData("x values are all equal")
    dx = x - x.mean()
    slope = float((dx * (y - y.mean())).sum() / (dx * dx).sum())
    if np.any(x == 0):
        rmse = float("nan")
    else:
        per_unit = y / x
        rmse = float(np.sqrt(np.mean((per_unit - per_unit.mean()) ** 2)))
    return {"pearson": _pearson(x, y), "spearman": _pearson(_ranks(x), _ranks(y)),
            "slope": slope, "rmse": rmse}
