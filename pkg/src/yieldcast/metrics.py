"""Forecast accuracy metrics."""

import numpy as np

from .data import as_array


def rmse(actual, predicted) -> float:
    """Root mean squared error of equal-length, non-empty inputs."""
    a, p = as_array(actual), as_array(predicted)
    if a.shape != p.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {p.shape}")
    if a.size == 0:
        raise ValueError("rmse of empty input")
    e = a - p
    return float(np.sqrt(np.mean(e * e)))
