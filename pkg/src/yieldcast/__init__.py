"""Yield-spread forecasting toolkit.

Econometric models (Vasicek, ARIMA/SARIMAX, GARCH, VAR), principal
components, diagnostics and from-scratch neural networks, plus a harness
that compares them on one-step test RMSE.
"""

from . import arima, data, diagnostics, garch, harness, metrics, neural, pca, var, vasicek
from .data import Panel, TimeSeries
from .metrics import rmse

__version__ = "0.1.0"

__all__ = ["arima", "data", "diagnostics", "garch", "harness", "metrics", "neural", "pca",
           "var", "vasicek", "Panel", "TimeSeries", "rmse", "__version__"]
