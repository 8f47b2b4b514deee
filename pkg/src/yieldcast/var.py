"""Reduced-form vector autoregression with Cholesky-identified dynamics.

Every equation shares the same regressors (an intercept and ``l`` lags of
all ``k`` variables), so equation-by-equation OLS coincides with the SUR
estimator and is what :func:`fit_var` computes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import DataError, Panel, as_array
from .diagnostics import durbin_watson

# Cholesky ordering of the stationary system used in the yield-spread study
DEFAULT_ORDERING = ("d_yieldsp", "d_termpr", "d_forward1yr", "ffr1yr", "rec_ind", "ted", "vix")


class NonPositiveDefiniteError(ValueError):
    pass


class ExplosiveVarError(RuntimeError):
    pass


@dataclass
class LagSelection:
    lag: int
    aic_trace: np.ndarray  # AIC for lags 1..max_lag on a common sample
    aic_no_lags: float
    weak_evidence: bool

    @property
    def lags(self) -> np.ndarray:
        return np.arange(1, len(self.aic_trace) + 1)


@dataclass
class VarFit:
    variable_names: tuple
    lag_order: int
    intercepts: np.ndarray  # (k,)
    coefficients: np.ndarray  # (l, k, k); coefficients[i-1][r, c] multiplies var c at lag i in eq r
    residual_cov: np.ndarray  # degrees-of-freedom corrected
    residual_cov_mle: np.ndarray
    aic: float
    residuals: Panel
    dw: np.ndarray
    std_errors: np.ndarray = field(repr=False, default=None)  # same shape as coefficients
    warnings: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.variable_names)

    @property
    def n_obs(self) -> int:
        return len(self.residuals)

    @property
    def params_per_equation(self) -> int:
        return self.k * self.lag_order + 1

    @property
    def n_params(self) -> int:
        return self.k * self.params_per_equation

    def companion(self) -> np.ndarray:
        return companion_matrix(self.coefficients)

    def spectral_radius(self) -> float:
        return float(np.abs(np.linalg.eigvals(self.companion())).max())

    def summary(self) -> dict:
        return {
            "variables": list(self.variable_names),
            "lag_order": self.lag_order,
            "n_obs": self.n_obs,
            "params_per_equation": self.params_per_equation,
            "n_params": self.n_params,
            "aic": float(self.aic),
            "durbin_watson": dict(zip(self.variable_names, map(float, self.dw))),
            "spectral_radius": self.spectral_radius(),
            "intercepts": dict(zip(self.variable_names, map(float, self.intercepts))),
            "warnings": list(self.warnings),
        }


@dataclass
class IrfResult:
    horizon: int
    responses: np.ndarray  # (H+1, k, k): [h, i, j] response of i to a 1-sd shock in j
    ordering: tuple


@dataclass
class FevdResult:
    shares: np.ndarray  # (H+1, k, k): [h, i, j] share of i's (h+1)-step error variance due to j
    ordering: tuple


def companion_matrix(coefficients: np.ndarray) -> np.ndarray:
    B = np.asarray(coefficients, dtype=float)
    l, k, _ = B.shape
    F = np.zeros((k * l, k * l))
    F[:k, :] = np.hstack(list(B))
    F[k:, :-k] = np.eye(k * (l - 1))
    return F


def _lagged_design(y: np.ndarray, l: int, start: int) -> np.ndarray:
    """Rows ``start..n-1`` of [1, y[t-1], ..., y[t-l]]."""
    n = len(y)
    cols = [np.ones(n - start)] + [y[start - i:n - i] for i in range(1, l + 1)]
    return np.column_stack(cols)


def _ols(X, Y):
    coef, _, rank, _ = np.linalg.lstsq(X, Y, rcond=None)
    if rank < X.shape[1]:
        raise DataError("singular regressor matrix in VAR estimation")
    return coef, Y - X @ coef


def _logdet(S) -> float:
    sign, ld = np.linalg.slogdet(S)
    if sign <= 0:
        raise DataError("residual covariance is singular")
    return float(ld)


def select_lag_order(panel, max_lag: int) -> LagSelection:
    """AIC lag choice over 1..max_lag, all candidates estimated on the same rows.

    Ties go to the smaller lag.  ``weak_evidence`` is set when the chosen
    model improves on the intercept-only model by less than the penalty of
    one extra lag block, ``2 k^2 / n``.
    """
    y = as_array(panel)
    if y.ndim != 2:
        raise DataError("lag selection needs a 2-D panel")
    n, k = y.shape
    if max_lag < 1:
        raise ValueError("max_lag must be at least 1")
    if n <= k * max_lag + 10:
        raise DataError(f"{n} rows are too few for max_lag={max_lag} with {k} variables")
    Y = y[max_lag:]
    m = len(Y)
    trace = np.empty(max_lag)
    for l in range(1, max_lag + 1):
        _, E = _ols(_lagged_design(y, l, max_lag), Y)
        trace[l - 1] = _logdet(E.T @ E / m) + 2 * (k * k * l + k) / m
    E0 = Y - Y.mean(axis=0)
    aic0 = _logdet(E0.T @ E0 / m) + 2 * k / m
    best = int(np.argmin(trace))
    weak = aic0 - trace[best] < 2 * k * k / m
    return LagSelection(best + 1, trace, float(aic0), bool(weak))


def fit_var(panel: Panel, l: int) -> VarFit:
    """Equation-by-equation OLS of a VAR(l) with intercepts."""
    y = as_array(panel)
    n, k = y.shape
    if l < 1:
        raise ValueError("lag order must be at least 1")
    if n - l <= k * l + 1:
        raise DataError(f"{n} rows are too few for a VAR({l}) in {k} variables")
    X = _lagged_design(y, l, l)
    Y = y[l:]
    coef, E = _ols(X, Y)
    m = len(Y)
    sse = E.T @ E
    sigma_mle = 0.5 * (sse + sse.T) / m
    sigma = sigma_mle * m / (m - k * l - 1)
    aic = _logdet(sigma_mle) + 2 * (k * k * l + k) / m

    B = coef[1:].T.reshape(k, l, k).transpose(1, 0, 2)
    xtx_inv = np.linalg.inv(X.T @ X)
    se = np.sqrt(np.outer(np.diag(xtx_inv)[1:], np.diag(sigma)))  # (k*l, k)
    se = se.T.reshape(k, l, k).transpose(1, 0, 2)

    names = tuple(getattr(panel, "names", [f"y{i}" for i in range(k)]))
    dates = getattr(panel, "dates", np.datetime64("2000-01-03") + np.arange(n))[l:]
    notes = []
    for j, name in enumerate(names):
        if np.unique(y[:, j]).size <= 2:
            notes.append(f"{name} is binary; Gaussian-innovation assumptions do not hold for its equation")
    fit = VarFit(names, l, coef[0].copy(), B, sigma, sigma_mle, float(aic),
                 Panel(names, dates, E), np.array([durbin_watson(E[:, j]) for j in range(k)]),
                 se, notes)
    if fit.spectral_radius() >= 1:
        fit.warnings.append("fitted VAR is not stationary (companion spectral radius >= 1)")
    return fit


def _step(fit: VarFit, recent: np.ndarray) -> np.ndarray:
    """One-step forecast from ``recent`` rows ordered oldest to newest."""
    out = fit.intercepts.copy()
    for i in range(fit.lag_order):
        out += fit.coefficients[i] @ recent[-1 - i]
    return out


def forecast_var(fit: VarFit, history: Panel, h: int, mode: str = "iterative",
                 actuals: Panel | None = None) -> Panel:
    """Forecast ``h`` rows beyond ``history``.

    ``iterative`` chains the model's own forecasts.  ``rolling_with_actuals``
    makes one-step forecasts for each row of ``actuals``, feeding the
    realized row back before the next step.
    """
    hist = as_array(history)
    l, k = fit.lag_order, fit.k
    if hist.ndim != 2 or hist.shape[1] != k:
        raise DataError(f"history must have {k} columns")
    if len(hist) < l:
        raise DataError(f"history has {len(hist)} rows, the VAR needs {l} presample rows")
    if mode == "iterative":
        if h < 1:
            raise ValueError("h must be at least 1")
        buf = list(hist[-l:])
        out = np.empty((h, k))
        for s in range(h):
            out[s] = _step(fit, np.asarray(buf[-l:]))
            buf.append(out[s])
        hd = getattr(history, "dates", None)
        if hd is not None and len(hd) > 1:
            dates = hd[-1] + np.arange(1, h + 1) * np.median(np.diff(hd))
        else:
            dates = np.datetime64("2000-01-03") + np.arange(len(hist), len(hist) + h)
    elif mode == "rolling_with_actuals":
        if actuals is None:
            raise ValueError("rolling_with_actuals needs the realized rows in `actuals`")
        act = as_array(actuals)
        h = len(act) if h is None else min(h, len(act))
        full = np.vstack([hist[-l:], act[:h]])
        out = np.array([_step(fit, full[s:s + l]) for s in range(h)])
        dates = getattr(actuals, "dates", np.datetime64("2000-01-03") + np.arange(len(act)))[:h]
    else:
        raise ValueError(f"unknown forecast mode {mode!r}")
    return Panel(fit.variable_names, dates, out)


def cholesky(cov) -> np.ndarray:
    """Lower-triangular ``P`` with positive diagonal and ``P P' = cov``."""
    a = np.asarray(cov, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise NonPositiveDefiniteError("matrix must be square")
    scale = max(np.abs(a).max(), 1e-300)
    if np.abs(a - a.T).max() > 1e-10 * scale:
        raise NonPositiveDefiniteError("matrix is not symmetric")
    P = np.zeros((n, n))
    for j in range(n):
        d = a[j, j] - P[j, :j] @ P[j, :j]
        if d <= 1e-12 * scale:
            raise NonPositiveDefiniteError(f"matrix is not positive definite (pivot {j} = {d:.3g})")
        P[j, j] = np.sqrt(d)
        P[j + 1:, j] = (a[j + 1:, j] - P[j + 1:, :j] @ P[j, :j]) / P[j, j]
    return P


def ma_coefficients(fit: VarFit, horizon: int) -> np.ndarray:
    """Psi_0..Psi_H with Psi_0 = I and Psi_h = sum_i B_i Psi_{h-i}."""
    k, l = fit.k, fit.lag_order
    psi = np.zeros((horizon + 1, k, k))
    psi[0] = np.eye(k)
    for h in range(1, horizon + 1):
        for i in range(1, min(h, l) + 1):
            psi[h] += fit.coefficients[i - 1] @ psi[h - i]
    return psi


def _permutation(fit: VarFit, ordering) -> np.ndarray:
    if ordering is None:
        return np.arange(fit.k)
    ordering = list(ordering)
    missing = set(ordering) ^ set(fit.variable_names)
    if missing or len(ordering) != fit.k:
        raise ValueError(f"ordering must be a permutation of {fit.variable_names}")
    return np.array([fit.variable_names.index(v) for v in ordering])


def _check_stationary(fit: VarFit, force: bool):
    rho = fit.spectral_radius()
    if rho >= 1:
        if not force:
            raise ExplosiveVarError(f"companion spectral radius {rho:.4f} >= 1")
        warnings.warn(f"explosive VAR (spectral radius {rho:.4f}); responses will not decay",
                      RuntimeWarning, stacklevel=3)


def irf(fit: VarFit, horizon: int, ordering=None, force: bool = False) -> IrfResult:
    """Orthogonalized impulse responses ``Psi_h P`` in the given Cholesky ordering."""
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    _check_stationary(fit, force)
    perm = _permutation(fit, ordering)
    psi = ma_coefficients(fit, horizon)[:, perm][:, :, perm]
    P = cholesky(fit.residual_cov[np.ix_(perm, perm)])
    return IrfResult(horizon, psi @ P, tuple(fit.variable_names[i] for i in perm))


def fevd(fit: VarFit, horizon: int, ordering=None, force: bool = False) -> FevdResult:
    res = irf(fit, horizon, ordering, force)
    contrib = np.cumsum(res.responses ** 2, axis=0)
    return FevdResult(contrib / contrib.sum(axis=2, keepdims=True), res.ordering)


def forecast_error_covariance(fit: VarFit, horizon: int) -> np.ndarray:
    """MSE matrix of the (horizon+1)-step forecast; does not depend on the ordering."""
    psi = ma_coefficients(fit, horizon)
    return np.einsum("hij,jk,hlk->il", psi, fit.residual_cov, psi)


def simulate_var(intercepts, coefficients, cov, n: int, seed=None, burn: int = 500) -> np.ndarray:
    """Gaussian VAR path, rows are time."""
    rng = np.random.default_rng(seed)
    B = np.asarray(coefficients, dtype=float)
    if B.ndim == 2:
        B = B[None]
    l, k, _ = B.shape
    c = np.asarray(intercepts, dtype=float) * np.ones(k)
    e = rng.standard_normal((n + burn, k)) @ np.linalg.cholesky(np.asarray(cov, float)).T
    y = np.zeros((n + burn + l, k))
    for t in range(l, n + burn + l):
        y[t] = c + e[t - l]
        for i in range(l):
            y[t] += B[i] @ y[t - 1 - i]
    return y[l + burn:]
