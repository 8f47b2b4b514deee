"""Stationarity, normality and serial-correlation diagnostics.

ADF with AIC lag selection and MacKinnon (1994) response-surface p-values,
D'Agostino-Pearson K^2, ACF/PACF, Durbin-Watson, Granger F-tests and
order-statistic summaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .data import as_array


class DiagnosticError(ValueError):
    pass


@dataclass
class AdfResult:
    statistic: float
    p_value: float
    lags_used: int
    n_obs: int
    aic_trace: dict = field(default_factory=dict, repr=False)


@dataclass
class NormalityResult:
    k2_statistic: float
    p_value: float
    skewness: float
    kurtosis: float  # excess


@dataclass
class Correlogram:
    lags: np.ndarray
    acf: np.ndarray
    pacf: np.ndarray
    conf_band: float


@dataclass
class GrangerResult:
    cause: str
    effect: str
    max_lag: int
    f_statistic: float
    p_value: float
    df: tuple = ()
    trace: dict = field(default_factory=dict, repr=False)


# MacKinnon (1994) response surface, constant-only regression, one I(1) series.
_TAU_STAR = -1.61
_TAU_MIN = -18.83
_TAU_MAX = 2.74
_SMALLP = np.array([2.1659, 1.4412, 3.8269e-2])
_LARGEP = np.array([1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2])


def mackinnon_p(tau: float) -> float:
    """Approximate asymptotic p-value of the constant-only ADF t-statistic."""
    if tau > _TAU_MAX:
        return 1.0
    if tau < _TAU_MIN:
        return 0.0
    coef = _SMALLP if tau <= _TAU_STAR else _LARGEP
    return float(stats.norm.cdf(np.polynomial.polynomial.polyval(tau, coef)))


def _ols(X, y):
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise DiagnosticError("singular regression matrix")
    resid = y - X @ beta
    return beta, resid


def _adf_design(x, lags, start):
    """ADF regression rows for t = start..n-1 (indices into x)."""
    dx = np.diff(x)
    # row for observation t uses dx[t-1] as target, x[t-1] as level
    t = np.arange(start, len(x))
    cols = [x[t - 1], np.ones(len(t))]
    for j in range(1, lags + 1):
        cols.append(dx[t - 1 - j])
    return np.column_stack(cols), dx[t - 1]


def adf_test(series, max_lags: int | None = None, regression: str = "constant",
             autolag: str | None = "aic") -> AdfResult:
    """Augmented Dickey-Fuller test with a constant.

    Lags are chosen by AIC on a common sample trimmed for ``max_lags``; the
    final regression is then re-estimated on all rows available for the
    chosen lag.
    """
    if regression not in ("constant", "c"):
        raise ValueError("only the constant-only regression is implemented")
    x = as_array(series)
    n = len(x)
    if max_lags is None:
        max_lags = int(np.ceil(12 * (n / 100) ** 0.25))
    if n < max_lags + 10:
        raise DiagnosticError(f"series of length {n} too short for max_lags={max_lags}")

    trace = {}
    if autolag is None:
        best = max_lags
    else:
        start = max_lags + 1
        for lag in range(max_lags + 1):
            X, y = _adf_design(x, lag, start)
            _, e = _ols(X, y)
            m = len(y)
            ll = -0.5 * m * (np.log(2 * np.pi * (e @ e) / m) + 1)
            trace[lag] = 2 * X.shape[1] - 2 * ll
        best = min(trace, key=lambda k: (trace[k], k))

    X, y = _adf_design(x, best, best + 1)
    beta, e = _ols(X, y)
    m, k = X.shape
    s2 = (e @ e) / (m - k)
    cov = s2 * np.linalg.inv(X.T @ X)
    tau = beta[0] / np.sqrt(cov[0, 0])
    return AdfResult(float(tau), mackinnon_p(tau), int(best), int(m), trace)


def dagostino_k2(series) -> NormalityResult:
    """D'Agostino-Pearson omnibus test from transformed skewness and kurtosis."""
    x = as_array(series)
    n = len(x)
    if n < 20:
        raise DiagnosticError("D'Agostino K^2 needs at least 20 observations")
    d = x - x.mean()
    m2 = np.mean(d ** 2)
    if m2 <= 0:
        raise DiagnosticError("zero-variance series")
    g1 = np.mean(d ** 3) / m2 ** 1.5
    b2 = np.mean(d ** 4) / m2 ** 2

    # skewness transform (D'Agostino 1970)
    y = g1 * np.sqrt((n + 1) * (n + 3) / (6.0 * (n - 2)))
    beta2 = (3.0 * (n * n + 27 * n - 70) * (n + 1) * (n + 3)
             / ((n - 2.0) * (n + 5) * (n + 7) * (n + 9)))
    w2 = -1 + np.sqrt(2 * (beta2 - 1))
    delta = 1 / np.sqrt(0.5 * np.log(w2))
    alpha = np.sqrt(2.0 / (w2 - 1))
    y = np.where(y == 0, 1, y)
    z_skew = delta * np.log(y / alpha + np.sqrt((y / alpha) ** 2 + 1))

    # kurtosis transform (Anscombe & Glynn 1983)
    e_b2 = 3.0 * (n - 1) / (n + 1)
    var_b2 = 24.0 * n * (n - 2) * (n - 3) / ((n + 1) ** 2 * (n + 3) * (n + 5))
    xk = (b2 - e_b2) / np.sqrt(var_b2)
    sqrt_beta1 = (6.0 * (n * n - 5 * n + 2) / ((n + 7) * (n + 9))
                  * np.sqrt(6.0 * (n + 3) * (n + 5) / (n * (n - 2) * (n - 3))))
    a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + np.sqrt(1 + 4.0 / sqrt_beta1 ** 2))
    term1 = 1 - 2 / (9.0 * a)
    denom = 1 + xk * np.sqrt(2 / (a - 4.0))
    term2 = np.sign(denom) * np.cbrt((1 - 2.0 / a) / np.abs(denom))
    z_kurt = (term1 - term2) / np.sqrt(2 / (9.0 * a))

    k2 = float(z_skew ** 2 + z_kurt ** 2)
    return NormalityResult(k2, float(stats.chi2.sf(k2, 2)), float(g1), float(b2 - 3))


def autocorrelation(x, n_lags: int) -> np.ndarray:
    d = x - x.mean()
    c0 = d @ d
    if c0 <= 0:
        raise DiagnosticError("zero-variance series")
    return np.array([d[k:] @ d[:len(d) - k] for k in range(n_lags + 1)]) / c0


def durbin_levinson(acf: np.ndarray) -> np.ndarray:
    """Partial autocorrelations 0..K from autocorrelations 0..K."""
    K = len(acf) - 1
    pacf = np.zeros(K + 1)
    pacf[0] = 1.0
    if K == 0:
        return pacf
    phi = np.zeros(K + 1)
    phi[1] = acf[1]
    pacf[1] = acf[1]
    v = 1 - acf[1] ** 2
    for k in range(2, K + 1):
        a = (acf[k] - phi[1:k] @ acf[k - 1:0:-1]) / v
        new = phi.copy()
        new[1:k] = phi[1:k] - a * phi[k - 1:0:-1]
        new[k] = a
        phi = new
        pacf[k] = a
        v *= 1 - a * a
    return pacf


def correlogram(series, n_lags: int = 40) -> Correlogram:
    x = as_array(series)
    n = len(x)
    if n_lags >= n / 2:
        raise DiagnosticError(f"n_lags={n_lags} must be below half the length {n}")
    acf = autocorrelation(x, n_lags)
    return Correlogram(np.arange(n_lags + 1), acf, durbin_levinson(acf), 1.96 / np.sqrt(n))


def durbin_watson(residuals) -> float:
    e = as_array(residuals)
    if len(e) < 2:
        raise DiagnosticError("need at least two residuals")
    ss = e @ e
    if ss == 0:
        raise DiagnosticError("all-zero residuals")
    return float(np.sum(np.diff(e) ** 2) / ss)


def _lagmat(x, lags, start):
    return np.column_stack([x[start - j:len(x) - j] for j in range(1, lags + 1)])


def granger_causality(effect, cause, max_lag: int, trace: bool = False) -> GrangerResult:
    """F-test that lags 1..max_lag of ``cause`` add nothing to an AR(max_lag) of ``effect``.

    With ``trace=True`` the test is also run at every lag 1..max_lag on the
    same trimmed sample and stored in ``result.trace`` as ``{lag: (F, p)}``.
    """
    y, x = as_array(effect), as_array(cause)
    if len(y) != len(x):
        raise DiagnosticError("effect and cause must be aligned")
    n = len(y)
    if n <= 2 * max_lag + 10:
        raise DiagnosticError("insufficient observations for the requested lag")

    def test(L):
        start = max_lag
        target = y[start:]
        ones = np.ones((len(target), 1))
        Xr = np.hstack([ones, _lagmat(y, L, start)])
        Xu = np.hstack([Xr, _lagmat(x, L, start)])
        if np.linalg.matrix_rank(Xu) < Xu.shape[1]:
            raise DiagnosticError("collinear regressors in Granger regression")
        _, er = _ols(Xr, target)
        _, eu = _ols(Xu, target)
        df_den = len(target) - Xu.shape[1]
        rss_u = eu @ eu
        F = max(((er @ er) - rss_u) / L / (rss_u / df_den), 0.0)
        return float(F), float(stats.f.sf(F, L, df_den)), (L, df_den)

    F, p, df = test(max_lag)
    tr = {L: test(L)[:2] for L in range(1, max_lag + 1)} if trace else {}
    return GrangerResult(getattr(cause, "name", "x"), getattr(effect, "name", "y"),
                         max_lag, F, p, df, tr)


def descriptive_stats(series) -> dict:
    """Count, mean, sample sd, min, quartiles (linear interpolation) and max."""
    x = as_array(series)
    if len(x) == 0:
        raise DiagnosticError("empty series")
    q25, q50, q75 = np.percentile(x, [25, 50, 75])
    return {
        "count": len(x),
        "mean": float(x.mean()),
        "sd": float(x.std(ddof=1)) if len(x) > 1 else 0.0,
        "min": float(x.min()),
        "q25": float(q25),
        "median": float(q50),
        "q75": float(q75),
        "max": float(x.max()),
    }
