"""ARIMA(p, d, q) with optional exogenous regressors, fitted by exact Gaussian MLE.

The model is ``Δ^d y_t = mean + Δ^d x_t' beta + u_t`` with ``u_t`` a
stationary, invertible ARMA(p, q).  The likelihood of ``u`` is evaluated
exactly with a Kalman filter on Harvey's state-space form, initialized at
the stationary covariance.  The innovation variance is concentrated out.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import comb

import numpy as np
from numba import njit
from scipy import optimize, signal, stats

from . import _numerics as nm
from .data import DataError, Panel, TimeSeries, as_array


class ArimaError(RuntimeError):
    pass


@dataclass(frozen=True)
class ArimaSpec:
    p: int = 1
    d: int = 0
    q: int = 0
    include_intercept: bool = True
    exog_names: tuple = ()

    def __post_init__(self):
        if min(self.p, self.d, self.q) < 0:
            raise ValueError("orders must be non-negative")
        if self.p + self.q == 0 and not self.include_intercept and not self.exog_names:
            raise ValueError("need p + q >= 1, an intercept or exogenous regressors")
        object.__setattr__(self, "exog_names", tuple(self.exog_names))

    @property
    def order(self):
        return (self.p, self.d, self.q)

    @property
    def n_mean_params(self):
        return int(self.include_intercept) + len(self.exog_names)


@dataclass
class ArimaFit:
    spec: ArimaSpec
    intercept: float  # long-run mean of the (differenced) series
    ar: np.ndarray
    ma: np.ndarray
    exog_beta: np.ndarray
    sigma2: float
    loglik: float
    aic: float
    std_errors: dict
    residuals: TimeSeries
    n_obs: int
    # state needed to forecast beyond the sample
    _tail: dict = field(default_factory=dict, repr=False)

    @property
    def mean(self) -> float:
        return self.intercept

    @property
    def params(self) -> np.ndarray:
        mean = [self.intercept] if self.spec.include_intercept else []
        return np.r_[mean, self.exog_beta, self.ar, self.ma]

    @property
    def n_params(self) -> int:
        return len(self.params) + 1

    def summary(self) -> dict:
        names = param_names(self.spec)
        return {
            "order": list(self.spec.order),
            "coefficients": dict(zip(names, map(float, self.params))),
            "std_errors": {k: float(v) for k, v in self.std_errors.items()},
            "sigma2": float(self.sigma2),
            "loglik": float(self.loglik),
            "aic": float(self.aic),
            "n_obs": int(self.n_obs),
        }


@dataclass
class ForecastResult:
    horizon: int
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float = 0.95
    se: np.ndarray = None


def param_names(spec: ArimaSpec) -> list[str]:
    names = ["mean"] if spec.include_intercept else []
    names += [f"beta.{n}" for n in spec.exog_names]
    names += [f"ar.L{i}" for i in range(1, spec.p + 1)]
    names += [f"ma.L{i}" for i in range(1, spec.q + 1)]
    return names


# ---------------------------------------------------------------- state space

def _system(phi, theta):
    r = max(len(phi), len(theta) + 1)
    T = np.zeros((r, r))
    T[:len(phi), 0] = phi
    T[:-1, 1:] = np.eye(r - 1)
    R = np.zeros(r)
    R[0] = 1.0
    R[1:len(theta) + 1] = theta
    return T, R


def _stationary_cov(T, R):
    r = len(R)
    Q = np.outer(R, R)
    A = np.eye(r * r) - np.kron(T, T)
    P = np.linalg.solve(A, Q.ravel()).reshape(r, r)
    return 0.5 * (P + P.T)


@njit(cache=True)
def _kalman(w, T, R, P0, a0):
    """Innovations v_t, variances F_t (unit sigma2) and the final predicted state."""
    n = w.shape[0]
    r = R.shape[0]
    v = np.empty(n)
    F = np.empty(n)
    a = a0.copy()
    P = P0.copy()
    Q = np.outer(R, R)
    steady = False
    K = np.zeros(r)
    f = 1.0
    for t in range(n):
        if not steady:
            f = P[0, 0]
            K = (T @ np.ascontiguousarray(P[:, 0])) / f
        v[t] = w[t] - a[0]
        F[t] = f
        a = T @ a + K * v[t]
        if not steady:
            Pn = T @ P @ T.T + Q - np.outer(K, K) * f
            Pn = 0.5 * (Pn + Pn.T)
            if np.max(np.abs(Pn - P)) < 1e-13:
                steady = True
            P = Pn
    return v, F, a, P


@njit(cache=True)
def _css_residuals(w, phi, theta):
    n = w.shape[0]
    p, q = phi.shape[0], theta.shape[0]
    e = np.zeros(n)
    for t in range(n):
        acc = w[t]
        for i in range(p):
            if t - 1 - i >= 0:
                acc -= phi[i] * w[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= 0:
                acc -= theta[j] * e[t - 1 - j]
        e[t] = acc
    return e


def _filter(w, phi, theta):
    T, R = _system(np.asarray(phi, float), np.asarray(theta, float))
    P0 = _stationary_cov(T, R)
    return _kalman(np.ascontiguousarray(w, dtype=float), T, R, P0, np.zeros(len(R)))


def _design(y, exog, d, include_intercept):
    """Differenced target and regressor matrix for the mean equation."""
    yd = np.diff(y, n=d) if d else y.copy()
    cols = []
    if include_intercept:
        cols.append(np.ones(len(yd)))
    if exog is not None:
        xd = np.diff(exog, n=d, axis=0) if d else exog
        cols.extend(xd.T)
    X = np.column_stack(cols) if cols else np.zeros((len(yd), 0))
    return yd, X


def _split(params, spec):
    m = spec.n_mean_params
    return params[:m], params[m:m + spec.p], params[m + spec.p:]


def _loglik_natural(params, yd, X, spec, sigma2=None):
    beta, phi, theta = _split(params, spec)
    w = yd - X @ beta
    v, F, _, _ = _filter(w, phi, theta)
    n = len(w)
    S = np.sum(v * v / F)
    slogF = np.sum(np.log(F))
    if sigma2 is None:
        s2 = S / n
        return -0.5 * (n * (np.log(2 * np.pi * s2) + 1) + slogF), s2
    return -0.5 * (n * np.log(2 * np.pi * sigma2) + slogF + S / sigma2), sigma2


def loglike(series, spec: ArimaSpec, params, sigma2: float | None = None, exog=None) -> float:
    """Exact Gaussian log-likelihood at ``params`` (ordered as :func:`param_names`).

    With ``sigma2=None`` the innovation variance is concentrated out.
    """
    y = as_array(series)
    ex = None if exog is None else np.atleast_2d(as_array(exog).T).T
    yd, X = _design(y, ex, spec.d, spec.include_intercept)
    return float(_loglik_natural(np.asarray(params, float), yd, X, spec, sigma2)[0])


# ---------------------------------------------------------------- estimation

def _to_natural(x, spec):
    m = spec.n_mean_params
    phi = nm.constrain_ar(x[m:m + spec.p]) if spec.p else np.zeros(0)
    theta = -nm.constrain_ar(x[m + spec.p:]) if spec.q else np.zeros(0)
    return np.r_[x[:m], phi, theta]


def _to_unconstrained(params, spec):
    m = spec.n_mean_params
    beta, phi, theta = _split(np.asarray(params, float), spec)
    return np.r_[beta, nm.unconstrain_ar(phi) if spec.p else [],
                 nm.unconstrain_ar(-theta) if spec.q else []]


def _hannan_rissanen(w, p, q):
    n = len(w)
    phi, theta = np.zeros(p), np.zeros(q)
    if p + q == 0:
        return phi, theta
    m = min(max(p, q) + int(np.ceil(np.log(n) ** 1.5)), n // 4)
    if q:
        Y = w[m:]
        L = np.column_stack([w[m - j:n - j] for j in range(1, m + 1)])
        a, *_ = np.linalg.lstsq(L, Y, rcond=None)
        e = np.r_[np.zeros(m), Y - L @ a]
    else:
        e = np.zeros(n)
    s = max(p, q) + (m if q else 0)
    cols = [w[s - i:n - i] for i in range(1, p + 1)] + [e[s - j:n - j] for j in range(1, q + 1)]
    Z = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(Z, w[s:], rcond=None)
    return coef[:p], coef[p:]


def _css_start(w, p, q):
    """Hannan-Rissanen guess polished by conditional sum of squares."""
    phi, theta = _hannan_rissanen(w, p, q)
    if p + q == 0:
        return phi, theta
    x0 = np.r_[nm.unconstrain_ar(phi) if p else [], nm.unconstrain_ar(-theta) if q else []]

    def css(x):
        ph = nm.constrain_ar(x[:p]) if p else np.zeros(0)
        th = -nm.constrain_ar(x[p:]) if q else np.zeros(0)
        e = _css_residuals(w, ph, th)
        return np.log(e @ e)

    res = optimize.minimize(css, x0, method="BFGS", options={"maxiter": 50})
    x = res.x if np.isfinite(res.fun) else x0
    return (nm.constrain_ar(x[:p]) if p else np.zeros(0),
            -nm.constrain_ar(x[p:]) if q else np.zeros(0))


def _prepare(series, spec, exog):
    y = as_array(series)
    ex = None
    if spec.exog_names:
        if exog is None:
            raise DataError("spec names exogenous regressors but none were supplied")
        if isinstance(exog, Panel):
            exog = exog.select(spec.exog_names)
        ex = np.atleast_2d(as_array(exog).T).T
        if len(ex) != len(y):
            raise DataError("exogenous panel is not aligned with the series")
    elif exog is not None:
        raise DataError("exogenous data supplied but spec.exog_names is empty")
    return y, ex


def fit(series, spec: ArimaSpec, exog=None, start_params=None, maxiter: int = 2000,
        compute_se: bool = True) -> ArimaFit:
    """Exact maximum likelihood estimate of an ARIMA(p, d, q) (+ regressors).

    ``start_params`` (natural scale) skips the CSS/simplex stage and goes
    straight to quasi-Newton; walk-forward refits use it as a warm start.
    """
    y, ex = _prepare(series, spec, exog)
    yd, X = _design(y, ex, spec.d, spec.include_intercept)
    n = len(yd)
    k_mean = X.shape[1]
    if n <= k_mean + spec.p + spec.q + 10:
        raise DataError(f"{n} observations after differencing is too few for {spec}")
    if k_mean and np.linalg.matrix_rank(X) < k_mean:
        raise ArimaError("exogenous regressors are collinear")

    beta0 = np.linalg.lstsq(X, yd, rcond=None)[0] if k_mean else np.zeros(0)

    if spec.p + spec.q == 0:
        # iid errors: the MLE is ordinary least squares
        e = yd - X @ beta0
        sigma2 = float(e @ e / n)
        ll = np.inf if sigma2 == 0 else -0.5 * n * (np.log(2 * np.pi * sigma2) + 1)
        se = np.full(k_mean, np.nan)
        if sigma2 > 0 and k_mean:
            se = np.sqrt(np.diag(sigma2 * np.linalg.inv(X.T @ X)))
        return _assemble(spec, beta0, np.zeros(0), np.zeros(0), sigma2, ll, se, e,
                         series, y, ex, yd, X)

    if start_params is not None:
        x0 = _to_unconstrained(start_params, spec)
    else:
        phi0, theta0 = _css_start(yd - X @ beta0, spec.p, spec.q)
        x0 = np.r_[beta0, nm.unconstrain_ar(phi0) if spec.p else [],
                   nm.unconstrain_ar(-theta0) if spec.q else []]

    def nll(x):
        val = -_loglik_natural(_to_natural(x, spec), yd, X, spec)[0]
        return val if np.isfinite(val) else 1e300

    scale = max(abs(nll(x0)), 1.0)
    if start_params is None:
        nmres = optimize.minimize(nll, x0, method="Nelder-Mead",
                                  options={"maxiter": 200 * len(x0), "xatol": 1e-6,
                                           "fatol": 1e-10 * scale})
        x0 = nmres.x
    res = optimize.minimize(nll, x0, method="BFGS",
                            options={"maxiter": maxiter, "gtol": 1e-6 * np.sqrt(scale)})
    if not np.isfinite(res.fun) or res.fun >= 1e300:
        raise ArimaError(f"likelihood optimisation failed: {res.message}")
    if not res.success and res.nit >= maxiter:
        raise ArimaError(f"no convergence after {maxiter} iterations")

    params = _to_natural(res.x, spec)
    beta, phi, theta = _split(params, spec)
    if nm.min_root_modulus(phi) <= 1 or nm.min_root_modulus(theta, sign=1.0) <= 1:
        raise ArimaError("optimum violates stationarity or invertibility")
    ll, sigma2 = _loglik_natural(params, yd, X, spec)
    v, F, _, _ = _filter(yd - X @ beta, phi, theta)

    def llf(p_):
        try:
            val = _loglik_natural(p_, yd, X, spec)[0]
        except np.linalg.LinAlgError:
            return np.nan
        return val

    se = np.full(len(params), np.nan)
    if compute_se:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            se = nm.std_errors_from_hessian(nm.numerical_hessian(llf, params))
    return _assemble(spec, beta, phi, theta, sigma2, ll, se, v, series, y, ex, yd, X)


def _assemble(spec, beta, phi, theta, sigma2, ll, se, resid, series, y, ex, yd, X):
    k_int = int(spec.include_intercept)
    intercept = float(beta[0]) if k_int else 0.0
    names = param_names(spec)
    dates = getattr(series, "dates", None)
    rdates = dates[spec.d:] if dates is not None else np.datetime64("2000-01-03") + np.arange(len(resid))
    n_params = len(beta) + len(phi) + len(theta) + 1
    fit_ = ArimaFit(
        spec=spec, intercept=intercept, ar=np.asarray(phi), ma=np.asarray(theta),
        exog_beta=np.asarray(beta[k_int:]), sigma2=float(sigma2), loglik=float(ll),
        aic=float(2 * n_params - 2 * ll),
        std_errors=dict(zip(names, map(float, se))),
        residuals=TimeSeries(getattr(series, "name", "y") + ".resid", rdates, resid),
        n_obs=len(yd),
    )
    fit_._tail = {"y": y, "exog": ex}
    return fit_


def fit_sarimax(series, exog: Panel, order=(2, 1, 2), include_intercept: bool = False,
                **kwargs) -> ArimaFit:
    """Non-seasonal ARIMAX: ARIMA errors around a regression on ``exog``."""
    p, d, q = order
    spec = ArimaSpec(p, d, q, include_intercept, tuple(exog.names))
    return fit(series, spec, exog, **kwargs)


# ---------------------------------------------------------------- forecasting

def psi_weights(phi, theta, d: int, h: int) -> np.ndarray:
    """MA(infinity) weights of the integrated model ``phi(B)(1-B)^d y = theta(B) e``."""
    ar = np.r_[1.0, -np.asarray(phi, float)]
    for _ in range(d):
        ar = np.convolve(ar, [1.0, -1.0])
    ma = np.r_[1.0, np.asarray(theta, float)]
    psi = np.zeros(h)
    for j in range(h):
        acc = ma[j] if j < len(ma) else 0.0
        for i in range(1, min(j, len(ar) - 1) + 1):
            acc -= ar[i] * psi[j - i]
        psi[j] = acc
    return psi


def _integrate(diff_path, history, d):
    """Turn forecasts of Δ^d y into level forecasts given the observed history."""
    out = np.asarray(diff_path, float)
    for k in range(d - 1, -1, -1):
        last = np.diff(history, n=k)[-1] if k else history[-1]
        out = last + np.cumsum(out)
    return out


def _check_exog(fit_, exog_future, h):
    if fit_.spec.exog_names:
        if exog_future is None:
            raise DataError("forecast needs future exogenous values")
        if isinstance(exog_future, Panel):
            exog_future = exog_future.select(fit_.spec.exog_names)
        xf = np.atleast_2d(as_array(exog_future).T).T
        if len(xf) < h:
            raise DataError(f"need {h} rows of future exogenous values, got {len(xf)}")
        return xf[:h]
    if exog_future is not None:
        raise DataError("model has no exogenous regressors")
    return None


def forecast(fit_: ArimaFit, h: int, exog_future=None, level: float = 0.95,
             history=None, exog_history=None) -> ForecastResult:
    """h-step forecasts from the end of the estimation sample (or of ``history``)."""
    if h < 1:
        raise ValueError("h must be at least 1")
    spec = fit_.spec
    xf = _check_exog(fit_, exog_future, h)
    y = fit_._tail["y"] if history is None else as_array(history)
    ex = fit_._tail["exog"] if exog_history is None else np.atleast_2d(as_array(exog_history).T).T
    yd, X = _design(y, ex, spec.d, spec.include_intercept)
    beta = fit_.params[:spec.n_mean_params]
    w = yd - X @ beta
    T, R = _system(fit_.ar, fit_.ma)
    _, _, a, _ = _kalman(np.ascontiguousarray(w), T, R, _stationary_cov(T, R), np.zeros(len(R)))

    wf = np.empty(h)
    for j in range(h):
        wf[j] = a[0]
        a = T @ a
    mean_future = np.full(h, fit_.intercept if spec.include_intercept else 0.0)
    if xf is not None:
        full = np.vstack([ex, xf])
        xd = np.diff(full, n=spec.d, axis=0) if spec.d else full
        mean_future = mean_future + xd[-h:] @ fit_.exog_beta
    path = wf + mean_future
    if spec.d:
        path = _integrate(path, y, spec.d)
    psi = psi_weights(fit_.ar, fit_.ma, spec.d, h)
    se = np.sqrt(fit_.sigma2 * np.cumsum(psi ** 2))
    z = stats.norm.ppf(0.5 + level / 2)
    return ForecastResult(h, path, path - z * se, path + z * se, level, se)


def one_step_predictions(fit_: ArimaFit, series, exog=None) -> np.ndarray:
    """Kalman one-step-ahead predictions of ``series`` under fixed parameters.

    Entry t uses observations before t only; the first ``d`` entries are NaN.
    """
    spec = fit_.spec
    y, ex = _prepare(series, spec, exog)
    yd, X = _design(y, ex, spec.d, spec.include_intercept)
    beta = fit_.params[:spec.n_mean_params]
    w = yd - X @ beta
    v, _, _, _ = _filter(w, fit_.ar, fit_.ma)
    pred_d = yd - v  # predicted Δ^d y
    pred = np.full(len(y), np.nan)
    # y_t = Δ^d y_t - sum_{k>=1} (-1)^k C(d,k) y_{t-k}
    carry = np.zeros(len(yd))
    for k in range(1, spec.d + 1):
        carry -= (-1) ** k * comb(spec.d, k) * y[spec.d - k:len(y) - k]
    pred[spec.d:] = pred_d + carry
    return pred


@dataclass
class WalkForwardResult:
    dates: np.ndarray
    actual: np.ndarray
    predicted: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    rmse: float
    refit: str
    fit: ArimaFit = None


def _split_index(n, split):
    if isinstance(split, float) and 0 < split < 1:
        return int(round(n * split))
    if isinstance(split, (int, np.integer)):
        return int(split)
    raise ValueError(f"unsupported split {split!r}")


def walk_forward(series, spec: ArimaSpec, split=0.8, exog=None, refit: str = "every_step",
                 level: float = 0.95) -> WalkForwardResult:
    """Rolling-origin one-step forecasts over the test segment.

    ``split`` is a train fraction, a row index, or a date (first test date).
    ``every_step`` re-estimates at each origin (warm-started);
    ``fixed_params`` keeps the training estimate and only re-filters.
    """
    y, ex = _prepare(series, spec, exog)
    n = len(y)
    if isinstance(split, (str, np.datetime64)):
        dates = getattr(series, "dates")
        n_train = int(np.searchsorted(dates, np.datetime64(split, "D")))
    else:
        n_train = _split_index(n, split)
    if not 0 < n_train < n:
        raise DataError("test segment is empty")
    z = stats.norm.ppf(0.5 + level / 2)
    dates = getattr(series, "dates", np.arange(n))

    base = fit(y[:n_train], spec, None if ex is None else ex[:n_train])
    if refit == "fixed_params":
        pred = one_step_predictions(base, y, ex)[n_train:]
        se = np.full(n - n_train, np.sqrt(base.sigma2))
    elif refit == "every_step":
        pred = np.empty(n - n_train)
        se = np.empty(n - n_train)
        current = base
        for i, t in enumerate(range(n_train, n)):
            if i:
                try:
                    current = fit(y[:t], spec, None if ex is None else ex[:t],
                                  start_params=current.params, compute_se=False)
                except (ArimaError, DataError) as exc:
                    raise ArimaError(f"refit failed at test step {i} (row {t}): {exc}") from exc
            fc = forecast(current, 1, None if ex is None else ex[t:t + 1])
            pred[i] = fc.mean[0]
            se[i] = fc.se[0]
    else:
        raise ValueError("refit must be 'every_step' or 'fixed_params'")
    actual = y[n_train:]
    rmse = float(np.sqrt(np.mean((actual - pred) ** 2)))
    return WalkForwardResult(dates[n_train:], actual, pred, pred - z * se, pred + z * se,
                             rmse, refit, base)


def simulate_arma(phi, theta, n: int, sigma: float = 1.0, mean: float = 0.0, seed=None,
                  burn: int = 500) -> np.ndarray:
    """Gaussian ARMA sample path (for tests and demos)."""
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n + burn) * sigma
    x = signal.lfilter(np.r_[1.0, theta], np.r_[1.0, -np.asarray(phi, float)], e)
    return x[burn:] + mean
