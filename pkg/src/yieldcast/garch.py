"""GARCH(p, q) conditional variance fitted to mean-model residuals.

Naming follows the yield-spread study this package reproduces: ``p`` counts
lagged *variance* terms (coefficients ``alpha``) and ``q`` counts lagged
*squared residual* terms (coefficients ``beta``)::

    sigma2[t] = alpha0 + sum_i alpha[i] sigma2[t-i] + sum_j beta[j] eps[t-j]**2

Most software swaps the two letters; :meth:`GarchFit.summary` prints both
labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import optimize, stats

from . import _numerics as nm
from .data import DataError, TimeSeries, as_array
from .diagnostics import Correlogram, DiagnosticError, correlogram


class GarchError(RuntimeError):
    pass


@dataclass(frozen=True)
class GarchSpec:
    p: int = 1
    q: int = 1

    def __post_init__(self):
        if self.p < 0 or self.q < 0 or self.p + self.q < 1:
            raise ValueError("need p, q >= 0 and p + q >= 1")


@dataclass
class GarchFit:
    spec: GarchSpec
    alpha0: float
    alpha: np.ndarray  # on lagged conditional variance
    beta: np.ndarray  # on lagged squared residuals
    loglik: float
    aic: float
    cond_variance: TimeSeries
    std_errors: dict
    boundary: bool = False
    _eps: np.ndarray = None

    @property
    def persistence(self) -> float:
        return float(self.alpha.sum() + self.beta.sum())

    @property
    def unconditional_variance(self) -> float:
        gap = 1 - self.persistence
        return self.alpha0 / gap if gap > 0 else np.inf

    @property
    def params(self) -> np.ndarray:
        return np.r_[self.alpha0, self.alpha, self.beta]

    def standardized_residuals(self) -> np.ndarray:
        return self._eps / np.sqrt(self.cond_variance.values)

    def summary(self) -> dict:
        names = garch_param_names(self.spec)
        out = {
            "order": [self.spec.p, self.spec.q],
            "coefficients": dict(zip(names, map(float, self.params))),
            "std_errors": {k: float(v) for k, v in self.std_errors.items()},
            "loglik": float(self.loglik),
            "aic": float(self.aic),
            "persistence": self.persistence,
            "boundary": self.boundary,
            # conventional (ARCH=alpha on eps^2, GARCH=beta on sigma^2) labels
            "conventional_labels": {
                **{f"alpha{j + 1}(eps^2 lag {j + 1})": float(b) for j, b in enumerate(self.beta)},
                **{f"beta{i + 1}(sigma^2 lag {i + 1})": float(a) for i, a in enumerate(self.alpha)},
            },
        }
        return out


def garch_param_names(spec: GarchSpec) -> list[str]:
    return (["alpha0"] + [f"alpha{i}" for i in range(1, spec.p + 1)]
            + [f"beta{j}" for j in range(1, spec.q + 1)])


@njit(cache=True)
def _variance_recursion(eps2, alpha0, alpha, beta, backcast):
    n = eps2.shape[0]
    p, q = alpha.shape[0], beta.shape[0]
    s2 = np.empty(n)
    for t in range(n):
        acc = alpha0
        for i in range(p):
            acc += alpha[i] * (s2[t - 1 - i] if t - 1 - i >= 0 else backcast)
        for j in range(q):
            acc += beta[j] * (eps2[t - 1 - j] if t - 1 - j >= 0 else backcast)
        s2[t] = acc
    return s2


def conditional_variance(eps, alpha0, alpha, beta, backcast=None) -> np.ndarray:
    """Variance path with presample sigma^2 and eps^2 set to ``backcast`` (sample variance)."""
    eps = as_array(eps)
    if backcast is None:
        backcast = float(eps.var())
    return _variance_recursion(eps * eps, float(alpha0), np.asarray(alpha, float),
                               np.asarray(beta, float), float(backcast))


def garch_loglik(eps, alpha0, alpha, beta, backcast=None) -> float:
    eps = as_array(eps)
    s2 = conditional_variance(eps, alpha0, alpha, beta, backcast)
    if np.any(s2 <= 0):
        return -np.inf
    return float(-0.5 * np.sum(np.log(2 * np.pi) + np.log(s2) + eps * eps / s2))


def _to_natural(x, spec):
    e = np.exp(np.clip(x[1:], -60, 60))
    coefs = e / (1 + e.sum())
    return np.r_[np.exp(x[0]), coefs]


def _to_unconstrained(params):
    params = np.asarray(params, float)
    c = np.maximum(params[1:], 1e-12)
    rest = 1 - c.sum()
    return np.r_[np.log(params[0]), np.log(c / rest)]


def _starts(var, spec):
    m = spec.p + spec.q
    starts = []
    for pers in (0.05, 0.5, 0.9, 0.98):
        for share_var in ((0.0, 0.5, 0.85) if spec.p and spec.q else (0.5,)):
            c = np.empty(m)
            if spec.p and spec.q:
                c[:spec.p] = pers * share_var / spec.p
                c[spec.p:] = pers * (1 - share_var) / spec.q
            else:
                c[:] = pers / m
            c = np.maximum(c, 1e-4)
            starts.append(np.r_[var * (1 - c.sum()), c])
    return starts


def fit_garch(residuals, spec: GarchSpec = GarchSpec(1, 1), check_mean: bool = True,
              tie_tol: float = 0.01, submodel_level: float | None = 0.05) -> GarchFit:
    """Gaussian maximum likelihood from a grid of starts.

    Positivity and covariance stationarity hold by construction: the
    intercept is ``exp(x0)`` and the lag weights are a softmax share of a
    total below one.  ``tie_tol`` is the log-likelihood gap under which two
    local optima count as tied; the least persistent of them is kept.

    Without an eps^2 loading the variance-lag weights are unidentified and the
    optimum runs to persistence 1, where a backcast-started recursion fits a
    spurious deterministic drift.  The submodel with no variance lags is
    therefore also fitted, and kept unless the full model improves the
    log-likelihood by more than half the chi-square(p) quantile at
    ``submodel_level``.  ``submodel_level=None`` returns the plain optimum.
    """
    eps = as_array(residuals)
    n = len(eps)
    if n <= 20 * (spec.p + spec.q + 1):
        raise DataError(f"{n} residuals are too few for GARCH{(spec.p, spec.q)}")
    sd = eps.std()
    if sd == 0:
        raise DataError("residuals have zero variance")
    if check_mean and abs(eps.mean()) >= 0.01 * sd:
        raise DataError(f"residual mean {eps.mean():.4g} is not ~0 (|mean| must be < 0.01 sd)")
    backcast = float(eps.var())

    def optimum(sub):
        """Best (negative loglik, natural params) over the start grid for ``sub``."""
        def nll(x):
            par = _to_natural(x, sub)
            val = -garch_loglik(eps, par[0], par[1:1 + sub.p], par[1 + sub.p:], backcast)
            return val if np.isfinite(val) else 1e300

        found = []
        for start in _starts(backcast, sub):
            res = optimize.minimize(nll, _to_unconstrained(start), method="BFGS",
                                    options={"maxiter": 1000, "gtol": 1e-6})
            if np.isfinite(res.fun) and res.fun < 1e300:
                found.append((res.fun, _to_natural(res.x, sub)))
        if not found:
            raise GarchError(f"GARCH{(sub.p, sub.q)} likelihood optimisation failed from every start")
        top = min(f[0] for f in found)
        return min((f for f in found if f[0] <= top + tie_tol), key=lambda f: f[1][1:].sum())

    fun, par = optimum(spec)
    if spec.p and submodel_level is not None:
        if spec.q:
            sub_fun, sub_par = optimum(GarchSpec(0, spec.q))
        else:
            a0 = float(np.mean(eps * eps))
            sub_fun, sub_par = -garch_loglik(eps, a0, np.zeros(0), np.zeros(0), backcast), [a0]
        if sub_fun - fun <= 0.5 * stats.chi2.ppf(1 - submodel_level, spec.p):
            fun, par = sub_fun, np.r_[sub_par[0], np.zeros(spec.p), sub_par[1:]]

    alpha0, alpha, beta = par[0], par[1:1 + spec.p], par[1 + spec.p:]
    ll = -fun
    s2 = conditional_variance(eps, alpha0, alpha, beta, backcast)

    def llf(pv):
        if pv[0] <= 0 or np.any(pv[1:] < 0) or pv[1:].sum() >= 1:
            return np.nan
        return garch_loglik(eps, pv[0], pv[1:1 + spec.p], pv[1 + spec.p:], backcast)

    se = nm.std_errors_from_hessian(nm.numerical_hessian(llf, par, rel_step=1e-3))
    k = 1 + spec.p + spec.q
    dates = getattr(residuals, "dates", np.datetime64("2000-01-03") + np.arange(n))
    return GarchFit(spec, float(alpha0), alpha, beta, float(ll), float(2 * k - 2 * ll),
                    TimeSeries("cond_variance", dates, s2),
                    dict(zip(garch_param_names(spec), map(float, se))),
                    boundary=bool(alpha.sum() + beta.sum() > 0.999), _eps=eps)


def forecast_variance(fit: GarchFit, h: int) -> np.ndarray:
    """sigma^2 for t+1..t+h, replacing unknown future eps^2 by its forecast."""
    if h < 1:
        raise ValueError("h must be at least 1")
    p, q = fit.spec.p, fit.spec.q
    s2_hist = list(fit.cond_variance.values)
    e2_hist = list(fit._eps ** 2)
    out = np.empty(h)
    for k in range(h):
        acc = fit.alpha0
        acc += sum(fit.alpha[i] * s2_hist[-1 - i] for i in range(p))
        acc += sum(fit.beta[j] * e2_hist[-1 - j] for j in range(q))
        out[k] = acc
        s2_hist.append(acc)
        e2_hist.append(acc)  # E[eps^2] = sigma^2
    return out


@dataclass
class ArchDiagnostic:
    correlogram: Correlogram
    exceed_fraction: float
    arch_effect: bool


def arch_effect_diagnostic(residuals, n_lags: int = 20, threshold: float = 0.25) -> ArchDiagnostic:
    """Correlogram of squared residuals; flags when > ``threshold`` of lags leave the band."""
    e = as_array(residuals)
    if np.var(e) == 0:
        raise DiagnosticError("zero-variance residuals")
    cg = correlogram(e * e, n_lags)
    frac = float(np.mean(np.abs(cg.acf[1:]) > cg.conf_band))
    return ArchDiagnostic(cg, frac, frac > threshold)


def simulate_garch(alpha0, alpha, beta, n: int, seed=None, burn: int = 1000) -> np.ndarray:
    """Gaussian GARCH path in this module's (alpha on variance, beta on eps^2) convention."""
    rng = np.random.default_rng(seed)
    alpha, beta = np.atleast_1d(alpha).astype(float), np.atleast_1d(beta).astype(float)
    p, q = len(alpha), len(beta)
    uncond = alpha0 / (1 - alpha.sum() - beta.sum())
    z = rng.standard_normal(n + burn)
    s2 = np.full(n + burn, uncond)
    eps = np.zeros(n + burn)
    for t in range(n + burn):
        acc = alpha0
        for i in range(p):
            acc += alpha[i] * (s2[t - 1 - i] if t - 1 - i >= 0 else uncond)
        for j in range(q):
            acc += beta[j] * (eps[t - 1 - j] ** 2 if t - 1 - j >= 0 else uncond)
        s2[t] = acc
        eps[t] = np.sqrt(acc) * z[t]
    return eps[burn:]
