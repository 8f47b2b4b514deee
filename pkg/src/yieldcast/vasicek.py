"""Vasicek mean-reverting model: exact simulation and closed-form MLE.

The SDE ``dr = k (theta - r) dt + sigma dW`` has a Gaussian AR(1) transition
over a step ``dt``::

    r[i] = r[i-1] * exp(-k dt) + theta * (1 - exp(-k dt)) + sd * Z
    sd**2 = sigma**2 * (1 - exp(-2 k dt)) / (2 k)

so simulation carries no discretization error and calibration reduces to
an AR(1) regression.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal

from .data import DataError, as_array

TRADING_DAYS = 252


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class VasicekParams:
    k: float
    theta: float
    sigma: float

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError(f"mean-reversion speed must be positive, got {self.k}")
        if not self.sigma > 0:
            raise ValueError(f"volatility must be positive, got {self.sigma}")


@dataclass(frozen=True)
class SimulationSpec:
    r0: float
    dt: float = 1.0 / TRADING_DAYS
    n_steps: int = TRADING_DAYS
    n_paths: int = 10
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_steps < 1 or self.n_paths < 1:
            raise ValueError("n_steps and n_paths must be at least 1")


@dataclass
class PathEnsemble:
    paths: np.ndarray  # (n_paths, n_steps + 1)
    spec: SimulationSpec
    params: VasicekParams

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.spec.n_steps + 1) * self.spec.dt


@dataclass
class VasicekFit:
    params: VasicekParams
    std_errors: dict
    loglik: float
    dt: float
    n_obs: int
    ar: dict = field(default_factory=dict)


def conditional_mean(r0, t, params: VasicekParams):
    decay = np.exp(-params.k * np.asarray(t, dtype=float))
    return r0 * decay + params.theta * (1 - decay)


def conditional_variance(t, params: VasicekParams):
    t = np.asarray(t, dtype=float)
    return params.sigma ** 2 * (1 - np.exp(-2 * params.k * t)) / (2 * params.k)


def path_generator(seed: int, path_index: int) -> np.random.Generator:
    """Counter-based Philox stream for one path, independent of the ensemble size."""
    ss = np.random.SeedSequence(seed, spawn_key=(path_index,))
    return np.random.Generator(np.random.Philox(ss))


def simulate_paths(params: VasicekParams, spec: SimulationSpec) -> PathEnsemble:
    a = np.exp(-params.k * spec.dt)
    b = params.theta * (1 - a)
    sd = np.sqrt(conditional_variance(spec.dt, params))
    z = np.stack([path_generator(spec.seed, i).standard_normal(spec.n_steps)
                  for i in range(spec.n_paths)])
    # r[t+1] = a r[t] + (b + sd z[t]) run as a first-order recursive filter
    zi = np.full((spec.n_paths, 1), a * spec.r0)
    levels, _ = signal.lfilter([1.0], [1.0, -a], b + sd * z, axis=1, zi=zi)
    paths = np.empty((spec.n_paths, spec.n_steps + 1))
    paths[:, 0] = spec.r0
    paths[:, 1:] = levels
    return PathEnsemble(paths, spec, params)


def loglik(params: VasicekParams, series, dt: float = 1.0 / TRADING_DAYS) -> float:
    """Exact Gaussian log-likelihood of observations 1..n conditional on the first."""
    r = as_array(series)
    mean = conditional_mean(r[:-1], dt, params)
    var = conditional_variance(dt, params)
    e = r[1:] - mean
    return float(-0.5 * (len(e) * np.log(2 * np.pi * var) + (e @ e) / var))


def calibrate_mle(series, dt: float = 1.0 / TRADING_DAYS) -> VasicekFit:
    """Closed-form conditional MLE via the AR(1) form ``r[t] = a r[t-1] + b + e``."""
    r = as_array(series)
    n = len(r) - 1
    if len(r) < 50:
        raise DataError("Vasicek calibration needs at least 50 observations")
    if np.ptp(r) == 0:
        raise DataError("series is constant")
    x, y = r[:-1], r[1:]
    X = np.column_stack([x, np.ones(n)])
    (a, b), *_ = np.linalg.lstsq(X, y, rcond=None)
    e = y - X @ np.array([a, b])
    s2 = (e @ e) / n
    if s2 <= 1e-14 * max(np.var(r), 1e-300):
        raise CalibrationError("degenerate residual variance: sigma estimate collapses to 0")
    if a >= 1:
        raise CalibrationError("non-stationary sample, k undefined (AR coefficient >= 1)")
    if a <= 0:
        raise CalibrationError("AR coefficient <= 0 has no Vasicek counterpart")

    k = -np.log(a) / dt
    theta = b / (1 - a)
    sigma2 = s2 * 2 * k / (1 - a ** 2)
    params = VasicekParams(float(k), float(theta), float(np.sqrt(sigma2)))

    # delta method from the AR(1) information matrix
    cov_ab = s2 * np.linalg.inv(X.T @ X)
    var_s2 = 2 * s2 ** 2 / n
    J = np.zeros((3, 3))  # rows (k, theta, sigma), cols (a, b, s2)
    J[0, 0] = -1 / (a * dt)
    J[1, 0] = b / (1 - a) ** 2
    J[1, 1] = 1 / (1 - a)
    sigma = np.sqrt(sigma2)
    # sigma^2 = s2 * 2k / (1 - a^2), k = -ln(a)/dt
    dsig2_da = s2 * (2 * J[0, 0] * (1 - a ** 2) + 2 * k * 2 * a) / (1 - a ** 2) ** 2
    J[2, 0] = dsig2_da / (2 * sigma)
    J[2, 2] = (2 * k / (1 - a ** 2)) / (2 * sigma)
    cov = np.zeros((3, 3))
    cov[:2, :2] = cov_ab
    cov[2, 2] = var_s2
    se = np.sqrt(np.diag(J @ cov @ J.T))

    return VasicekFit(params, {"k": float(se[0]), "theta": float(se[1]), "sigma": float(se[2])},
                      loglik(params, r, dt), dt, n,
                      {"a": float(a), "b": float(b), "s2": float(s2)})


SCENARIOS = ("baseline", "r0_far", "k_x10", "sigma_x5")


def scenario_grid(params: VasicekParams, r0: float, theta: float = 1.75,
                  far_r0: float = -1.0, n_steps: int = TRADING_DAYS, n_paths: int = 10,
                  dt: float = 1.0 / TRADING_DAYS, seed: int = 0) -> dict[str, PathEnsemble]:
    """The four ensembles: calibrated baseline, distant start, 10x speed, 5x volatility."""
    base = replace(params, theta=theta)
    spec = SimulationSpec(r0=r0, dt=dt, n_steps=n_steps, n_paths=n_paths, seed=seed)
    far = replace(spec, r0=far_r0)
    return {
        "baseline": simulate_paths(base, spec),
        "r0_far": simulate_paths(base, far),
        "k_x10": simulate_paths(replace(base, k=base.k * 10), far),
        "sigma_x5": simulate_paths(replace(base, sigma=base.sigma * 5), far),
    }


def steps_to_half_distance(ensemble: PathEnsemble) -> int:
    """First step at which the ensemble mean has closed half the gap to theta."""
    theta = ensemble.params.theta
    gap = np.abs(ensemble.paths.mean(axis=0) - theta)
    hit = np.nonzero(gap <= 0.5 * gap[0])[0]
    return int(hit[0]) if len(hit) else ensemble.spec.n_steps + 1
