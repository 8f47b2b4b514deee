"""Shared numerical helpers: stationarity transforms and finite-difference Hessians."""

import numpy as np


def pacf_to_ar(r: np.ndarray) -> np.ndarray:
    """Map partial autocorrelations in (-1, 1) to stationary AR coefficients (Durbin-Levinson)."""
    phi = np.zeros(0)
    for k, rk in enumerate(r):
        phi = np.append(phi - rk * phi[::-1], rk) if k else np.array([rk])
    return phi


def ar_to_pacf(phi: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pacf_to_ar`; raises if ``phi`` is not stationary."""
    phi = np.asarray(phi, dtype=float).copy()
    p = len(phi)
    r = np.zeros(p)
    for k in range(p - 1, -1, -1):
        rk = phi[k]
        if abs(rk) >= 1:
            raise ValueError("coefficients outside the stationary region")
        r[k] = rk
        if k:
            phi = (phi[:k] + rk * phi[:k][::-1]) / (1 - rk * rk)
    return r


def constrain_ar(u: np.ndarray, bound: float = 7.0) -> np.ndarray:
    return pacf_to_ar(np.tanh(np.clip(u, -bound, bound)))


def unconstrain_ar(phi: np.ndarray, shrink: float = 0.98) -> np.ndarray:
    """Unconstrained vector for ``phi``; non-stationary input is shrunk until valid."""
    phi = np.asarray(phi, dtype=float)
    for _ in range(200):
        try:
            r = ar_to_pacf(phi)
            return np.arctanh(np.clip(r, -0.999, 0.999))
        except ValueError:
            phi = phi * shrink
    return np.zeros(len(phi))


def min_root_modulus(coefs: np.ndarray, sign: float = -1.0) -> float:
    """Smallest root modulus of ``1 + sign*c1 z + sign*c2 z^2 + ...``."""
    coefs = np.asarray(coefs, dtype=float)
    if len(coefs) == 0 or not np.any(coefs):
        return np.inf
    poly = np.r_[1.0, sign * coefs]
    poly = np.trim_zeros(poly, "b")
    roots = np.roots(poly[::-1])
    return float(np.abs(roots).min()) if len(roots) else np.inf


def numerical_hessian(f, x: np.ndarray, rel_step: float = 1e-4) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = len(x)
    h = rel_step * np.maximum(np.abs(x), 1e-2)
    H = np.zeros((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        H[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(n)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (f(x + ei + ej) - f(x + ei - ej)
                                 - f(x - ei + ej) + f(x - ei - ej)) / (4 * h[i] * h[j])
    return H


def std_errors_from_hessian(H: np.ndarray) -> np.ndarray:
    """Square roots of the diagonal of the inverse observed information (-H)."""
    try:
        cov = np.linalg.inv(-H)
    except np.linalg.LinAlgError:
        return np.full(len(H), np.nan)
    d = np.diag(cov)
    return np.where(d > 0, np.sqrt(np.abs(d)), np.nan)
