"""Principal components of a standardized yield panel.

The eigen-solver is a cyclic Jacobi iteration, which is exact enough for
the <= 10-dimensional covariance matrices used here and needs no LAPACK.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataError, Panel, as_array


class EigenError(ValueError):
    pass


@dataclass
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns


@dataclass
class PcaResult:
    decomposition: EigenDecomposition
    explained_ratio: np.ndarray
    scores: Panel
    loadings_names: tuple
    # share of the full trace, for comparison with the retained-only ratio
    explained_ratio_total: np.ndarray


def covariance_matrix(panel, standardize: bool = True) -> np.ndarray:
    """Population (divide-by-n) covariance; the correlation matrix when standardizing."""
    x = as_array(panel)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("covariance needs a 2-D panel with at least two rows")
    d = x - x.mean(axis=0)
    if standardize:
        sd = d.std(axis=0)
        if np.any(sd <= 0):
            raise DataError("constant column cannot be standardized")
        d = d / sd
    c = d.T @ d / x.shape[0]
    return 0.5 * (c + c.T)


def eigen_symmetric(matrix, tol: float = 1e-14, max_sweeps: int = 100) -> EigenDecomposition:
    """Cyclic Jacobi rotations; eigenvalues descending, each vector's largest loading positive."""
    a = np.array(matrix, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise EigenError("matrix must be square")
    scale = max(np.abs(a).max(), 1.0)
    if np.abs(a - a.T).max() > 1e-10 * scale:
        raise EigenError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(n)

    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1)) if theta else 1.0
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                row_p = c * a[p, :] - s * a[q, :]
                row_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = row_p, row_q
                vp = c * v[:, p] - s * v[:, q]
                vq = s * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = vp, vq
    else:
        raise EigenError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")
    lam, v = lam[order], v[:, order]
    for i in range(n):
        if v[np.argmax(np.abs(v[:, i])), i] < 0:
            v[:, i] = -v[:, i]
    return EigenDecomposition(lam, v)


def pca(panel: Panel, n_components: int = 5) -> PcaResult:
    """Standardize, decompose the correlation matrix and project.

    ``explained_ratio`` divides by the sum over the retained components only;
    ``explained_ratio_total`` divides by the full trace.
    """
    x = as_array(panel)
    if n_components > x.shape[1]:
        raise ValueError(f"n_components={n_components} exceeds {x.shape[1]} columns")
    corr = covariance_matrix(x, standardize=True)
    dec = eigen_symmetric(corr)
    z = (x - x.mean(axis=0)) / x.std(axis=0)
    lam = dec.eigenvalues[:n_components]
    vecs = dec.eigenvectors[:, :n_components]
    scores = z @ vecs
    names = tuple(f"PC{i + 1}" for i in range(n_components))
    dates = getattr(panel, "dates", np.datetime64("2000-01-03") + np.arange(len(x)))
    return PcaResult(
        EigenDecomposition(lam, vecs),
        lam / lam.sum(),
        Panel(names, dates, scores),
        tuple(getattr(panel, "names", range(x.shape[1]))),
        lam / dec.eigenvalues.sum(),
    )
