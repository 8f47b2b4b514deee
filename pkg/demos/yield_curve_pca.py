"""Level, slope and curvature from a synthetic yield curve.

Ten maturities are generated from three latent factors with the familiar
Nelson-Siegel loadings plus a little noise.  Principal components of the
standardized yields recover the factors, and the second component tracks
the 10-year minus 3-month spread.

Run:  python demos/yield_curve_pca.py
"""

import numpy as np

from yieldcast.data import Panel
from yieldcast.pca import covariance_matrix, eigen_symmetric, pca

rng = np.random.default_rng(0)
maturities = np.array([0.25, 0.5, 1, 2, 3, 5, 7, 10, 20, 30])
names = tuple(f"y{m:g}" for m in maturities)
n = 3000

level = 4 + np.cumsum(rng.normal(0, 0.05, n))
slope = np.cumsum(rng.normal(0, 0.03, n)) - 1
curve = np.cumsum(rng.normal(0, 0.02, n))
lam = 0.6
x = lam * maturities
load_slope = (1 - np.exp(-x)) / x
load_curve = load_slope - np.exp(-x)
yields = (level[:, None] + slope[:, None] * load_slope + curve[:, None] * load_curve
          + rng.normal(0, 0.01, (n, len(maturities))))
panel = Panel(names, np.datetime64("2000-01-03") + np.arange(n), yields)

res = pca(panel, 5)
print("share of retained variance:", np.round(res.explained_ratio, 6))
print("share of total variance:   ", np.round(res.explained_ratio_total, 6))

vecs = res.decomposition.eigenvectors
print("\nloadings by maturity:")
print(f"{'maturity':>9} {'PC1':>7} {'PC2':>7} {'PC3':>7}")
for i, m in enumerate(maturities):
    print(f"{m:>9g} {vecs[i, 0]:7.3f} {vecs[i, 1]:7.3f} {vecs[i, 2]:7.3f}")
print("PC1 loads evenly (level), PC2 changes sign across maturities (slope), PC3 bends (curvature)")

spread = yields[:, 7] - yields[:, 0]
for k in (1, 2, 3):
    c = np.corrcoef(res.scores[f"PC{k}"].values, spread)[0, 1]
    print(f"corr(PC{k}, 10y - 3m spread) = {c:+.3f}")

# The Jacobi solver agrees with LAPACK on the same correlation matrix.
corr = covariance_matrix(panel)
ours = eigen_symmetric(corr).eigenvalues
ref = np.sort(np.linalg.eigvalsh(corr))[::-1]
print(f"\nmax eigenvalue difference vs numpy: {np.abs(ours - ref).max():.1e}")
