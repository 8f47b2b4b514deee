import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from yieldcast.data import DataError, Panel, TimeSeries
from yieldcast.pca import EigenError, covariance_matrix, eigen_symmetric, pca


def random_symmetric(n, seed):
    a = np.random.default_rng(seed).normal(size=(n, n))
    return 0.5 * (a + a.T)


def determinant_roots(a, grid=20000):
    """Eigenvalues as sign changes of det(A - lam I), refined by bisection."""
    n = len(a)
    radius = np.abs(a).sum(axis=1).max() + 1.0
    f = lambda lam: np.linalg.det(a - lam * np.eye(n))
    xs = np.linspace(-radius, radius, grid)
    fs = np.array([f(x) for x in xs])
    roots = []
    for i in np.nonzero(np.sign(fs[:-1]) != np.sign(fs[1:]))[0]:
        lo, hi = xs[i], xs[i + 1]
        flo = fs[i]
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if np.sign(fm) == np.sign(flo):
                lo, flo = mid, fm
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    return np.sort(roots)[::-1]


def make_panel(x):
    names = tuple(f"c{i}" for i in range(x.shape[1]))
    return Panel(names, np.datetime64("2000-01-03") + np.arange(len(x)), x)


class TestCovariance:
    def test_perfect_correlation(self):
        x = np.random.default_rng(0).normal(size=100)
        c = covariance_matrix(np.column_stack([x, 3 * x + 1]))
        np.testing.assert_allclose(c[0, 1], 1.0, atol=1e-12)

    def test_independent_columns(self):
        c = covariance_matrix(np.random.default_rng(1).normal(size=(50000, 3)))
        off = c[~np.eye(3, dtype=bool)]
        assert np.all(np.abs(off) < 0.02)
        np.testing.assert_allclose(np.diag(c), 1.0)

    def test_double_loop_oracle(self):
        x = np.random.default_rng(2).normal(size=(40, 3)) * [1, 5, 0.1]
        n, k = x.shape
        m = [sum(x[t, j] for t in range(n)) / n for j in range(k)]
        oracle = np.array([[sum((x[t, i] - m[i]) * (x[t, j] - m[j]) for t in range(n)) / n
                            for j in range(k)] for i in range(k)])
        np.testing.assert_allclose(covariance_matrix(x, standardize=False), oracle, atol=1e-12)

    def test_constant_column(self):
        with pytest.raises(DataError):
            covariance_matrix(np.column_stack([np.arange(5.0), np.ones(5)]))


class TestEigen:
    def test_identity(self):
        np.testing.assert_array_equal(eigen_symmetric(np.eye(5)).eigenvalues, 1.0)

    def test_diagonal(self):
        dec = eigen_symmetric(np.diag([1.0, 3.0, 2.0]))
        np.testing.assert_array_equal(dec.eigenvalues, [3, 2, 1])
        np.testing.assert_array_equal(np.abs(dec.eigenvectors), np.eye(3)[:, [1, 2, 0]])

    @pytest.mark.parametrize("seed", range(3))
    def test_determinant_root_oracle(self, seed):
        a = random_symmetric(6, seed)
        np.testing.assert_allclose(eigen_symmetric(a).eigenvalues, determinant_roots(a), atol=1e-6)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 10), st.integers(0, 2 ** 31))
    def test_invariants(self, n, seed):
        a = random_symmetric(n, seed)
        dec = eigen_symmetric(a)
        lam, v = dec.eigenvalues, dec.eigenvectors
        assert np.abs(a @ v - v * lam).max() < 1e-8
        np.testing.assert_allclose(v.T @ v, np.eye(n), atol=1e-8)
        assert np.all(np.diff(lam) <= 0)
        np.testing.assert_allclose((v * lam) @ v.T, a, atol=1e-8)
        # sign convention: largest-magnitude loading positive
        assert np.all(v[np.abs(v).argmax(axis=0), np.arange(n)] > 0)

    def test_non_symmetric(self):
        with pytest.raises(EigenError):
            eigen_symmetric(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_iteration_cap(self):
        with pytest.raises(EigenError):
            eigen_symmetric(random_symmetric(6, 0), max_sweeps=1)


class TestPca:
    def test_rank_one(self):
        rng = np.random.default_rng(3)
        base = np.cumsum(rng.normal(size=500))
        x = base[:, None] + 1e-3 * rng.normal(size=(500, 6))
        assert pca(make_panel(x), 5).explained_ratio[0] > 0.999

    def test_ratios_and_scores(self):
        x = np.random.default_rng(4).normal(size=(300, 8)) @ np.random.default_rng(5).normal(size=(8, 8))
        res = pca(make_panel(x), 5)
        r = res.explained_ratio
        assert abs(r.sum() - 1) < 1e-10
        assert np.all(r >= 0) and np.all(np.diff(r) <= 0)
        np.testing.assert_allclose(res.scores.values.mean(axis=0), 0, atol=1e-8)
        z = (x - x.mean(axis=0)) / x.std(axis=0)
        np.testing.assert_allclose(res.scores.values, z @ res.decomposition.eigenvectors, atol=1e-10)
        assert res.scores.names == ("PC1", "PC2", "PC3", "PC4", "PC5")
        assert res.explained_ratio_total.sum() < 1

    def test_all_components_ratio_conventions_agree(self):
        x = np.random.default_rng(6).normal(size=(200, 4))
        res = pca(make_panel(x), 4)
        np.testing.assert_allclose(res.explained_ratio, res.explained_ratio_total)

    def test_slope_component_tracks_spread(self):
        # a level + slope curve: PC2 should be the slope factor
        rng = np.random.default_rng(7)
        n, mats = 2000, np.linspace(0.25, 30, 10)
        level = np.cumsum(rng.normal(size=n)) * 0.05
        slope = np.cumsum(rng.normal(size=n)) * 0.02
        loading = (mats - mats.mean()) / mats.std()
        yields = 3 + level[:, None] + slope[:, None] * loading + 0.01 * rng.normal(size=(n, 10))
        res = pca(make_panel(yields), 3)
        spread = yields[:, -1] - yields[:, 0]
        assert abs(np.corrcoef(res.scores.values[:, 1], spread)[0, 1]) > 0.85

    def test_too_many_components(self):
        with pytest.raises(ValueError):
            pca(make_panel(np.random.default_rng(0).normal(size=(20, 3))), 4)

    def test_accepts_series_list_panel(self):
        p = Panel.from_series([TimeSeries.from_values(np.random.default_rng(i).normal(size=50), f"y{i}")
                               for i in range(3)])
        assert pca(p, 2).loadings_names == ("y0", "y1", "y2")
