import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from scipy import stats

from levyrmt import matrices as mx
from levyrmt import stable
from levyrmt.errors import ConfigError, DegenerateTailError, ParameterDomainError
from levyrmt.stable import StableParams

import oracles


def _residual(a, s):
    return np.max(np.abs(a @ s.eigenvectors - s.eigenvectors * s.eigenvalues))


class TestEigenSolver:
    def test_two_by_two(self):
        np.testing.assert_allclose(mx.eigen_sym([[2.0, 1.0], [1.0, 2.0]]).eigenvalues, [1.0, 3.0], atol=1e-14)

    def test_identity(self):
        np.testing.assert_array_equal(mx.eigen_sym(np.eye(5)).eigenvalues, np.ones(5))

    def test_random_50(self):
        rng = np.random.default_rng(0)
        a = mx.sample_goe(50, 1.0, rng)
        s = mx.eigen_sym(a, want_vectors=True)
        assert _residual(a, s) < 1e-10
        assert abs(s.eigenvalues.sum() - np.trace(a)) < 1e-10
        assert np.max(np.abs(s.eigenvectors.T @ s.eigenvectors - np.eye(50))) < 1e-12
        np.testing.assert_allclose(s.eigenvalues, np.linalg.eigvalsh(a), atol=1e-12)

    def test_heavy_tailed_entries(self):
        # entries spanning many decades
        a = mx.sample_wigner_levy(80, StableParams(0.7), np.random.default_rng(1))
        s = mx.eigen_sym(a, want_vectors=True)
        scale = np.max(np.abs(s.eigenvalues))
        assert _residual(a, s) < 1e-8 * max(scale, 1.0)

    @given(hnp.arrays(np.float64, (7, 7), elements=st.floats(-1e3, 1e3)))
    @settings(max_examples=60, deadline=None)
    def test_trace_invariants(self, m):
        a = m + m.T
        ev = mx.eigen_sym(a).eigenvalues
        t1, t2 = np.trace(a), np.sum(a * a)
        assert np.all(np.diff(ev) >= 0)
        assert abs(ev.sum() - t1) <= 1e-10 * max(1.0, np.sqrt(t2) * 7)
        assert abs(np.sum(ev**2) - t2) <= 1e-10 * max(1.0, t2)

    def test_not_square(self):
        with pytest.raises(ParameterDomainError):
            mx.eigen_sym(np.zeros((2, 3)))

    def test_sample_order_enforced(self):
        with pytest.raises(ValueError):
            mx.SpectralSample(np.array([2.0, 1.0]))


class TestSamplers:
    def test_wigner_levy_symmetric(self):
        a = mx.sample_wigner_levy(30, StableParams(1.3, 0.4), np.random.default_rng(2))
        np.testing.assert_array_equal(a, a.T)

    def test_wigner_levy_entries(self):
        p = StableParams(1.5, 0.3)
        a = mx.sample_wigner_levy(120, p, np.random.default_rng(3))
        vals = a[np.triu_indices(120)]
        cdf = oracles.stable_cdf(p)
        assert stats.kstest(vals, cdf).pvalue > 0.01

    def test_gaussian_entries_semicircle(self):
        # alpha = 2 entries have variance 2 R^2, so A / sqrt(N) tends to radius 2 sqrt(2) R
        rng = np.random.default_rng(4)
        ev = np.concatenate(
            [mx.eigen_sym(mx.sample_wigner_levy(150, StableParams(2.0), rng)).eigenvalues / math.sqrt(150) for _ in range(20)]
        )
        r = 2 * math.sqrt(2)
        grid = np.linspace(-r, r, 4001)
        cdf = np.concatenate([[0], np.cumsum(0.5 * np.diff(grid) * (oracles.semicircle_pdf(grid[1:], r) + oracles.semicircle_pdf(grid[:-1], r)))])
        assert stats.kstest(ev, lambda t: np.interp(t, grid, cdf)).statistic < 0.02

    def test_goe_variances(self):
        rng = np.random.default_rng(5)
        mats = np.array([mx.sample_goe(4, 1.5, rng) for _ in range(20000)])
        diag = mats[:, 0, 0].var()
        off = mats[:, 0, 1].var()
        assert diag == pytest.approx(2 * 1.5**2, rel=0.05)
        assert off == pytest.approx(1.5**2, rel=0.05)

    def test_goe_one_by_one(self):
        rng = np.random.default_rng(6)
        x = np.array([mx.sample_goe(1, 1.0, rng)[0, 0] for _ in range(5000)])
        assert stats.kstest(x, "norm", args=(0, math.sqrt(2))).pvalue > 0.01

    def test_goe_semicircle(self):
        rng = np.random.default_rng(7)
        ev = np.concatenate([mx.eigen_sym(mx.sample_goe(200, 1.0, rng)).eigenvalues / math.sqrt(200) for _ in range(10)])
        assert ev.min() > -2.2 and ev.max() < 2.2
        h = mx.spectral_histogram([mx.SpectralSample(np.sort(ev))], 0.0, np.linspace(-2, 2, 21))
        model = np.array([np.mean(oracles.semicircle_pdf(np.linspace(l, r, 50), 2.0)) for l, r in zip(h.edges[:-1], h.edges[1:])])
        assert np.max(np.abs(h.absolute_density - model)) < 0.03

    def test_domain(self):
        with pytest.raises(ParameterDomainError):
            mx.sample_goe(0, 1.0, np.random.default_rng(0))
        with pytest.raises(ParameterDomainError):
            mx.sample_wigner_levy(0, StableParams(1.5), np.random.default_rng(0))

    def test_max_element_scaling(self):
        a = 1.2
        rng = np.random.default_rng(8)
        sizes = [25, 50, 100, 200]
        maxima = [[np.max(np.abs(mx.sample_wigner_levy(n, StableParams(a), rng))) for _ in range(30)] for n in sizes]
        fit = stable.frechet_max_check(sizes, maxima, a)
        assert fit.slope == pytest.approx(2 / a, abs=0.2)


class TestIPR:
    def test_single_entry(self):
        a = np.zeros((4, 4))
        a[1, 2] = a[2, 1] = -3.0
        assert mx.ipr_elements(a) == 1.0

    def test_uniform(self):
        n = 9
        assert mx.ipr_elements(-np.ones((n, n))) == pytest.approx(2 / (n * (n + 1)), rel=1e-14)

    def test_zero(self):
        with pytest.raises(DegenerateTailError):
            mx.ipr_elements(np.zeros((3, 3)))

    @given(hnp.arrays(np.float64, (5, 5), elements=st.floats(-10, 10)).filter(lambda m: np.any(m != 0)))
    @settings(max_examples=50, deadline=None)
    def test_range(self, m):
        y = mx.ipr_elements(m + m.T) if np.any(np.triu(m + m.T)) else 1.0
        assert 2 / 30 - 1e-15 <= y <= 1.0

    def test_eigenvector_cases(self):
        e = np.zeros(6)
        e[3] = 1.0
        assert mx.ipr_eigenvector(e) == 1.0
        assert mx.ipr_eigenvector(np.full(6, 1 / math.sqrt(6))) == pytest.approx(1 / 6)
        with pytest.raises(ParameterDomainError):
            mx.ipr_eigenvector(np.ones(6))

    @given(hnp.arrays(np.float64, 8, elements=st.floats(-1, 1)).filter(lambda v: np.dot(v, v) > 1e-3))
    @settings(max_examples=50, deadline=None)
    def test_eigenvector_range(self, v):
        v = v / np.linalg.norm(v)
        assert 1 / 8 - 1e-12 <= mx.ipr_eigenvector(v) <= 1 + 1e-12

    def test_localisation_trend(self):
        rng = np.random.default_rng(9)
        centre, edge = [], []
        for _ in range(20):
            a = mx.sample_wigner_levy(200, StableParams(1.5), rng) / 200 ** (1 / 1.5)
            s = mx.eigen_sym(a, want_vectors=True)
            y2 = np.sum(s.eigenvectors**4, axis=0)
            order = np.argsort(np.abs(s.eigenvalues))
            centre.append(y2[order[:20]].mean())
            edge.append(y2[order[-20:]].mean())
        assert np.mean(edge) > np.mean(centre)


class TestSpacings:
    def test_poisson_input(self):
        rng = np.random.default_rng(10)
        samples = [mx.SpectralSample(np.sort(rng.uniform(0, 1, 400))) for _ in range(40)]
        u = mx.unfold_spacings(samples)
        assert stats.kstest(u, oracles.poisson_spacing_cdf).statistic < 0.05
        assert u.mean() == pytest.approx(1.0, abs=1e-12)

    def test_goe_surmise(self):
        rng = np.random.default_rng(11)
        samples = [mx.eigen_sym(mx.sample_goe(200, 1.0, rng)) for _ in range(100)]
        u = mx.unfold_spacings(samples)
        assert stats.kstest(u, oracles.wigner_surmise_cdf).statistic < 0.05
        h = mx.spacing_histogram(samples)
        assert np.sum(h.density * h.widths) == pytest.approx(1.0, abs=1e-12)

    def test_too_small(self):
        with pytest.raises(ConfigError):
            mx.unfold_spacings([mx.SpectralSample(np.arange(5.0))])
        with pytest.raises(ConfigError):
            mx.unfold_spacings([])
        with pytest.raises(ConfigError):
            mx.unfold_spacings([mx.SpectralSample(np.arange(50.0))], bulk_fraction=0.0)


class TestHistogram:
    def test_invariants(self):
        rng = np.random.default_rng(12)
        vals = rng.standard_normal(5000)
        edges = np.linspace(-3, 3, 25)
        h = mx.Histogram.from_values(vals, edges)
        assert np.sum(h.density * h.widths) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(h.stderr, np.sqrt(h.counts) / (h.counts.sum() * h.widths))
        assert h.coverage == pytest.approx(h.counts.sum() / 5000)

    def test_empty_bin(self):
        h = mx.Histogram.from_values(np.array([0.1, 0.2, 0.3]), np.array([0.0, 0.5, 1.0]))
        assert h.density[1] == 0 and h.stderr[1] == 0

    def test_scaling_exponent(self):
        s = mx.SpectralSample(np.array([-4.0, 0.0, 4.0]))
        h = mx.spectral_histogram([s, s], 0.5, np.array([-3.0, -1.0, 1.0, 3.0]))
        # 4 / sqrt(3) = 2.31 falls in the outer bins
        np.testing.assert_array_equal(h.counts, [2, 2, 2])
        assert h.n_trials == 2 and np.all(h.trial_stderr == 0)


def _trial(rng, i):
    return rng.standard_normal(3)


class TestTrials:
    def test_deterministic_and_worker_independent(self):
        a = mx.run_trials(_trial, 6, seed=3, workers=1)
        b = mx.run_trials(_trial, 6, seed=3, workers=1)
        c = mx.run_trials(_trial, 6, seed=3, workers=2)
        for x, y, z in zip(a, b, c):
            np.testing.assert_array_equal(x, y)
            np.testing.assert_array_equal(x, z)

    def test_streams_distinct(self):
        draws = [mx.trial_rng(0, i).random() for i in range(50)]
        draws += [mx.aux_rng(0, t).random() for t in range(50)]
        assert len(set(draws)) == 100
        assert mx.trial_rng(1, 0).random() != mx.trial_rng(0, 0).random()

    def test_env_workers(self, monkeypatch):
        monkeypatch.setenv(mx.ENV_WORKERS, "3")
        assert mx.default_workers() == 3
        monkeypatch.setenv(mx.ENV_WORKERS, "x")
        with pytest.raises(ConfigError):
            mx.default_workers()
