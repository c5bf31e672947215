"""Tests for GP regression and polynomial confidence envelopes.

Oracles: closed-form 1x1 posterior algebra, symmetry arguments, direct
least squares on raw data, and exhaustive grid scans (the envelope's own
construction guarantee).
"""

import math

import numpy as np
import pytest

from roasyn.gp import (
    ConfidenceEnvelope,
    GPFitError,
    GPModel,
    KernelConfig,
    build_envelope,
    fit_polynomial_mean,
    gp_fit,
    gp_posterior,
    gp_posterior_many,
    kernel_matrix,
    probability_bound,
    tune_kernel,
    uniform_grid,
)
from roasyn.poly import Polynomial


def iso(sigma_f=1.0, l=0.5, nvars=1, sigma_n=0.0):
    return KernelConfig.isotropic(sigma_f, l, nvars, sigma_n)


class TestKernel:
    def test_diagonal_is_sigma_f_squared(self):
        cfg = iso(sigma_f=1.7)
        X = np.array([[0.3], [-1.2], [4.0]])
        K = kernel_matrix(cfg, X)
        np.testing.assert_allclose(np.diag(K), 1.7 ** 2, atol=1e-12)

    def test_symmetry(self):
        cfg = iso(nvars=2)
        X = np.random.default_rng(0).uniform(-1, 1, (6, 2))
        K = kernel_matrix(cfg, X)
        np.testing.assert_allclose(K, K.T, atol=1e-14)

    def test_psd_before_jitter(self):
        rng = np.random.default_rng(1)
        for trial in range(5):
            X = rng.uniform(-2, 2, (rng.integers(2, 20), 3))
            K = kernel_matrix(iso(nvars=3, l=0.8), X)
            assert np.linalg.eigvalsh(K)[0] >= -1e-10

    def test_invalid_hyperparameters_rejected(self):
        with pytest.raises(ValueError):
            KernelConfig(0.0, (1.0,))
        with pytest.raises(ValueError):
            KernelConfig(1.0, (-1.0,))
        with pytest.raises(ValueError):
            KernelConfig(1.0, (1.0,), sigma_n=-0.1)


class TestFitAndPosterior:
    def test_prior_query(self):
        model = GPModel.prior(iso(sigma_f=2.0))
        mean, std = gp_posterior(model, [0.7])
        assert mean == 0.0
        assert std == pytest.approx(2.0)

    def test_single_point_closed_form(self):
        # 1x1 system: mean(0) = k(0,0) / (k(0,0) + jitter) * y ~= 1
        model = gp_fit(np.array([[0.0]]), np.array([1.0]), iso(sigma_f=1.0, sigma_n=0.0))
        mean, std = gp_posterior(model, [0.0])
        assert mean == pytest.approx(1.0, abs=1e-9)
        assert std == pytest.approx(0.0, abs=1e-5)

    def test_far_query_reverts_to_prior(self):
        model = gp_fit(np.array([[0.0]]), np.array([3.0]), iso(sigma_f=1.3, l=0.2))
        mean, std = gp_posterior(model, [50.0])
        assert abs(mean) <= 1e-8
        assert std == pytest.approx(1.3, abs=1e-8)

    def test_interpolation_with_small_noise(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(-1, 1, (12, 1))
        y = np.sin(3 * X[:, 0])
        model = gp_fit(X, y, iso(sigma_f=1.0, l=0.4, sigma_n=1e-6))
        for xi, yi in zip(X, y):
            mean, _ = gp_posterior(model, xi)
            assert mean == pytest.approx(yi, abs=1e-3)

    def test_symmetric_data_flat_at_origin(self):
        X = np.array([[-1.0], [-0.5], [0.5], [1.0]])
        y = np.array([1.0, 0.25, 0.25, 1.0])  # even function
        model = gp_fit(X, y, iso(sigma_f=1.0, l=0.7, sigma_n=1e-4))
        h = 1e-4
        m_plus, _ = gp_posterior(model, [h])
        m_minus, _ = gp_posterior(model, [-h])
        assert (m_plus - m_minus) / (2 * h) == pytest.approx(0.0, abs=1e-6)

    def test_variance_ordering(self):
        model = gp_fit(np.array([[0.0]]), np.array([1.0]), iso(l=0.3, sigma_n=0.01))
        _, s_at = gp_posterior(model, [0.0])
        _, s_far = gp_posterior(model, [3.0])  # 10 lengthscales away
        assert s_at <= s_far

    def test_ill_conditioned_rejected_with_suggestion(self):
        X = np.array([[0.0], [0.0]])  # duplicate rows, no noise
        with pytest.raises(GPFitError, match="sigma_n"):
            gp_fit(X, np.array([1.0, 1.0]), iso(sigma_n=0.0))

    def test_log_marginal_likelihood_prefers_truthful_noise(self):
        rng = np.random.default_rng(3)
        X = rng.uniform(-1, 1, (40, 1))
        y = np.sin(2 * X[:, 0]) + 0.05 * rng.standard_normal(40)
        good = gp_fit(X, y, iso(sigma_f=1.0, l=0.5, sigma_n=0.05))
        bad = gp_fit(X, y, iso(sigma_f=1.0, l=0.5, sigma_n=1.0))
        assert good.log_marginal_likelihood > bad.log_marginal_likelihood

    def test_batch_matches_scalar_queries(self):
        rng = np.random.default_rng(4)
        X = rng.uniform(-1, 1, (15, 2))
        y = X[:, 0] ** 2 - X[:, 1]
        model = gp_fit(X, y, iso(nvars=2, l=0.6, sigma_n=0.01))
        Q = rng.uniform(-1, 1, (8, 2))
        means, stds = gp_posterior_many(model, Q)
        for i in range(8):
            m, s = gp_posterior(model, Q[i])
            assert means[i] == pytest.approx(m, abs=1e-12)
            assert stds[i] == pytest.approx(s, abs=1e-12)


class TestPolynomialMean:
    def test_zero_mean_gives_zero_polynomial(self):
        model = GPModel.prior(iso())
        p, rmse = fit_polynomial_mean(model, 3, [(-1, 1)], grid_n=21)
        assert p.max_abs_coeff() <= 1e-12
        assert rmse <= 1e-12

    def test_recovers_square_law(self):
        rng = np.random.default_rng(5)
        X = np.sort(rng.uniform(-1, 1, (60, 1)), axis=0)
        y = X[:, 0] ** 2
        model = gp_fit(X, y, iso(sigma_f=1.0, l=0.5, sigma_n=1e-3))
        p, rmse = fit_polynomial_mean(model, 2, [(-1, 1)], grid_n=41)
        # oracle: direct least squares of the raw data
        mean_at_train, _ = gp_posterior_many(model, X)
        gp_rmse = float(np.sqrt(np.mean((mean_at_train - y) ** 2)))
        assert rmse <= 10 * max(gp_rmse, 1e-6)
        xs = np.linspace(-1, 1, 101).reshape(-1, 1)
        np.testing.assert_allclose(p.evaluate_many(xs), xs[:, 0] ** 2, atol=0.05)

    def test_degree_zero_is_grid_average(self):
        rng = np.random.default_rng(6)
        X = rng.uniform(-1, 1, (25, 1))
        y = np.cos(X[:, 0])
        model = gp_fit(X, y, iso(l=0.5, sigma_n=0.01))
        p, _ = fit_polynomial_mean(model, 0, [(-1, 1)], grid_n=33)
        grid = uniform_grid([(-1, 1)], 33)
        mean, _ = gp_posterior_many(model, grid)
        assert p.constant_term() == pytest.approx(float(np.mean(mean)), abs=1e-9)

    def test_dense_polynomial_recovery(self):
        # no noise, dense samples of a cubic: coefficients come back
        rng = np.random.default_rng(7)
        X = np.linspace(-1, 1, 80).reshape(-1, 1)
        y = 0.5 * X[:, 0] ** 3 - 0.25 * X[:, 0]
        model = gp_fit(X, y, iso(sigma_f=1.0, l=0.6, sigma_n=1e-4))
        p, _ = fit_polynomial_mean(model, 3, [(-1, 1)], grid_n=41)
        xs = np.linspace(-1, 1, 201).reshape(-1, 1)
        resid = p.evaluate_many(xs) - (0.5 * xs[:, 0] ** 3 - 0.25 * xs[:, 0])
        assert float(np.sqrt(np.mean(resid ** 2))) <= 1e-3

    def test_rank_deficiency_rejected(self):
        model = gp_fit(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]), iso(sigma_n=0.01))
        with pytest.raises(ValueError, match="degree|rank"):
            fit_polynomial_mean(model, 9, [(-1, 1)], grid_n=2)

    def test_grid_guard(self):
        model = GPModel.prior(iso(nvars=4))
        with pytest.raises(ValueError, match="guard"):
            fit_polynomial_mean(model, 2, [(-1, 1)] * 4, grid_n=100)


class TestEnvelope:
    def _model(self):
        rng = np.random.default_rng(8)
        X = rng.uniform(-1, 1, (30, 1))
        y = 0.3 * X[:, 0] ** 2 + 0.02 * rng.standard_normal(30)
        return gp_fit(X, y, iso(sigma_f=0.5, l=0.4, sigma_n=0.02))

    def test_grid_soundness(self):
        model = self._model()
        env = build_envelope(model, k_delta=2.0, degree=4, region=[(-1, 1)], grid_n=41)
        X = uniform_grid(env.fit_region, env.grid_n)
        mean, std = gp_posterior_many(model, X)
        lo = env.lo_poly.evaluate_many(X)
        hi = env.hi_poly.evaluate_many(X)
        assert np.all(lo <= mean - 2.0 * std + 1e-9)
        assert np.all(hi >= mean + 2.0 * std - 1e-9)
        mid = env.mean_poly.evaluate_many(X)
        assert np.all(lo <= mid + 1e-9) and np.all(mid <= hi + 1e-9)

    def test_zero_width_band(self):
        model = self._model()
        env = build_envelope(model, k_delta=0.0, degree=4, region=[(-1, 1)], grid_n=31)
        X = uniform_grid(env.fit_region, env.grid_n)
        width = env.hi_poly.evaluate_many(X) - env.lo_poly.evaluate_many(X)
        assert np.all(width >= -1e-12)
        assert float(np.max(width)) <= env.lo_shift + env.hi_shift + 1e-9

    def test_prior_only_band_is_constant(self):
        model = GPModel.prior(iso(sigma_f=0.8))
        env = build_envelope(model, k_delta=2.0, degree=2, region=[(-1, 1)], grid_n=21)
        X = uniform_grid(env.fit_region, env.grid_n)
        np.testing.assert_allclose(env.hi_poly.evaluate_many(X), 1.6, atol=1e-8)
        np.testing.assert_allclose(env.lo_poly.evaluate_many(X), -1.6, atol=1e-8)

    def test_delta_derived_from_k_delta(self):
        env = build_envelope(self._model(), k_delta=2.0, degree=2, region=[(-1, 1)])
        # two-sided tail mass beyond 2 sigma
        assert env.delta == pytest.approx(0.0455, abs=1e-3)
        assert env.n_measurements == 30


class TestProbabilityBound:
    def test_single_measurement(self):
        assert probability_bound(0.05, 1) == pytest.approx(0.95)

    def test_ten_measurements(self):
        assert probability_bound(0.05, 10) == pytest.approx(0.95 ** 10)
        assert probability_bound(0.05, 10) == pytest.approx(0.5987, abs=1e-4)

    def test_zero_measurements_rejected(self):
        with pytest.raises(ValueError):
            probability_bound(0.05, 0)

    def test_delta_bounds(self):
        with pytest.raises(ValueError):
            probability_bound(0.0, 5)
        with pytest.raises(ValueError):
            probability_bound(1.0, 5)


class TestTuneKernel:
    def test_grid_search_prefers_generative_scale(self):
        rng = np.random.default_rng(9)
        X = rng.uniform(-1, 1, (50, 1))
        y = np.sin(4 * X[:, 0]) + 0.02 * rng.standard_normal(50)
        cfg, lml = tune_kernel(X, y, [0.3, 1.0, 3.0], [0.05, 0.3, 1.5], sigma_n=0.02)
        assert np.isfinite(lml)
        # a wiggly sin(4x) needs a sub-unit lengthscale
        assert cfg.lengthscales[0] < 1.5
