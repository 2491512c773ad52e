"""
Property-based tests for kernels and the universal kriging model.

Feature: bocoa
"""

import numpy as np
import pytest
from hypothesis import given, strategies as st, settings

from core.doe import maximin_lhs
from core.gp_model import (
    CovarianceFactorizationError,
    GPModel,
    concentrated_nll,
    posterior_cross_cov,
    posterior_moments,
)
from core.kernels import (
    KernelFamily,
    KernelSpec,
    TrendDegree,
    TrendSpec,
    basis_length,
    correlation,
    correlation_log_gradients,
    kernel_eval,
    trend_matrix,
)


families = st.sampled_from(list(KernelFamily))
degrees = st.sampled_from(list(TrendDegree))
seeds = st.integers(min_value=0, max_value=2**31 - 1)


def _dataset(seed, n=12, d=3):
    rng = np.random.default_rng(seed)
    X = maximin_lhs(n, d, seed, n_improve_iters=100).points
    y = np.sin(3 * X[:, 0]) + X[:, -1] ** 2 + 0.1 * rng.normal(size=n)
    theta = np.exp(rng.uniform(np.log(0.2), np.log(1.5), size=d))
    return X, y, theta


def _brute_force(X, y, family, theta, degree, Xq):
    """Universal kriging posterior written with explicit inverses."""
    R = correlation(family, X, X, theta)
    F = trend_matrix(degree, X)
    R_inv = np.linalg.inv(R)
    A = np.linalg.inv(F.T @ R_inv @ F)
    beta = A @ F.T @ R_inv @ y
    resid = y - F @ beta
    sigma2 = resid @ R_inv @ resid / len(y)
    r = correlation(family, Xq, X, theta)
    H = trend_matrix(degree, Xq)
    mean = H @ beta + r @ R_inv @ resid
    U = H.T - F.T @ R_inv @ r.T
    cov = sigma2 * (correlation(family, Xq, Xq, theta) - r @ R_inv @ r.T + U.T @ A @ U)
    return mean, cov


class TestKernels:
    """Tests for kernel evaluation."""

    @given(families, seeds)
    @settings(max_examples=50, deadline=None)
    def test_correlation_is_symmetric_unit_diagonal(self, family, seed):
        """
        **Feature: bocoa, Property 9: Correlation matrix shape**
        """
        X, _, theta = _dataset(seed, n=8)
        R = correlation(family, X, X, theta)
        assert np.allclose(R, R.T)
        assert np.allclose(np.diag(R), 1.0)
        assert np.all(np.linalg.eigvalsh(R) > -1e-10)

    def test_kernel_eval_scales_with_variance(self):
        spec = KernelSpec(KernelFamily.MATERN52, np.array([0.5, 0.5]), variance=4.0)
        assert kernel_eval(spec, np.zeros(2), np.zeros(2)) == pytest.approx(4.0)

    def test_kernel_spec_rejects_bad_lengthscales(self):
        with pytest.raises(ValueError):
            KernelSpec(KernelFamily.MATERN52, np.array([0.5, 0.0]))

    def test_trend_spec_length(self):
        TrendSpec(TrendDegree.QUADRATIC, np.zeros(7))
        with pytest.raises(ValueError):
            TrendSpec(TrendDegree.QUADRATIC, np.zeros(6))

    @pytest.mark.parametrize("degree,d,expected", [
        (TrendDegree.CONSTANT, 5, 1),
        (TrendDegree.LINEAR, 5, 6),
        (TrendDegree.QUADRATIC, 5, 11),
    ])
    def test_basis_length(self, degree, d, expected):
        assert basis_length(degree, d) == expected

    @given(families, seeds)
    @settings(max_examples=20, deadline=None)
    def test_log_gradients_match_finite_differences(self, family, seed):
        """
        **Feature: bocoa, Property 10: Correlation log-gradients**
        """
        X, _, theta = _dataset(seed, n=6)
        dR = correlation_log_gradients(family, X, theta)
        h = 1e-6
        for k in range(theta.size):
            up, down = theta.copy(), theta.copy()
            up[k] *= np.exp(h)
            down[k] *= np.exp(-h)
            numeric = (correlation(family, X, X, up) - correlation(family, X, X, down)) / (2 * h)
            assert np.allclose(dR[k], numeric, atol=1e-6)


class TestInterpolation:
    """Tests for interpolation without nugget."""

    @given(families, degrees, seeds)
    @settings(max_examples=50, deadline=None)
    def test_mean_interpolates_training_points(self, family, degree, seed):
        """
        **Feature: bocoa, Property 11: Interpolation**

        Without nugget, the posterior mean reproduces every observation and
        the posterior variance vanishes there.
        """
        X, y, theta = _dataset(seed)
        model = GPModel(X, y, family, theta, degree)
        mean, var = model.predict(X)
        scale = max(1.0, float(np.max(np.abs(y))))
        assert np.all(np.abs(mean - y) <= 1e-6 * scale)
        assert np.all(var <= 1e-6 * model.variance)

    def test_variance_non_negative_everywhere(self):
        X, y, theta = _dataset(5)
        model = GPModel(X, y, KernelFamily.MATERN52, theta, TrendDegree.LINEAR)
        grid = np.random.default_rng(0).uniform(size=(200, 3))
        _, var = model.predict(grid)
        assert np.all(var >= 0)

    def test_nugget_breaks_interpolation(self):
        X, y, theta = _dataset(6)
        model = GPModel(X, y, KernelFamily.MATERN52, theta, TrendDegree.CONSTANT, nugget=0.5)
        mean, _ = model.predict(X)
        assert not np.allclose(mean, y, atol=1e-6)


class TestPosteriorOracle:
    """Tests against explicit universal kriging formulas."""

    @pytest.mark.parametrize("family", list(KernelFamily))
    @pytest.mark.parametrize("degree", [TrendDegree.CONSTANT, TrendDegree.LINEAR])
    def test_one_dimensional_toy(self, family, degree):
        X = np.array([[0.1], [0.45], [0.9]])
        y = np.array([1.0, -0.5, 0.3])
        theta = np.array([0.4])
        Xq = np.array([[0.0], [0.3], [0.6], [1.0]])
        model = GPModel(X, y, family, theta, degree)
        mean, cov = _brute_force(X, y, family, theta, degree, Xq)
        pred_mean, pred_var = model.predict(Xq)
        assert np.allclose(pred_mean, mean, atol=1e-8)
        assert np.allclose(pred_var, np.diag(cov), atol=1e-8)
        assert np.allclose(model.covariance(Xq, Xq), cov, atol=1e-8)

    def test_single_point_helpers(self):
        X = np.array([[0.1], [0.45], [0.9]])
        model = GPModel(X, np.array([1.0, -0.5, 0.3]), KernelFamily.MATERN52,
                        np.array([0.4]), TrendDegree.CONSTANT)
        m, v = posterior_moments(model, np.array([0.3]))
        assert posterior_cross_cov(model, np.array([0.3]), np.array([0.3])) == pytest.approx(v)
        assert m == pytest.approx(model.predict(np.array([[0.3]]))[0][0])


class TestLikelihood:
    """Tests for the concentrated likelihood and its gradient."""

    @pytest.mark.parametrize("seed", range(20))
    def test_gradient_matches_central_differences(self, seed):
        """
        **Feature: bocoa, Property 12: Likelihood gradient**

        The analytic gradient w.r.t. log lengthscales matches central finite
        differences within a relative error of 1e-4.
        """
        X, y, theta = _dataset(seed, n=15)
        family = KernelFamily.MATERN52 if seed % 2 == 0 else KernelFamily.EXPONENTIAL
        _, grad = concentrated_nll(X, y, family, theta, TrendDegree.CONSTANT)
        h = 1e-5
        numeric = np.zeros_like(theta)
        for k in range(theta.size):
            up, down = np.log(theta), np.log(theta)
            up[k] += h
            down[k] -= h
            numeric[k] = (concentrated_nll(X, y, family, np.exp(up), TrendDegree.CONSTANT)[0]
                          - concentrated_nll(X, y, family, np.exp(down), TrendDegree.CONSTANT)[0]) / (2 * h)
        scale = max(1.0, float(np.max(np.abs(numeric))))
        assert np.max(np.abs(grad - numeric)) <= 1e-4 * scale

    def test_nll_matches_model(self):
        X, y, theta = _dataset(3)
        value, _ = concentrated_nll(X, y, KernelFamily.MATERN52, theta, TrendDegree.LINEAR)
        model = GPModel(X, y, KernelFamily.MATERN52, theta, TrendDegree.LINEAR)
        assert value == pytest.approx(model.nll)
        assert model.log_likelihood == pytest.approx(-value)


class TestPredictGradient:
    """Tests for posterior gradients."""

    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_matches_finite_differences(self, seed):
        """
        **Feature: bocoa, Property 13: Posterior gradient**
        """
        X, y, theta = _dataset(seed)
        model = GPModel(X, y, KernelFamily.MATERN52, theta, TrendDegree.QUADRATIC)
        x = np.random.default_rng(seed).uniform(0.1, 0.9, size=3)
        mean, var, dmean, dvar = model.predict_gradient(x)
        h = 1e-6
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            (m_up,), (v_up,) = model.predict((x + e)[None, :])
            (m_dn,), (v_dn,) = model.predict((x - e)[None, :])
            assert dmean[k] == pytest.approx((m_up - m_dn) / (2 * h), rel=1e-4, abs=1e-6)
            assert dvar[k] == pytest.approx((v_up - v_dn) / (2 * h), rel=1e-3, abs=1e-6 * model.variance)

    def test_exponential_kernel_has_no_gradient(self):
        X, y, theta = _dataset(1)
        model = GPModel(X, y, KernelFamily.EXPONENTIAL, theta, TrendDegree.CONSTANT)
        with pytest.raises(ValueError):
            model.predict_gradient(np.full(3, 0.5))


class TestFactorizationFailures:
    """Tests for singular inputs."""

    def test_duplicate_points_fail_without_nugget(self):
        X = np.array([[0.2, 0.2], [0.2, 0.2], [0.8, 0.5]])
        with pytest.raises(CovarianceFactorizationError):
            GPModel(X, np.array([1.0, 1.0, 0.0]), KernelFamily.MATERN52,
                    np.array([0.3, 0.3]), TrendDegree.CONSTANT)

    def test_duplicate_points_succeed_with_nugget(self):
        X = np.array([[0.2, 0.2], [0.2, 0.2], [0.8, 0.5]])
        model = GPModel(X, np.array([1.0, 1.0, 0.0]), KernelFamily.MATERN52,
                        np.array([0.3, 0.3]), TrendDegree.CONSTANT, nugget=1e-6)
        assert np.isfinite(model.nll)

    def test_too_few_points_for_trend(self):
        with pytest.raises(ValueError):
            GPModel(np.random.default_rng(0).uniform(size=(4, 3)), np.zeros(4),
                    KernelFamily.MATERN52, np.ones(3), TrendDegree.QUADRATIC)
