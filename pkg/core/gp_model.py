"""
Universal kriging model.

A GPModel conditions a Gaussian process with a polynomial trend on a set of
observations. The trend coefficients beta and the process variance sigma^2
are concentrated out of the likelihood: beta by generalized least squares,
sigma^2 as the residual quadratic form divided by the number of points.

Notation:
    R    correlation matrix of the inputs plus nugget * I
    L    lower Cholesky factor of R
    F    trend matrix of the inputs
    Ft   L^-1 F, factored as Q Rf
    yt   L^-1 y
    et   yt - Ft beta (whitened GLS residuals)
"""

import math
from typing import Tuple

import numpy as np
from scipy.linalg import cholesky, solve_triangular, cho_solve

from core.kernels import (
    KernelFamily,
    KernelSpec,
    TrendDegree,
    TrendSpec,
    basis_length,
    correlation,
    correlation_input_gradient,
    correlation_log_gradients,
    trend_jacobian,
    trend_matrix,
)


MIN_PIVOT = 1e-12
ZERO_VARIANCE = 1e-12
_TINY_VARIANCE = np.finfo(float).tiny


class CovarianceFactorizationError(np.linalg.LinAlgError):
    """Raised when the covariance matrix cannot be factorized."""


def _factorize(R: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of R, rejecting numerically singular pivots."""
    if not np.all(np.isfinite(R)):
        raise CovarianceFactorizationError("Correlation matrix has non-finite entries")
    try:
        L = cholesky(R, lower=True, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise CovarianceFactorizationError(f"Cholesky factorization failed: {e}") from e
    min_pivot = float(np.min(np.diag(L)) ** 2)
    if not min_pivot >= MIN_PIVOT:
        raise CovarianceFactorizationError(
            f"Correlation matrix is numerically singular (min pivot {min_pivot:.3e})"
        )
    return L


class GPModel:
    """
    Conditional Gaussian process with a GLS trend.

    Immutable after construction; all posterior queries are pure.

    Attributes:
        inputs: Training inputs (t, d), in model coordinates
        outputs: Training outputs (t,)
        kernel: KernelSpec carrying the lengthscales and estimated sigma^2
        trend: TrendSpec carrying the estimated beta
        nugget: Diagonal regularization, relative to sigma^2

    Examples:
        >>> X = np.array([[0.0], [0.5], [1.0]])
        >>> model = GPModel(X, np.array([1.0, 0.0, 1.0]), KernelFamily.MATERN52,
        ...                 np.array([0.3]), TrendDegree.CONSTANT)
        >>> mean, var = model.predict(X)
        >>> np.allclose(mean, [1.0, 0.0, 1.0])
        True
    """

    def __init__(self, inputs: np.ndarray, outputs: np.ndarray, family: KernelFamily,
                 lengthscales: np.ndarray, degree: TrendDegree, nugget: float = 0.0):
        X = np.atleast_2d(np.asarray(inputs, dtype=float))
        y = np.asarray(outputs, dtype=float).ravel()
        theta = np.asarray(lengthscales, dtype=float).ravel()
        t, d = X.shape

        if y.size != t:
            raise ValueError(f"Got {t} inputs but {y.size} outputs")
        if theta.size != d:
            raise ValueError(f"Expected {d} lengthscales, got {theta.size}")
        if nugget < 0:
            raise ValueError(f"Nugget must be non-negative, got {nugget}")
        p = basis_length(degree, d)
        if t < p:
            raise ValueError(f"A {degree.value} trend in dimension {d} needs at least {p} points, got {t}")

        self.inputs = X
        self.outputs = y
        self.nugget = float(nugget)

        R = correlation(family, X, X, theta) + self.nugget * np.eye(t)
        L = _factorize(R)
        F = trend_matrix(degree, X)
        Ft = solve_triangular(L, F, lower=True, check_finite=False)
        yt = solve_triangular(L, y, lower=True, check_finite=False)

        Q, Rf = np.linalg.qr(Ft)
        rf_diag = np.abs(np.diag(Rf))
        if not np.all(rf_diag > 1e-10 * max(1.0, float(np.max(rf_diag)))):
            raise CovarianceFactorizationError("Trend matrix is rank deficient on the inputs")
        beta = solve_triangular(Rf, Q.T @ yt, lower=False, check_finite=False)
        et = yt - Ft @ beta
        sigma2 = max(float(et @ et) / t, _TINY_VARIANCE)

        self._L = L
        self._Ft = Ft
        self._Rf = Rf
        self._et = et
        self._alpha = solve_triangular(L.T, et, lower=False, check_finite=False)
        self._log_det_half = float(np.sum(np.log(np.diag(L))))

        self.kernel = KernelSpec(family, theta, sigma2)
        self.trend = TrendSpec(degree, beta)

    @property
    def n(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def d(self) -> int:
        return int(self.inputs.shape[1])

    @property
    def family(self) -> KernelFamily:
        return self.kernel.family

    @property
    def lengthscales(self) -> np.ndarray:
        return self.kernel.lengthscales

    @property
    def variance(self) -> float:
        return self.kernel.variance

    @property
    def output_scale(self) -> float:
        """Estimated process standard deviation sigma."""
        return math.sqrt(self.kernel.variance)

    @property
    def nll(self) -> float:
        """Concentrated negative log-likelihood, up to constants."""
        return 0.5 * self.n * math.log(self.kernel.variance) + self._log_det_half

    @property
    def log_likelihood(self) -> float:
        return -self.nll

    def _whiten(self, Xq: np.ndarray):
        """Whitened cross-correlations and trend residuals of query points."""
        r = correlation(self.family, Xq, self.inputs, self.lengthscales)
        rt = solve_triangular(self._L, r.T, lower=True, check_finite=False)
        h = trend_matrix(self.trend.degree, Xq)
        u = h.T - self._Ft.T @ rt
        v = solve_triangular(self._Rf, u, trans="T", lower=False, check_finite=False)
        return h, rt, v

    def predict(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Posterior mean and variance at a batch of points.

        Args:
            X: Array (m, d) in model coordinates

        Returns:
            (mean, variance), each of shape (m,); variance clamped at 0
        """
        Xq = np.atleast_2d(np.asarray(X, dtype=float))
        h, rt, v = self._whiten(Xq)
        mean = h @ self.trend.coefficients + rt.T @ self._et
        var = self.variance * (1.0 - np.sum(rt ** 2, axis=0) + np.sum(v ** 2, axis=0))
        return mean, np.maximum(var, 0.0)

    def covariance(self, X1: np.ndarray, X2: np.ndarray) -> np.ndarray:
        """Posterior covariance matrix between two batches of points."""
        X1 = np.atleast_2d(np.asarray(X1, dtype=float))
        X2 = np.atleast_2d(np.asarray(X2, dtype=float))
        _, rt1, v1 = self._whiten(X1)
        _, rt2, v2 = self._whiten(X2)
        prior = correlation(self.family, X1, X2, self.lengthscales)
        return self.variance * (prior - rt1.T @ rt2 + v1.T @ v2)

    def predict_gradient(self, x: np.ndarray) -> Tuple[float, float, np.ndarray, np.ndarray]:
        """
        Posterior mean and variance at one point with their gradients.

        Only available for the Matern 5/2 kernel.

        Returns:
            (mean, variance, d mean / dx, d variance / dx)
        """
        x = np.asarray(x, dtype=float).ravel()
        J = correlation_input_gradient(self.family, x, self.inputs, self.lengthscales)
        Jh = trend_jacobian(self.trend.degree, x)
        h, rt, v = self._whiten(x[None, :])
        rt, v = rt[:, 0], v[:, 0]

        mean = float(h[0] @ self.trend.coefficients + rt @ self._et)
        dmean = Jh.T @ self.trend.coefficients + J.T @ self._alpha

        var = self.variance * (1.0 - rt @ rt + v @ v)
        if var <= 0.0:
            return mean, 0.0, dmean, np.zeros_like(x)

        Jt = solve_triangular(self._L, J, lower=True, check_finite=False)
        w = solve_triangular(self._Rf, v, lower=False, check_finite=False)
        du = Jh - self._Ft.T @ Jt
        dvar = self.variance * (-2.0 * Jt.T @ rt + 2.0 * du.T @ w)
        return mean, float(var), dmean, dvar


def posterior_moments(model: GPModel, x: np.ndarray) -> Tuple[float, float]:
    """
    Posterior mean m(x) and variance c(x, x) at a single point.

    Examples:
        >>> X = np.array([[0.0], [1.0]])
        >>> model = GPModel(X, np.array([0.0, 2.0]), KernelFamily.MATERN52,
        ...                 np.array([0.5]), TrendDegree.CONSTANT)
        >>> round(posterior_moments(model, np.array([0.5]))[0], 10)
        1.0
    """
    mean, var = model.predict(np.asarray(x, dtype=float).ravel()[None, :])
    return float(mean[0]), float(var[0])


def posterior_cross_cov(model: GPModel, x: np.ndarray, x2: np.ndarray) -> float:
    """Posterior covariance c(x, x') between two single points."""
    x = np.asarray(x, dtype=float).ravel()[None, :]
    x2 = np.asarray(x2, dtype=float).ravel()[None, :]
    return float(model.covariance(x, x2)[0, 0])


def concentrated_nll(X: np.ndarray, y: np.ndarray, family: KernelFamily,
                     lengthscales: np.ndarray, degree: TrendDegree,
                     nugget: float = 0.0) -> Tuple[float, np.ndarray]:
    """
    Concentrated negative log-likelihood and its gradient w.r.t. log lengthscales.

    The value is (t/2) log sigma2_hat + (1/2) log det R. With
    alpha = R^-1 (y - F beta_hat), the gradient component k is
    (1/2) tr(R^-1 dR_k) - alpha' dR_k alpha / (2 sigma2_hat).

    Raises:
        CovarianceFactorizationError: If R cannot be factorized
    """
    model = GPModel(X, y, family, lengthscales, degree, nugget)
    dR = correlation_log_gradients(family, model.inputs, model.lengthscales)
    R_inv = cho_solve((model._L, True), np.eye(model.n), check_finite=False)
    alpha = model._alpha

    trace_term = 0.5 * np.einsum("ij,kji->k", R_inv, dR)
    quad_term = np.einsum("i,kij,j->k", alpha, dR, alpha) / (2.0 * model.variance)
    return model.nll, trace_term - quad_term
