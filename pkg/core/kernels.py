"""
Covariance kernels and polynomial trend bases of the kriging model.

Kernels are anisotropic: the Matern 5/2 kernel on the scaled Euclidean
distance, and the exponential kernel as a tensor product of 1-d
exponentials. Correlation functions here have unit variance; the process
variance multiplies them in KernelSpec.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np


SQRT5 = np.sqrt(5.0)


class KernelFamily(Enum):
    """Supported kernel families."""
    MATERN52 = "matern52"
    EXPONENTIAL = "exponential"

    @property
    def smooth(self) -> bool:
        """True if sample paths and the posterior mean are differentiable."""
        return self is KernelFamily.MATERN52


class TrendDegree(Enum):
    """Polynomial trends without interactions."""
    CONSTANT = "constant"
    LINEAR = "linear"
    QUADRATIC = "quadratic"


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """
    A kernel with its hyperparameters.

    Attributes:
        family: Kernel family
        lengthscales: Positive range parameters, one per dimension
        variance: Process variance sigma^2
    """
    family: KernelFamily
    lengthscales: np.ndarray
    variance: float = 1.0

    def __post_init__(self):
        theta = np.asarray(self.lengthscales, dtype=float).ravel()
        if theta.size == 0 or not np.all(theta > 0):
            raise ValueError("Lengthscales must be positive")
        if not self.variance > 0:
            raise ValueError(f"Variance must be positive, got {self.variance}")
        object.__setattr__(self, "lengthscales", theta)

    @property
    def dim(self) -> int:
        return int(self.lengthscales.size)


@dataclass(frozen=True, eq=False)
class TrendSpec:
    """
    A trend with its GLS coefficients.

    Attributes:
        degree: Trend degree
        coefficients: beta, of length basis_length(degree, d)
    """
    degree: TrendDegree
    coefficients: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.coefficients, dtype=float).ravel()
        object.__setattr__(self, "coefficients", beta)
        if basis_length_for(self.degree, beta.size) is None:
            raise ValueError(f"{beta.size} coefficients do not fit a {self.degree.value} trend")


def correlation(family: KernelFamily, X1: np.ndarray, X2: np.ndarray,
                lengthscales: np.ndarray) -> np.ndarray:
    """
    Unit-variance correlation matrix between the rows of X1 and X2.

    Args:
        family: Kernel family
        X1: Array (n1, d)
        X2: Array (n2, d)
        lengthscales: Array (d,)

    Returns:
        Array (n1, n2)
    """
    X1 = np.atleast_2d(X1) / lengthscales
    X2 = np.atleast_2d(X2) / lengthscales
    if family is KernelFamily.MATERN52:
        diff = X1[:, None, :] - X2[None, :, :]
        r = np.sqrt(np.sum(diff ** 2, axis=2))
        return (1.0 + SQRT5 * r + (5.0 / 3.0) * r ** 2) * np.exp(-SQRT5 * r)
    if family is KernelFamily.EXPONENTIAL:
        l1 = np.sum(np.abs(X1[:, None, :] - X2[None, :, :]), axis=2)
        return np.exp(-l1)
    raise ValueError(f"Unknown kernel family: {family!r}")


def correlation_log_gradients(family: KernelFamily, X: np.ndarray,
                              lengthscales: np.ndarray) -> np.ndarray:
    """
    Derivatives of the correlation matrix of X w.r.t. log lengthscales.

    Returns:
        Array (d, n, n); slice k is dR / dlog(theta_k)
    """
    X = np.atleast_2d(X)
    scaled = (X[:, None, :] - X[None, :, :]) / lengthscales
    if family is KernelFamily.MATERN52:
        r = np.sqrt(np.sum(scaled ** 2, axis=2))
        factor = (5.0 / 3.0) * (1.0 + SQRT5 * r) * np.exp(-SQRT5 * r)
        return np.moveaxis(factor[:, :, None] * scaled ** 2, 2, 0)
    if family is KernelFamily.EXPONENTIAL:
        abs_scaled = np.abs(scaled)
        R = np.exp(-np.sum(abs_scaled, axis=2))
        return np.moveaxis(R[:, :, None] * abs_scaled, 2, 0)
    raise ValueError(f"Unknown kernel family: {family!r}")


def correlation_input_gradient(family: KernelFamily, x: np.ndarray, X: np.ndarray,
                               lengthscales: np.ndarray) -> np.ndarray:
    """
    Jacobian of the correlation vector r(x) = corr(x, X) w.r.t. x.

    Only defined for smooth kernels.

    Returns:
        Array (n, d)
    """
    if not family.smooth:
        raise ValueError(f"{family.value} kernel has no derivative at coincident points")
    diff = (np.asarray(x, dtype=float)[None, :] - np.atleast_2d(X)) / lengthscales
    r = np.sqrt(np.sum(diff ** 2, axis=1))
    factor = -(5.0 / 3.0) * (1.0 + SQRT5 * r) * np.exp(-SQRT5 * r)
    return factor[:, None] * diff / lengthscales


def kernel_eval(spec: KernelSpec, x: np.ndarray, x2: np.ndarray) -> float:
    """
    Evaluate k(x, x') for a kernel spec.

    Examples:
        >>> spec = KernelSpec(KernelFamily.EXPONENTIAL, np.array([1.0, 2.0]))
        >>> round(kernel_eval(spec, np.zeros(2), np.array([1.0, 2.0])), 5)
        0.13534
    """
    x = np.asarray(x, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    if x.size != spec.dim or x2.size != spec.dim:
        raise ValueError(f"Points must have dimension {spec.dim}")
    return float(spec.variance * correlation(spec.family, x, x2, spec.lengthscales)[0, 0])


def basis_length(degree: TrendDegree, d: int) -> int:
    """Number of trend basis functions: 1, d + 1 or 2 d + 1."""
    if degree is TrendDegree.CONSTANT:
        return 1
    if degree is TrendDegree.LINEAR:
        return d + 1
    if degree is TrendDegree.QUADRATIC:
        return 2 * d + 1
    raise ValueError(f"Unknown trend degree: {degree!r}")


def basis_length_for(degree: TrendDegree, length: int):
    """Dimension d implied by a coefficient count, or None if inconsistent."""
    if degree is TrendDegree.CONSTANT:
        return 0 if length == 1 else None
    if degree is TrendDegree.LINEAR:
        return length - 1 if length >= 2 else None
    if degree is TrendDegree.QUADRATIC:
        return (length - 1) // 2 if length >= 3 and length % 2 == 1 else None
    return None


def trend_matrix(degree: TrendDegree, X: np.ndarray) -> np.ndarray:
    """
    Trend basis evaluated at the rows of X.

    Returns:
        Array (n, basis_length(degree, d)) with columns 1, x_1..x_d, x_1^2..x_d^2
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ones = np.ones((X.shape[0], 1))
    if degree is TrendDegree.CONSTANT:
        return ones
    if degree is TrendDegree.LINEAR:
        return np.hstack([ones, X])
    if degree is TrendDegree.QUADRATIC:
        return np.hstack([ones, X, X ** 2])
    raise ValueError(f"Unknown trend degree: {degree!r}")


def trend_basis(degree: TrendDegree, x: np.ndarray) -> np.ndarray:
    """
    Trend basis h(x) at a single point.

    Examples:
        >>> trend_basis(TrendDegree.QUADRATIC, np.array([2.0, 3.0])).tolist()
        [1.0, 2.0, 3.0, 4.0, 9.0]
    """
    return trend_matrix(degree, np.asarray(x, dtype=float).ravel()[None, :])[0]


def trend_jacobian(degree: TrendDegree, x: np.ndarray) -> np.ndarray:
    """
    Jacobian of h(x) w.r.t. x.

    Returns:
        Array (basis_length, d)
    """
    x = np.asarray(x, dtype=float).ravel()
    d = x.size
    zero = np.zeros((1, d))
    if degree is TrendDegree.CONSTANT:
        return zero
    if degree is TrendDegree.LINEAR:
        return np.vstack([zero, np.eye(d)])
    if degree is TrendDegree.QUADRATIC:
        return np.vstack([zero, np.eye(d), np.diag(2.0 * x)])
    raise ValueError(f"Unknown trend degree: {degree!r}")
