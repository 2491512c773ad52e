"""
Output warping and input scaling.

The output warp is a monotone tanh-sum transform of the (rescaled)
observations, fitted once on the initial DoE. The input scaling is a
per-axis monotone deformation of the unit cube, refitted at every BO
iteration. Both are fitted by maximum likelihood jointly with the kernel
lengthscales, with positivity enforced through log parameters.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq, minimize

from core.gp_model import CovarianceFactorizationError, GPModel
from core.gp_train import GPConfig, LIKELIHOOD_PENALTY, lengthscale_bounds
from core.testbed import SearchSpace


logger = logging.getLogger(__name__)

WARP_TERMS = 2
WARP_LOG_A_BOUNDS = (-7.0, 2.0)
WARP_LOG_B_BOUNDS = (-3.0, 3.0)
SCALING_BOUNDS = (0.25, 4.0)
TRANSFORM_MAX_ITER = 50
# nll gain per warp parameter a fitted warp must show over the identity
WARP_GAIN_PER_PARAMETER = 1.0


@dataclass(frozen=True, eq=False)
class OutputWarp:
    """
    Warp f -> f + sum_j a_j tanh(b_j (c_j + f)).

    Attributes:
        a: Non-negative amplitudes (J,)
        b: Non-negative slopes (J,)
        c: Offsets (J,)
        is_fallback: True when the fit failed and the identity was returned
    """
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    is_fallback: bool = False

    def __post_init__(self):
        arrays = [np.asarray(v, dtype=float).ravel() for v in (self.a, self.b, self.c)]
        if len({v.size for v in arrays}) != 1:
            raise ValueError("Warp parameters a, b, c must have the same length")
        if np.any(arrays[0] < 0) or np.any(arrays[1] < 0):
            raise ValueError("Warp parameters a and b must be non-negative")
        for name, value in zip(("a", "b", "c"), arrays):
            object.__setattr__(self, name, value)

    @classmethod
    def identity(cls, terms: int = WARP_TERMS, is_fallback: bool = False) -> "OutputWarp":
        return cls(np.zeros(terms), np.ones(terms), np.zeros(terms), is_fallback)

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.a == 0))

    def to_dict(self) -> dict:
        return {"a": self.a.tolist(), "b": self.b.tolist(), "c": self.c.tolist(),
                "is_fallback": self.is_fallback}

    @classmethod
    def from_dict(cls, data: dict) -> "OutputWarp":
        return cls(np.array(data["a"]), np.array(data["b"]), np.array(data["c"]),
                   bool(data.get("is_fallback", False)))


def warp_apply(w: OutputWarp, f):
    """
    Apply the output warp.

    Examples:
        >>> w = OutputWarp(np.array([1.0, 0.0]), np.array([1.0, 1.0]), np.zeros(2))
        >>> round(float(warp_apply(w, 1.0)), 5)
        1.76159
    """
    f = np.asarray(f, dtype=float)
    terms = w.a * np.tanh(w.b * (w.c + f[..., None]))
    return f + np.sum(terms, axis=-1)


def warp_derivative(w: OutputWarp, f):
    """Derivative 1 + sum_j a_j b_j sech^2(b_j (c_j + f)), always >= 1."""
    f = np.asarray(f, dtype=float)
    sech2 = 1.0 / np.cosh(w.b * (w.c + f[..., None])) ** 2
    return 1.0 + np.sum(w.a * w.b * sech2, axis=-1)


def warp_invert(w: OutputWarp, z):
    """Invert the warp by bracketed root finding."""
    z = np.asarray(z, dtype=float)
    if w.is_identity:
        return z.copy()
    spread = float(np.sum(w.a)) + 1.0
    flat = np.array([
        brentq(lambda f, target=zi: float(warp_apply(w, f)) - target, zi - spread, zi + spread, xtol=1e-14)
        for zi in z.ravel()
    ])
    return flat.reshape(z.shape)


def _warp_from_vector(params: np.ndarray) -> OutputWarp:
    J = WARP_TERMS
    return OutputWarp(np.exp(params[:J]), np.exp(params[J:2 * J]), params[2 * J:3 * J])


def _value_only_nll(X, y, config: GPConfig, theta, nugget: float) -> Optional[float]:
    try:
        value = GPModel(X, y, config.family, theta, config.degree, nugget).nll
    except CovarianceFactorizationError:
        return None
    return value if math.isfinite(value) else None


def _identity_nll(X, y, config: GPConfig, log_lo, log_hi, nugget: float) -> float:
    """Best nll of the unwarped outputs over the log lengthscales."""
    def objective(log_theta):
        value = _value_only_nll(X, y, config, np.exp(log_theta), nugget)
        return LIKELIHOOD_PENALTY if value is None else value

    try:
        res = minimize(objective, 0.5 * (log_lo + log_hi), method="L-BFGS-B",
                       bounds=list(zip(log_lo, log_hi)), options={"maxiter": TRANSFORM_MAX_ITER})
    except (ValueError, FloatingPointError) as e:
        logger.debug(f"Identity fit failed: {e}")
        return math.inf
    return float(res.fun) if res.fun < LIKELIHOOD_PENALTY else math.inf


def warp_fit(X: np.ndarray, y: np.ndarray, config: GPConfig, seed: int,
             nugget: float = 0.0) -> OutputWarp:
    """
    Fit the output warp on the initial DoE.

    Maximizes the likelihood of the warped outputs, including the Jacobian
    term sum_i log warp'(y_i), jointly over the warp parameters and the log
    lengthscales. The fitted warp is kept only if its nll beats the best
    unwarped nll by WARP_GAIN_PER_PARAMETER per warp parameter; otherwise
    the identity is returned (not flagged as fallback).

    Args:
        X: Initial inputs in unit-cube coordinates (t, d)
        y: Rescaled initial outputs (t,)
        config: GP model choices
        seed: Seed of the random start

    Returns:
        Fitted warp, or the identity flagged as fallback on failure
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    d = X.shape[1]
    J = WARP_TERMS
    lo, hi = lengthscale_bounds(SearchSpace.unit_cube(d))
    log_lo, log_hi = np.log(lo), np.log(hi)
    c_bound = float(np.max(np.abs(y))) + 1.0

    bounds = ([WARP_LOG_A_BOUNDS] * J + [WARP_LOG_B_BOUNDS] * J + [(-c_bound, c_bound)] * J
              + list(zip(log_lo, log_hi)))
    lower = np.array([b[0] for b in bounds])
    upper = np.array([b[1] for b in bounds])

    def objective(params):
        w = _warp_from_vector(params)
        value = _value_only_nll(X, warp_apply(w, y), config, np.exp(params[3 * J:]), nugget)
        if value is None:
            return LIKELIHOOD_PENALTY
        return value - float(np.sum(np.log(warp_derivative(w, y))))

    rng = np.random.default_rng(seed)
    neutral = np.concatenate([np.full(J, -2.0), np.zeros(J), np.linspace(-1.0, 1.0, J),
                              0.5 * (log_lo + log_hi)])
    starts = [neutral, lower + rng.uniform(size=lower.size) * (upper - lower)]

    best_value, best_params = math.inf, None
    for start in starts:
        try:
            res = minimize(objective, start, method="L-BFGS-B", bounds=bounds,
                           options={"maxiter": TRANSFORM_MAX_ITER})
        except (ValueError, FloatingPointError) as e:
            logger.debug(f"Warp start failed: {e}")
            continue
        if res.fun < best_value and res.fun < LIKELIHOOD_PENALTY:
            best_value, best_params = float(res.fun), res.x

    if best_params is None:
        logger.warning("Output warp fit failed; using the identity warp")
        return OutputWarp.identity(is_fallback=True)

    identity_value = _identity_nll(X, y, config, log_lo, log_hi, nugget)
    if best_value > identity_value - WARP_GAIN_PER_PARAMETER * 3 * J:
        logger.debug(f"Output warp gains {identity_value - best_value:.4g} nll; keeping the identity")
        return OutputWarp.identity()

    w = _warp_from_vector(np.clip(best_params, lower, upper))
    logger.debug(f"Output warp fitted: a={w.a}, b={w.b}, c={w.c}, nll={best_value:.6g}")
    return w


@dataclass(frozen=True, eq=False)
class InputScaling:
    """
    Per-axis map x -> 1 - (1 - x^alpha)^beta of the unit interval.

    Attributes:
        alpha: Positive exponents (d,)
        beta: Positive exponents (d,)
        is_fallback: True when the fit failed and the identity was returned
        lengthscales: Kernel lengthscales fitted jointly with the scaling
    """
    alpha: np.ndarray
    beta: np.ndarray
    is_fallback: bool = False
    lengthscales: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float).ravel()
        beta = np.asarray(self.beta, dtype=float).ravel()
        if alpha.size != beta.size:
            raise ValueError("alpha and beta must have the same length")
        if not (np.all(alpha > 0) and np.all(beta > 0)):
            raise ValueError("Scaling exponents must be positive")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def identity(cls, d: int, is_fallback: bool = False) -> "InputScaling":
        return cls(np.ones(d), np.ones(d), is_fallback)

    @property
    def dim(self) -> int:
        return int(self.alpha.size)

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.alpha == 1.0) and np.all(self.beta == 1.0))

    def to_dict(self) -> dict:
        lengthscales = None if self.lengthscales is None else [float(v) for v in self.lengthscales]
        return {"alpha": self.alpha.tolist(), "beta": self.beta.tolist(),
                "lengthscales": lengthscales, "is_fallback": self.is_fallback}


def scaling_apply(s: InputScaling, x_unit):
    """
    Apply the input scaling to unit-cube points.

    Examples:
        >>> s = InputScaling(np.array([2.0]), np.array([1.0]))
        >>> float(scaling_apply(s, np.array([0.5]))[0])
        0.25
    """
    U = np.clip(np.asarray(x_unit, dtype=float), 0.0, 1.0)
    if s.is_identity:
        return U
    return 1.0 - (1.0 - U ** s.alpha) ** s.beta


def scaling_fit(X_unit: np.ndarray, y: np.ndarray, config: GPConfig, seed: int,
                nugget: float = 0.0,
                previous_lengthscales: Optional[np.ndarray] = None) -> InputScaling:
    """
    Fit the input scaling jointly with the lengthscales.

    Two L-BFGS-B descents: one from the identity scaling (with the previous
    lengthscales when known) and one from a seeded random point.

    Returns:
        Fitted scaling with exponents in SCALING_BOUNDS, or the identity
        flagged as fallback on failure. The jointly fitted lengthscales are
        attached for warm-starting the subsequent training.
    """
    X_unit = np.atleast_2d(np.asarray(X_unit, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    d = X_unit.shape[1]
    lo, hi = lengthscale_bounds(SearchSpace.unit_cube(d))
    log_lo, log_hi = np.log(lo), np.log(hi)
    log_s = (math.log(SCALING_BOUNDS[0]), math.log(SCALING_BOUNDS[1]))

    bounds = [log_s] * (2 * d) + list(zip(log_lo, log_hi))
    lower = np.array([b[0] for b in bounds])
    upper = np.array([b[1] for b in bounds])

    def unpack(params) -> Tuple[InputScaling, np.ndarray]:
        params = np.clip(params, lower, upper)
        s = InputScaling(np.exp(params[:d]), np.exp(params[d:2 * d]))
        return s, np.exp(params[2 * d:])

    def objective(params):
        s, theta = unpack(params)
        value = _value_only_nll(scaling_apply(s, X_unit), y, config, theta, nugget)
        return LIKELIHOOD_PENALTY if value is None else value

    if previous_lengthscales is not None:
        warm_theta = np.log(np.clip(previous_lengthscales, lo, hi))
    else:
        warm_theta = 0.5 * (log_lo + log_hi)
    rng = np.random.default_rng(seed)
    starts = [np.concatenate([np.zeros(2 * d), warm_theta]),
              lower + rng.uniform(size=lower.size) * (upper - lower)]

    best_value, best_params = math.inf, None
    for start in starts:
        try:
            res = minimize(objective, start, method="L-BFGS-B", bounds=bounds,
                           options={"maxiter": TRANSFORM_MAX_ITER})
        except (ValueError, FloatingPointError) as e:
            logger.debug(f"Scaling start failed: {e}")
            continue
        if res.fun < best_value and res.fun < LIKELIHOOD_PENALTY:
            best_value, best_params = float(res.fun), res.x

    if best_params is None:
        logger.warning("Input scaling fit failed; using the identity scaling")
        return InputScaling.identity(d, is_fallback=True)

    s, theta = unpack(best_params)
    return InputScaling(s.alpha, s.beta, lengthscales=theta)
