"""
Hyperparameter estimation for the kriging model.

Training maximizes the concentrated likelihood over log lengthscales with a
multi-start L-BFGS-B search from a Latin hypercube of 2d start points inside
the lengthscale bounds. Around it sits the robustness machinery of a BO run:

- outputs are centered and normalized once, from the initial DoE;
- lengthscales are clipped to bounds derived from the search space;
- if the covariance cannot be factorized, a small nugget is added and the
  training restarted; the nugget then stays for the rest of the run;
- after repeated acquisition failures, likelihood maximization is skipped
  and the lengthscales are shrunk to a fraction of their previous values.
"""

import logging
import math
from dataclasses import dataclass, replace, field
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from core.doe import latin_hypercube
from core.gp_model import CovarianceFactorizationError, GPModel, concentrated_nll
from core.kernels import KernelFamily, TrendDegree
from core.testbed import SearchSpace


logger = logging.getLogger(__name__)

FAILURES_BEFORE_RANGE_DECREASE = 3
RANGE_DECREASE_FACTOR = 2.0 / 3.0
NUGGET_FACTOR = 1e-8
DEFAULT_MAX_ITER = 100
LIKELIHOOD_PENALTY = 1e10


class ModelTrainingError(RuntimeError):
    """Raised when no model can be trained, even with a nugget."""


@dataclass(frozen=True)
class OutputRescaler:
    """
    Affine normalization of the outputs, frozen from the initial DoE.

    Attributes:
        center: Mean of the initial outputs
        scale: Population standard deviation of the initial outputs (1 if zero)
    """
    center: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"Scale must be positive, got {self.scale}")

    @classmethod
    def fit(cls, initial_outputs) -> "OutputRescaler":
        y = np.asarray(initial_outputs, dtype=float).ravel()
        if y.size < 2:
            raise ValueError(f"Rescaling needs at least 2 outputs, got {y.size}")
        scale = float(np.std(y))
        return cls(center=float(np.mean(y)), scale=scale if scale > 0 else 1.0)

    def apply(self, f):
        return (np.asarray(f, dtype=float) - self.center) / self.scale

    def invert(self, z):
        return np.asarray(z, dtype=float) * self.scale + self.center


def rescale_fit(initial_outputs) -> OutputRescaler:
    """
    Fit the output rescaler on the initial DoE outputs.

    Examples:
        >>> r = rescale_fit([0.0, 2.0])
        >>> (r.center, r.scale)
        (1.0, 1.0)
        >>> rescale_fit([5.0, 5.0, 5.0]).scale
        1.0
    """
    return OutputRescaler.fit(initial_outputs)


def rescale_apply(rescaler: OutputRescaler, f):
    return rescaler.apply(f)


def rescale_invert(rescaler: OutputRescaler, z):
    return rescaler.invert(z)


@dataclass(frozen=True, eq=False)
class TrainerState:
    """
    Training state carried across the iterations of one run.

    Attributes:
        consecutive_failures: Acquisition failures since the last EI success
        nugget_active: Whether the nugget regularization is on
        nugget_value: Nugget magnitude, relative to the process variance
        previous_lengthscales: Lengthscales of the last trained model
    """
    consecutive_failures: int = 0
    nugget_active: bool = False
    nugget_value: float = 0.0
    previous_lengthscales: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        if self.consecutive_failures < 0:
            raise ValueError("consecutive_failures must be non-negative")
        if self.nugget_active and not self.nugget_value > 0:
            raise ValueError("An active nugget must be positive")

    @property
    def range_decrease_due(self) -> bool:
        return (self.consecutive_failures >= FAILURES_BEFORE_RANGE_DECREASE
                and self.previous_lengthscales is not None)

    @property
    def nugget(self) -> float:
        return self.nugget_value if self.nugget_active else 0.0

    def with_nugget(self, value: float) -> "TrainerState":
        return replace(self, nugget_active=True, nugget_value=float(value))

    def record_acquisition(self, ei_failed: bool, ei_succeeded: bool) -> "TrainerState":
        """
        Update the failure counter after one acquisition.

        EI failures increment the counter; only an acquisition that ends
        with an accepted EI point resets it.
        """
        if ei_failed:
            return replace(self, consecutive_failures=self.consecutive_failures + 1)
        if ei_succeeded:
            return replace(self, consecutive_failures=0)
        return self


@dataclass(frozen=True)
class GPConfig:
    """
    Model choices of a GP.

    Attributes:
        family: Kernel family
        degree: Trend degree
        max_iter: L-BFGS-B iterations per start
        n_starts: Number of LHS starts (None = 2 d)
    """
    family: KernelFamily = KernelFamily.MATERN52
    degree: TrendDegree = TrendDegree.CONSTANT
    max_iter: int = DEFAULT_MAX_ITER
    n_starts: Optional[int] = None

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be positive, got {self.max_iter}")
        if self.n_starts is not None and self.n_starts < 1:
            raise ValueError(f"n_starts must be positive, got {self.n_starts}")

    def starts_for(self, d: int) -> int:
        return self.n_starts if self.n_starts is not None else 2 * d


def lengthscale_bounds(space: SearchSpace) -> Tuple[np.ndarray, np.ndarray]:
    """
    Lengthscale bounds (U - L) sqrt(d) / 100 and (U - L) sqrt(d).

    Examples:
        >>> lo, hi = lengthscale_bounds(SearchSpace.box(4))
        >>> lo.tolist(), hi.tolist()
        ([0.2, 0.2, 0.2, 0.2], [20.0, 20.0, 20.0, 20.0])
    """
    scale = space.widths * math.sqrt(space.dim)
    return scale / 100.0, scale


def nugget_for(outputs) -> float:
    """Nugget magnitude NUGGET_FACTOR * var(outputs)."""
    var = float(np.var(np.asarray(outputs, dtype=float)))
    return NUGGET_FACTOR * (var if var > 0 else 1.0)


def safe_nll(X, y, config: GPConfig, log_theta: np.ndarray, nugget: float):
    """
    Likelihood objective for L-BFGS-B.

    Returns (value, gradient, ok); failed evaluations give a large penalty
    with a zero gradient.
    """
    try:
        value, grad = concentrated_nll(X, y, config.family, np.exp(log_theta), config.degree, nugget)
    except CovarianceFactorizationError:
        return LIKELIHOOD_PENALTY, np.zeros_like(log_theta), False
    if not (math.isfinite(value) and np.all(np.isfinite(grad))):
        return LIKELIHOOD_PENALTY, np.zeros_like(log_theta), False
    return value, grad, True


def _maximize_likelihood(X, y, config: GPConfig, state: TrainerState, seed: int,
                         lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    d = X.shape[1]
    log_lo, log_hi = np.log(lo), np.log(hi)
    rng = np.random.default_rng(seed)
    starts = log_lo + latin_hypercube(config.starts_for(d), d, rng) * (log_hi - log_lo)
    if state.previous_lengthscales is not None:
        warm = np.log(np.clip(state.previous_lengthscales, lo, hi))
        starts = np.vstack([starts, warm])

    best = {"value": math.inf, "log_theta": None}

    def objective(log_theta):
        value, grad, ok = safe_nll(X, y, config, log_theta, state.nugget)
        if ok and value < best["value"]:
            best["value"] = value
            best["log_theta"] = log_theta.copy()
        return value, grad

    bounds = list(zip(log_lo, log_hi))
    for start in starts:
        minimize(objective, start, jac=True, method="L-BFGS-B", bounds=bounds,
                 options={"maxiter": config.max_iter})

    if best["log_theta"] is None:
        raise CovarianceFactorizationError("No start point gave a factorizable covariance")
    return np.clip(np.exp(best["log_theta"]), lo, hi)


def train(X: np.ndarray, y: np.ndarray, config: GPConfig, state: TrainerState,
          seed: int, space: Optional[SearchSpace] = None) -> Tuple[GPModel, TrainerState]:
    """
    Train a GP on working data.

    Args:
        X: Inputs (t, d) in model coordinates
        y: Working outputs (t,)
        config: Kernel family, trend degree and search settings
        state: Trainer state of the run
        seed: Seed of the multi-start design
        space: Space giving the lengthscale bounds (default: unit cube)

    Returns:
        (model, updated state)

    Raises:
        ModelTrainingError: If training fails even with the nugget
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    d = X.shape[1]
    lo, hi = lengthscale_bounds(space if space is not None else SearchSpace.unit_cube(d))

    if state.range_decrease_due:
        theta = np.clip(RANGE_DECREASE_FACTOR * state.previous_lengthscales, lo, hi)
        logger.warning(f"Range decrease after {state.consecutive_failures} acquisition failures: "
                       f"lengthscales -> {np.array2string(theta, precision=4)}")
        return _build_with_fallback(X, y, config, state, theta)

    try:
        theta = _maximize_likelihood(X, y, config, state, seed, lo, hi)
        model = GPModel(X, y, config.family, theta, config.degree, state.nugget)
        return model, replace(state, previous_lengthscales=theta)
    except CovarianceFactorizationError as e:
        if state.nugget_active:
            raise ModelTrainingError(f"Training failed with nugget {state.nugget_value:.3e}: {e}") from e
        state = state.with_nugget(nugget_for(y))
        logger.warning(f"Covariance factorization failed ({e}); nugget {state.nugget_value:.3e} activated")

    try:
        theta = _maximize_likelihood(X, y, config, state, seed, lo, hi)
        model = GPModel(X, y, config.family, theta, config.degree, state.nugget)
    except CovarianceFactorizationError as e:
        raise ModelTrainingError(f"Training failed after nugget retry: {e}") from e
    return model, replace(state, previous_lengthscales=theta)


def _build_with_fallback(X, y, config: GPConfig, state: TrainerState,
                         theta: np.ndarray) -> Tuple[GPModel, TrainerState]:
    """Build a model at fixed lengthscales, activating the nugget if needed."""
    try:
        model = GPModel(X, y, config.family, theta, config.degree, state.nugget)
    except CovarianceFactorizationError as e:
        if state.nugget_active:
            raise ModelTrainingError(f"Model at fixed lengthscales failed: {e}") from e
        state = state.with_nugget(nugget_for(y))
        logger.warning(f"Covariance factorization failed ({e}); nugget {state.nugget_value:.3e} activated")
        try:
            model = GPModel(X, y, config.family, theta, config.degree, state.nugget)
        except CovarianceFactorizationError as e2:
            raise ModelTrainingError(f"Model at fixed lengthscales failed after nugget retry: {e2}") from e2
    return model, replace(state, previous_lengthscales=theta)
