"""
Acquisition step of the BO loop.

Expected Improvement and the GP-mean proxy criterion, the three criterion
optimizers (multi-start L-BFGS-B, random search only, single local ascent),
and the failure handling around them: fallback to the GP mean or a random
point when EI is numerically zero everywhere, and replacement of candidates
that are too close to existing observations.

All candidates live in the unit cube; outcomes also carry the mapped point
in the search space.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Callable, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm

from core.doe import latin_hypercube
from core.gp_model import GPModel, ZERO_VARIANCE, posterior_moments
from core.seeding import Stream, component_rng
from core.surrogate import PROXIMITY_THRESHOLD, Surrogate

if TYPE_CHECKING:
    from core.configs import BOConfig


logger = logging.getLogger(__name__)

MEAN_PERIOD = 5
EI_FAILURE_RATIO = 1e-12
MAX_WARMUP = 2000
WARMUP_PER_DIM = 500
MAX_RESTARTS = 10
LOCAL_MAX_ITER = 100


class AcquisitionKind(Enum):
    """Criterion optimizers."""
    MULTISTART_BFGS = "multistart_bfgs"
    RANDOM_ONLY = "random_only"
    SINGLE_LOCAL = "single_local"


class Criterion(Enum):
    EI = "ei"
    MEAN = "mean"


class AcquisitionStatus(Enum):
    """How the acquired point was obtained."""
    EI_SUCCESS = "EIsuccess"
    FELL_BACK_TO_MEAN = "FellBackToMean"
    FELL_BACK_TO_RANDOM = "FellBackToRandom"
    REPLACED_BY_PROXIMITY = "ReplacedByProximity"
    MEAN_SCHEDULED = "MeanScheduled"
    EI_FAILED = "EIFailed"


@dataclass(frozen=True)
class AcquisitionStrategy:
    """
    Criterion optimizer settings.

    Attributes:
        kind: Optimizer kind
        warmup_size: Size of each space-filling warm-up design
        restarts: Number of warm-up + local ascent rounds
    """
    kind: AcquisitionKind
    warmup_size: int
    restarts: int

    def __post_init__(self):
        if self.warmup_size < 1 or self.restarts < 1:
            raise ValueError("warmup_size and restarts must be positive")

    @classmethod
    def for_dimension(cls, kind: AcquisitionKind, d: int) -> "AcquisitionStrategy":
        """
        Strategy with warm-up size min(2000, 500 d) and min(10, d) restarts.

        Examples:
            >>> s = AcquisitionStrategy.for_dimension(AcquisitionKind.MULTISTART_BFGS, 3)
            >>> (s.warmup_size, s.restarts)
            (1500, 3)
        """
        return cls(kind, min(MAX_WARMUP, WARMUP_PER_DIM * d), min(MAX_RESTARTS, d))


@dataclass(frozen=True, eq=False)
class AcquisitionOutcome:
    """
    Result of an acquisition.

    Attributes:
        unit_point: Candidate in the unit cube
        point: Candidate in the search space
        value: Criterion value at the candidate (nan for random points)
        status: How the point was obtained
        ei_failed: True if EI maximization failed during this acquisition
    """
    unit_point: np.ndarray
    point: np.ndarray
    value: float
    status: AcquisitionStatus
    ei_failed: bool = False


def ei_from_moments(mean, std, f_min: float, zero_std: float):
    """
    Vectorized EI from posterior mean and standard deviation.

    Where std <= zero_std, EI is the deterministic improvement max(f_min - m, 0).
    """
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    improvement = f_min - mean
    degenerate = std <= zero_std
    safe_std = np.where(degenerate, 1.0, std)
    u = improvement / safe_std
    ei = improvement * norm.cdf(u) + safe_std * norm.pdf(u)
    return np.where(degenerate, np.maximum(improvement, 0.0), np.maximum(ei, 0.0))


def expected_improvement(model: GPModel, f_min: float, x: np.ndarray) -> float:
    """
    Expected Improvement (f_min - m) Phi(u) + s phi(u), u = (f_min - m) / s.

    Args:
        model: Trained GP
        f_min: Best observation in the model's working output space
        x: Point in model coordinates
    """
    mean, var = posterior_moments(model, x)
    zero_std = ZERO_VARIANCE * model.output_scale
    return float(ei_from_moments(mean, math.sqrt(var), f_min, zero_std))


def neg_posterior_mean(model: GPModel, x: np.ndarray) -> float:
    """Minus the posterior mean; its maximizer minimizes the predicted mean."""
    return -posterior_moments(model, x)[0]


def _criterion_functions(surrogate: Surrogate, f_min: float, criterion: Criterion):
    """Batch values and value-with-gradient functions of a criterion on the unit cube."""
    zero_std = ZERO_VARIANCE * surrogate.output_scale

    if criterion is Criterion.MEAN:
        def batch(U):
            return -surrogate.predict(U)[0]

        def with_gradient(u):
            mean, _, dmean, _ = surrogate.predict_gradient(u)
            return -mean, -dmean
        return batch, with_gradient

    def batch(U):
        mean, var = surrogate.predict(U)
        return ei_from_moments(mean, np.sqrt(var), f_min, zero_std)

    def with_gradient(u):
        mean, var, dmean, dvar = surrogate.predict_gradient(u)
        std = math.sqrt(var)
        if std <= zero_std:
            improvement = f_min - mean
            if improvement > 0:
                return improvement, -dmean
            return 0.0, np.zeros_like(dmean)
        z = (f_min - mean) / std
        value = (f_min - mean) * norm.cdf(z) + std * norm.pdf(z)
        grad = -norm.cdf(z) * dmean + norm.pdf(z) * dvar / (2.0 * std)
        return max(value, 0.0), grad

    return batch, with_gradient


def _local_ascent(with_gradient: Callable, batch: Callable, start: np.ndarray) -> Tuple[np.ndarray, float]:
    """L-BFGS-B ascent inside the unit cube; never returns a worse point than the start."""
    d = start.size

    def negated(u):
        value, grad = with_gradient(u)
        if not (math.isfinite(value) and np.all(np.isfinite(grad))):
            return 0.0, np.zeros(d)
        return -value, -grad

    res = minimize(negated, start, jac=True, method="L-BFGS-B", bounds=[(0.0, 1.0)] * d,
                   options={"maxiter": LOCAL_MAX_ITER})
    candidate = np.clip(res.x, 0.0, 1.0)
    values = batch(np.vstack([start, candidate]))
    if values[1] > values[0]:
        return candidate, float(values[1])
    return start.copy(), float(values[0])


def optimize_acquisition(surrogate: Surrogate, f_min: float, strategy: AcquisitionStrategy,
                         seed: int, criterion: Criterion = Criterion.EI,
                         ei_floor: float = 0.0) -> AcquisitionOutcome:
    """
    Maximize a criterion over the unit cube.

    Args:
        surrogate: Trained surrogate
        f_min: Best working output
        strategy: Optimizer settings
        seed: Seed of the warm-up designs and random starts
        criterion: EI or minus the GP mean
        ei_floor: EI values at or below this count as failure

    Returns:
        Outcome with status EI_SUCCESS (or MEAN_SCHEDULED for the mean),
        or EI_FAILED when no candidate has a usable value
    """
    batch, with_gradient = _criterion_functions(surrogate, f_min, criterion)
    rng = np.random.default_rng(seed)
    d = surrogate.dim

    best_u, best_value = None, -math.inf
    if strategy.kind is AcquisitionKind.RANDOM_ONLY:
        U = rng.uniform(size=(strategy.warmup_size * strategy.restarts, d))
        values = batch(U)
        i = int(np.argmax(values))
        best_u, best_value = U[i], float(values[i])
    elif strategy.kind is AcquisitionKind.SINGLE_LOCAL:
        best_u, best_value = _local_ascent(with_gradient, batch, rng.uniform(size=d))
    else:
        for restart in range(strategy.restarts):
            U = latin_hypercube(strategy.warmup_size, d, rng)
            values = batch(U)
            start = U[int(np.argmax(values))]
            u, value = _local_ascent(with_gradient, batch, start)
            if value > best_value:
                best_u, best_value = u, value
            logger.debug(f"Restart {restart}: criterion {value:.6g}")

    failed = not math.isfinite(best_value) or (criterion is Criterion.EI and best_value <= ei_floor)
    if criterion is Criterion.MEAN:
        status = AcquisitionStatus.MEAN_SCHEDULED
    else:
        status = AcquisitionStatus.EI_SUCCESS
    if failed:
        status = AcquisitionStatus.EI_FAILED
    return AcquisitionOutcome(best_u, surrogate.to_box(best_u), best_value, status)


def proximity_check(surrogate: Surrogate, u: np.ndarray, threshold: float = PROXIMITY_THRESHOLD) -> bool:
    """
    True iff min_i [c(x_i, x_i) + c(x*, x*) - 2 c(x_i, x*)] / k(x*, x*) >= threshold.
    """
    return surrogate.proximity_check(u, threshold)


def _random_outcome(surrogate: Surrogate, rng: np.random.Generator, status: AcquisitionStatus,
                    ei_failed: bool) -> AcquisitionOutcome:
    u = rng.uniform(size=surrogate.dim)
    return AcquisitionOutcome(u, surrogate.to_box(u), math.nan, status, ei_failed)


def acquire(surrogate: Surrogate, f_min: float, config: "BOConfig", seed: int,
            iteration: int, ei_floor: float = 0.0) -> AcquisitionOutcome:
    """
    Choose the next point to evaluate.

    Decision chain:
        1. GP-mean option on and iteration a multiple of 5: maximize minus the mean.
        2. Otherwise maximize EI.
        3. EI failure: minus the mean if the option is on, else a uniform random point.
        4. Candidates failing the proximity check are replaced by a uniform random point.

    Args:
        surrogate: Trained surrogate
        f_min: Best working output
        config: BO configuration (acquisition kind and GP-mean option)
        seed: Acquisition seed of this iteration
        iteration: BO iteration index, starting at 1
        ei_floor: EI failure threshold

    Returns:
        An outcome whose point always lies in the search space
    """
    strategy = AcquisitionStrategy.for_dimension(config.acquisition, surrogate.dim)
    fallback_rng = component_rng(seed, Stream.FALLBACK)
    ei_failed = False

    if config.gp_mean_acq and iteration % MEAN_PERIOD == 0:
        outcome = optimize_acquisition(surrogate, f_min, strategy, seed, Criterion.MEAN)
    else:
        outcome = optimize_acquisition(surrogate, f_min, strategy, seed, Criterion.EI, ei_floor)
        if outcome.status is AcquisitionStatus.EI_FAILED:
            ei_failed = True
            mean_outcome = None
            if config.gp_mean_acq:
                mean_outcome = optimize_acquisition(surrogate, f_min, strategy, seed, Criterion.MEAN)
            if mean_outcome is not None and mean_outcome.status is not AcquisitionStatus.EI_FAILED:
                outcome = AcquisitionOutcome(mean_outcome.unit_point, mean_outcome.point,
                                             mean_outcome.value, AcquisitionStatus.FELL_BACK_TO_MEAN, True)
            else:
                outcome = _random_outcome(surrogate, fallback_rng, AcquisitionStatus.FELL_BACK_TO_RANDOM, True)
            logger.debug(f"EI maximization failed at iteration {iteration}; {outcome.status.value}")

    if outcome.status is AcquisitionStatus.EI_FAILED or outcome.unit_point is None:
        outcome = _random_outcome(surrogate, fallback_rng, AcquisitionStatus.FELL_BACK_TO_RANDOM, ei_failed)

    if not proximity_check(surrogate, outcome.unit_point):
        logger.warning(f"Candidate too close to the data at iteration {iteration}; replaced by a random point")
        outcome = _random_outcome(surrogate, fallback_rng, AcquisitionStatus.REPLACED_BY_PROXIMITY, ei_failed)
    elif outcome.ei_failed != ei_failed:
        outcome = AcquisitionOutcome(outcome.unit_point, outcome.point, outcome.value, outcome.status, ei_failed)
    return outcome
