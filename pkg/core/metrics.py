"""
Performance metrics.

Optimization performance is measured by the ERTD (the proportion of
(instance, target) problems solved after a given number of evaluations)
and by Popt, the ERTD at the budget rescaled between random search and a
reference. Regression performance is measured by Q2 on a test design and by
the KS normality p-value of the normalized test residuals.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from scipy.stats import kstest, kstwobign

from core.doe import maximin_lhs
from core.gp_train import GPConfig, ModelTrainingError, OutputRescaler, TrainerState, train
from core.kernels import KernelFamily, TrendDegree
from core.seeding import Stream, component_seed
from core.surrogate import Surrogate
from core.testbed import TARGET_PRECISIONS, TestFunctionId, first_hit_index, make_instance
from core.transforms import scaling_apply, scaling_fit, warp_apply, warp_fit, warp_invert


logger = logging.getLogger(__name__)

Q2_FLOOR = -1.0
REGRESSION_POINTS_PER_DIM = 30
REGRESSION_INSTANCES = 15


class DegenerateMetricError(ValueError):
    """Raised when a metric is undefined on its inputs."""


@dataclass(frozen=True, eq=False)
class ErtdCurve:
    """
    Proportion of problems solved per number of evaluations.

    Attributes:
        evals: Evaluation counts 1 .. max_evals
        proportions: Proportion solved at each count, non-decreasing in [0, 1]
        problem_count: Number of problems
    """
    evals: np.ndarray
    proportions: np.ndarray
    problem_count: int

    def at(self, n: int) -> float:
        """Proportion solved after n evaluations (0 before the first)."""
        if n < 1:
            return 0.0
        return float(self.proportions[min(n, self.evals.size) - 1])

    @property
    def final(self) -> float:
        return float(self.proportions[-1])

    def log_x(self, d: int) -> np.ndarray:
        """Plot abscissae log10(evals / d)."""
        return np.log10(self.evals / d)


def ertd(first_hits: Sequence[Optional[int]], max_evals: int) -> ErtdCurve:
    """
    ERTD from the first-hit evaluation index of every problem.

    Args:
        first_hits: 1-based first-hit index per problem, None if never solved
        max_evals: Length of the evaluation axis

    Examples:
        >>> curve = ertd([5, None], 90)
        >>> curve.at(4), curve.at(5), curve.at(90)
        (0.0, 0.5, 0.5)

    Raises:
        DegenerateMetricError: For an empty problem set
    """
    if len(first_hits) == 0:
        raise DegenerateMetricError("ERTD of an empty run set")
    if max_evals < 1:
        raise ValueError(f"max_evals must be positive, got {max_evals}")
    evals = np.arange(1, max_evals + 1)
    hits = np.array([h for h in first_hits if h is not None], dtype=int)
    solved = np.searchsorted(np.sort(hits), evals, side="right")
    return ErtdCurve(evals, solved / len(first_hits), len(first_hits))


def problem_first_hits(values: Sequence[float], f_opt: float,
                       precisions: Iterable[float] = TARGET_PRECISIONS) -> List[Optional[int]]:
    """First-hit indices of one run on the targets f_opt + precision."""
    return [first_hit_index(values, f_opt + delta) for delta in precisions]


def popt(ertd_algo: float, ertd_ref: float, ertd_random: float) -> float:
    """
    Relative optimization performance (algo - random) / (ref - random).

    Examples:
        >>> round(popt(0.6, 0.8, 0.2), 12)
        0.666666666667

    Raises:
        DegenerateMetricError: If ref does not exceed random
    """
    denominator = ertd_ref - ertd_random
    if not denominator > 0:
        raise DegenerateMetricError(
            f"Reference ERTD {ertd_ref} does not exceed random ERTD {ertd_random}"
        )
    return (ertd_algo - ertd_random) / denominator


def q2_raw(y_true, y_pred) -> float:
    """Unclamped 1 - SSE / SST."""
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_true.size != y_pred.size or y_true.size < 2:
        raise ValueError("Q2 needs two vectors of equal length >= 2")
    sst = float(np.sum((y_true - np.mean(y_true)) ** 2))
    if sst == 0.0:
        raise DegenerateMetricError("Q2 is undefined for constant reference values")
    return 1.0 - float(np.sum((y_true - y_pred) ** 2)) / sst


def q2(y_true, y_pred) -> float:
    """
    Predictivity coefficient, clamped at -1.

    Examples:
        >>> y = np.array([1.0, 2.0, 3.0])
        >>> q2(y, y), q2(y, np.full(3, 2.0)), q2(y, 4.0 - y)
        (1.0, 0.0, -1.0)
    """
    return max(q2_raw(y_true, y_pred), Q2_FLOOR)


def ks_statistic(sample) -> float:
    """One-sample KS statistic D against the standard normal."""
    return float(kstest(np.asarray(sample, dtype=float).ravel(), "norm").statistic)


def ks_normal_pvalue(sample) -> float:
    """
    Asymptotic KS p-value against the standard normal (not a fitted normal).

    Raises:
        ValueError: For samples of fewer than 5 values
    """
    sample = np.asarray(sample, dtype=float).ravel()
    if sample.size < 5:
        raise ValueError(f"KS test needs at least 5 values, got {sample.size}")
    D = ks_statistic(sample)
    return float(np.clip(kstwobign.sf(math.sqrt(sample.size) * D), 0.0, 1.0))


class RegressionVariant(Enum):
    """GP variants compared on regression quality."""
    DEFAULT = "default"
    QUADRATIC = "quadratic"
    SCALING = "scaling"
    WARPING = "warping"
    EXPONENTIAL = "exponential"

    @property
    def gp_config(self) -> GPConfig:
        if self is RegressionVariant.QUADRATIC:
            return GPConfig(degree=TrendDegree.QUADRATIC)
        if self is RegressionVariant.EXPONENTIAL:
            return GPConfig(family=KernelFamily.EXPONENTIAL)
        return GPConfig()

    @property
    def config_name(self) -> str:
        """Optimization configuration using the same GP."""
        return _VARIANT_CONFIGS[self]


_VARIANT_CONFIGS = {
    RegressionVariant.DEFAULT: "M",
    RegressionVariant.QUADRATIC: "QuadM",
    RegressionVariant.SCALING: "ScalM",
    RegressionVariant.WARPING: "WarpM",
    RegressionVariant.EXPONENTIAL: "ExpM",
}


@dataclass(frozen=True)
class RegressionEntry:
    """
    Regression quality of one GP variant on one (function, dimension).

    Attributes:
        variant: GP variant
        fid: Test function
        d: Dimension
        q2_mean, q2_sd: Clamped Q2 statistics over instances
        q2_raw_mean: Mean of the unclamped Q2
        ks_mean, ks_sd: KS p-value statistics over instances
        n_instances: Instances that were evaluated
        skipped: Instances skipped after a training failure
    """
    variant: RegressionVariant
    fid: TestFunctionId
    d: int
    q2_mean: float
    q2_sd: float
    q2_raw_mean: float
    ks_mean: float
    ks_sd: float
    n_instances: int
    skipped: int


def _mean_sd(values: List[float]):
    if not values:
        return math.nan, math.nan
    arr = np.asarray(values, dtype=float)
    sd = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return float(np.mean(arr)), sd


def _regression_instance(variant: RegressionVariant, fid: TestFunctionId, d: int, seed: int, i: int):
    """Q2 (clamped and raw) and KS p-value of one instance."""
    instance = make_instance(fid, d, component_seed(seed, Stream.INSTANCE, fid.value, d, i))
    space = instance.space
    n = REGRESSION_POINTS_PER_DIM * d
    train_design = maximin_lhs(n, d, component_seed(seed, Stream.REGRESSION, fid.value, d, i, 0))
    test_design = maximin_lhs(n, d, component_seed(seed, Stream.REGRESSION, fid.value, d, i, 1))
    y_train = instance.values(space.lower + train_design.points * space.widths)
    y_test = instance.values(space.lower + test_design.points * space.widths)

    config = variant.gp_config
    rescaler = OutputRescaler.fit(y_train)
    z_train = rescaler.apply(y_train)
    z_test = rescaler.apply(y_test)
    warp = None
    if variant is RegressionVariant.WARPING:
        warp = warp_fit(train_design.points, z_train, config, component_seed(seed, Stream.WARP, i))
        z_train, z_test = warp_apply(warp, z_train), warp_apply(warp, z_test)

    scaling = None
    X_train = train_design.points
    if variant is RegressionVariant.SCALING:
        scaling = scaling_fit(X_train, z_train, config, component_seed(seed, Stream.SCALING, i))
        X_train = scaling_apply(scaling, X_train)

    model, _ = train(X_train, z_train, config, TrainerState(), component_seed(seed, Stream.TRAIN, i))
    mean, var = Surrogate(model, space, scaling).predict(test_design.points)

    prediction = rescaler.invert(warp_invert(warp, mean) if warp is not None else mean)
    informative = var > 0
    residuals = (z_test[informative] - mean[informative]) / np.sqrt(var[informative])
    ks = ks_normal_pvalue(residuals) if residuals.size >= 5 else math.nan
    return q2(y_test, prediction), q2_raw(y_test, prediction), ks


def regression_experiment(variant: RegressionVariant, fid: TestFunctionId, d: int,
                          n_instances: int = REGRESSION_INSTANCES, seed: int = 1) -> RegressionEntry:
    """
    Regression quality of a GP variant on a test function.

    For every instance, trains on a maximin LHS of 30 d points and predicts
    an independent maximin LHS of the same size. Q2 is computed in the
    original output space, the KS test on the normalized residuals
    (y - m) / s in the working output space. All variants see the same
    instances and designs for a given seed.

    Args:
        variant: GP variant
        fid: Test function
        d: Dimension
        n_instances: Number of instances
        seed: Experiment seed

    Returns:
        Aggregated entry; instances whose training fails are skipped and counted
    """
    if n_instances < 1:
        raise ValueError(f"n_instances must be positive, got {n_instances}")
    q2s, q2_raws, kss = [], [], []
    skipped = 0
    for i in range(n_instances):
        try:
            value, raw, ks = _regression_instance(variant, fid, d, seed, i)
        except ModelTrainingError as e:
            skipped += 1
            logger.warning(f"Regression {variant.value} {fid.label} d={d} instance {i} skipped: {e}")
            continue
        q2s.append(value)
        q2_raws.append(raw)
        if not math.isnan(ks):
            kss.append(ks)

    q2_mean, q2_sd = _mean_sd(q2s)
    ks_mean, ks_sd = _mean_sd(kss)
    return RegressionEntry(variant=variant, fid=fid, d=d, q2_mean=q2_mean, q2_sd=q2_sd,
                           q2_raw_mean=_mean_sd(q2_raws)[0], ks_mean=ks_mean, ks_sd=ks_sd,
                           n_instances=len(q2s), skipped=skipped)


def rank_scores(scores: Dict[RegressionVariant, float]) -> Dict[RegressionVariant, int]:
    """
    Ranks 1 .. k by decreasing score; ties and NaNs resolved by variant order.

    Examples:
        >>> rank_scores({RegressionVariant.DEFAULT: 0.5, RegressionVariant.EXPONENTIAL: 0.9})
        {<RegressionVariant.EXPONENTIAL: 'exponential'>: 1, <RegressionVariant.DEFAULT: 'default'>: 2}
    """
    order = list(RegressionVariant)

    def key(variant):
        score = scores[variant]
        return (math.isnan(score), -score if not math.isnan(score) else 0.0, order.index(variant))

    return {variant: rank for rank, variant in enumerate(sorted(scores, key=key), start=1)}
