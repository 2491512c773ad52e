"""
The EGO loop.

A run builds a maximin LHS initial design, evaluates it, then repeats
until the budget is spent:

    1. working outputs = warp(rescale(f)), with rescaling frozen from the
       initial design and the warp fitted once on it
    2. refit the input scaling if the configuration uses it
    3. train the GP
    4. acquire a point and evaluate it

Every stochastic component draws from its own seed stream, so a run is
fully determined by (config, instance, seed) and can be replayed from its
provenance record.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from core import __version__
from core.acquisition import EI_FAILURE_RATIO, AcquisitionStatus, acquire
from core.configs import BOConfig, config_from_name, with_overrides
from core.doe import maximin_lhs, scale_to_box, unit_from_box
from core.gp_train import ModelTrainingError, OutputRescaler, TrainerState, train
from core.seeding import Stream, component_rng, component_seed
from core.surrogate import Surrogate
from core.testbed import EvaluationLedger, FunctionInstance, evaluate, first_hit_index, instance_from_descriptor
from core.transforms import InputScaling, OutputWarp, scaling_apply, scaling_fit, warp_apply, warp_fit


logger = logging.getLogger(__name__)

MAX_CONSECUTIVE_FAILURES = 10
RANDOM_CONFIG_NAME = "random"
MODEL_FAILURE = "ModelFailure"


class Termination(Enum):
    BUDGET_EXHAUSTED = "BudgetExhausted"
    REPEATED_FAILURES = "RepeatedFailures"


@dataclass(frozen=True)
class IterationRecord:
    """
    Status of one BO iteration.

    Attributes:
        iteration: Iteration index, starting at 1
        trained: Whether a model was trained
        nugget_active: Whether the nugget was on for this model
        range_decrease: Whether the lengthscales were shrunk instead of trained
        status: Acquisition status value, or MODEL_FAILURE
        lengthscales: Lengthscales of the model, if any
        scaling: Input scaling the model was trained with, if any
    """
    iteration: int
    trained: bool
    nugget_active: bool
    range_decrease: bool
    status: str
    lengthscales: Optional[List[float]] = None
    scaling: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "iteration": self.iteration,
            "trained": self.trained,
            "nugget_active": self.nugget_active,
            "range_decrease": self.range_decrease,
            "status": self.status,
            "lengthscales": self.lengthscales,
            "scaling": self.scaling,
        }


@dataclass(frozen=True, eq=False)
class RunResult:
    """
    Full history of one optimization run.

    Attributes:
        config_name: Configuration name ("random" for the baseline)
        instance: Optimized function instance
        seed: Run seed
        points: Evaluated points in order (n, d)
        values: Evaluated values in order (n,)
        initial_size: Number of initial design points
        budget: Evaluation budget
        termination: Why the run stopped
        iterations: Per-iteration status records
        warp: Fitted output warp, if any
    """
    config_name: str
    instance: FunctionInstance
    seed: int
    points: np.ndarray
    values: np.ndarray
    initial_size: int
    budget: int
    termination: Termination
    iterations: List[IterationRecord] = field(default_factory=list)
    warp: Optional[OutputWarp] = None

    @property
    def run_id(self) -> str:
        return run_id_for(self.config_name, self.instance.name, self.seed)

    @property
    def evaluations(self) -> int:
        return int(self.values.size)

    @property
    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(self.values)

    @property
    def best_value(self) -> float:
        return float(np.min(self.values))

    def first_hit(self, target: float) -> Optional[int]:
        return first_hit_index(self.values, target)

    def status_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for record in self.iterations:
            counts[record.status] = counts.get(record.status, 0) + 1
        return counts

    def provenance(self) -> Dict[str, Any]:
        """JSON-ready record sufficient to replay the run."""
        record = {
            "run_id": self.run_id,
            "config": self.config_name,
            "instance": self.instance.to_descriptor(),
            "seed": self.seed,
            "budget": self.budget,
            "initial_size": self.initial_size,
            "streams": {stream.name: int(stream) for stream in Stream},
            "version": __version__,
            "termination": self.termination.value,
            "evaluations": self.evaluations,
            "best_value": self.best_value,
            "status_counts": self.status_counts(),
        }
        if self.warp is not None:
            record["warp"] = self.warp.to_dict()
        scalings = [dict(r.scaling, iteration=r.iteration) for r in self.iterations if r.scaling is not None]
        if scalings:
            record["input_scaling"] = scalings
        return record


def run_id_for(config_name: str, instance_name: str, seed: int) -> str:
    return f"{config_name}__{instance_name}__r{seed}"


def _working_outputs(values: np.ndarray, rescaler: OutputRescaler,
                     warp: Optional[OutputWarp]) -> np.ndarray:
    z = rescaler.apply(values)
    return warp_apply(warp, z) if warp is not None else z


def run(config: BOConfig, instance: FunctionInstance, seed: int,
        warp: Optional[OutputWarp] = None) -> RunResult:
    """
    Run the EGO loop on an instance.

    Args:
        config: BO configuration
        instance: Function instance to minimize
        seed: Run seed
        warp: Output warp to use instead of fitting one (warping configs only)

    Returns:
        RunResult; numerical failures are recorded, never raised
    """
    d = instance.dim
    space = instance.space
    config.check_dimension(d)
    budget = config.budget(d)
    n0 = config.initial_size(d)
    gp_config = config.gp_config

    ledger = EvaluationLedger()
    design = maximin_lhs(n0, d, component_seed(seed, Stream.DOE))
    for x in scale_to_box(design, space):
        evaluate(instance, ledger, x)

    rescaler = OutputRescaler.fit(ledger.values)
    if config.output_warp and warp is None:
        warp = warp_fit(design.points, rescaler.apply(ledger.values), gp_config,
                        component_seed(seed, Stream.WARP))
    elif not config.output_warp:
        warp = None

    state = TrainerState()
    scaling: Optional[InputScaling] = None
    records: List[IterationRecord] = []
    failures_in_row = 0
    termination = Termination.BUDGET_EXHAUSTED
    iteration = 0

    while ledger.count < budget:
        iteration += 1
        U = unit_from_box(ledger.points, space)
        z = _working_outputs(ledger.values, rescaler, warp)
        f_min = float(np.min(z))
        spread = float(np.std(z))
        ei_floor = EI_FAILURE_RATIO * (spread if spread > 0 else 1.0)
        range_decrease = state.range_decrease_due

        try:
            train_state = state
            if config.input_scaling and not range_decrease:
                scaling = scaling_fit(U, z, gp_config, component_seed(seed, Stream.SCALING, iteration),
                                      state.nugget, state.previous_lengthscales)
                if scaling.lengthscales is not None:
                    train_state = replace(state, previous_lengthscales=scaling.lengthscales)
            X = scaling_apply(scaling, U) if scaling is not None else U
            model, state = train(X, z, gp_config, train_state,
                                 component_seed(seed, Stream.TRAIN, iteration))
        except ModelTrainingError as e:
            failures_in_row += 1
            logger.warning(f"{config.name} on {instance.name}, iteration {iteration}: {e}")
            u = component_rng(seed, Stream.FALLBACK, iteration).uniform(size=d)
            evaluate(instance, ledger, space.clip(space.lower + u * space.widths))
            records.append(IterationRecord(iteration, False, state.nugget_active, range_decrease, MODEL_FAILURE))
            if failures_in_row >= MAX_CONSECUTIVE_FAILURES:
                termination = Termination.REPEATED_FAILURES
                logger.warning(f"{config.name} on {instance.name}: stopping after "
                               f"{failures_in_row} consecutive failures")
                break
            continue

        failures_in_row = 0
        surrogate = Surrogate(model, space, scaling)
        outcome = acquire(surrogate, f_min, config, component_seed(seed, Stream.ACQUISITION, iteration),
                          iteration, ei_floor)
        state = state.record_acquisition(outcome.ei_failed, outcome.status is AcquisitionStatus.EI_SUCCESS)
        evaluate(instance, ledger, outcome.point)
        records.append(IterationRecord(iteration, True, state.nugget_active, range_decrease,
                                       outcome.status.value, model.lengthscales.tolist(),
                                       scaling.to_dict() if scaling is not None else None))
        logger.debug(f"{config.name} {instance.name} it {iteration}: {outcome.status.value}, "
                     f"f={ledger.values[-1]:.6g}")

    return RunResult(config_name=config.name, instance=instance, seed=int(seed),
                     points=ledger.points, values=ledger.values, initial_size=n0, budget=budget,
                     termination=termination, iterations=records, warp=warp)


def random_search_baseline(instance: FunctionInstance, budget: int, seed: int) -> RunResult:
    """
    Uniform random search over the search space.

    Examples:
        >>> from core.testbed import TestFunctionId, make_instance
        >>> result = random_search_baseline(make_instance(TestFunctionId.F1, 2, 1), 20, 7)
        >>> result.evaluations
        20
    """
    if budget < 1:
        raise ValueError(f"Budget must be positive, got {budget}")
    space = instance.space
    rng = component_rng(seed, Stream.RUN)
    ledger = EvaluationLedger()
    for u in rng.uniform(size=(budget, instance.dim)):
        evaluate(instance, ledger, space.clip(space.lower + u * space.widths))
    return RunResult(config_name=RANDOM_CONFIG_NAME, instance=instance, seed=int(seed),
                     points=ledger.points, values=ledger.values, initial_size=0, budget=budget,
                     termination=Termination.BUDGET_EXHAUSTED)


def replay(provenance: Dict[str, Any]) -> RunResult:
    """
    Re-execute a run from its provenance record.

    Raises:
        ValueError: If the stored instance does not match its re-derivation
        UnknownConfigError: If the configuration name is unknown
    """
    instance = instance_from_descriptor(provenance["instance"])
    seed = int(provenance["seed"])
    if provenance["config"] == RANDOM_CONFIG_NAME:
        return random_search_baseline(instance, int(provenance["budget"]), seed)
    config = config_from_name(provenance["config"], instance.dim)
    budget = int(provenance.get("budget", config.budget(instance.dim)))
    if budget != config.budget(instance.dim):
        config = with_overrides(config, budget_multiplier=budget // instance.dim)
    return run(config, instance, seed)
