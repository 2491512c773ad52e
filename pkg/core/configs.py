"""
Named BO configurations.

Each configuration varies the default setting (medium DoE, Matern 5/2
kernel, constant trend, multi-start BFGS for EI) along one or two factors.
The registry keeps the study order, which is also the order used to break
ranking ties in reports.
"""

from dataclasses import dataclass, replace
from typing import Dict, List

from core.acquisition import AcquisitionKind
from core.doe import DoeClass, doe_size
from core.gp_train import GPConfig
from core.kernels import KernelFamily, TrendDegree


DEFAULT_BUDGET_MULTIPLIER = 30


class UnknownConfigError(ValueError):
    """Raised for a configuration name that is not in the registry."""


@dataclass(frozen=True)
class BOConfig:
    """
    One BO configuration.

    Attributes:
        name: Registry name
        doe_class: Initial DoE size class
        family: Kernel family
        degree: Trend degree
        output_warp: Fit an output warp on the initial DoE
        input_scaling: Refit an input scaling at every iteration
        gp_mean_acq: Use minus the GP mean every 5 iterations and on EI failure
        acquisition: EI optimizer
        budget_multiplier: Evaluation budget per dimension
        description: Short human-readable summary
    """
    name: str
    doe_class: DoeClass = DoeClass.M
    family: KernelFamily = KernelFamily.MATERN52
    degree: TrendDegree = TrendDegree.CONSTANT
    output_warp: bool = False
    input_scaling: bool = False
    gp_mean_acq: bool = False
    acquisition: AcquisitionKind = AcquisitionKind.MULTISTART_BFGS
    budget_multiplier: int = DEFAULT_BUDGET_MULTIPLIER
    description: str = ""

    def __post_init__(self):
        if self.budget_multiplier < 1:
            raise ValueError(f"budget_multiplier must be positive, got {self.budget_multiplier}")

    @property
    def gp_config(self) -> GPConfig:
        return GPConfig(family=self.family, degree=self.degree)

    def budget(self, d: int) -> int:
        return self.budget_multiplier * d

    def initial_size(self, d: int) -> int:
        return doe_size(self.doe_class, d)

    def check_dimension(self, d: int):
        """Raise ValueError if the initial DoE does not fit in the budget."""
        if not self.initial_size(d) < self.budget(d):
            raise ValueError(
                f"Config {self.name}: initial DoE of {self.initial_size(d)} points "
                f"does not fit in a budget of {self.budget(d)}"
            )

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "doe_class": self.doe_class.value,
            "kernel": self.family.value,
            "trend": self.degree.value,
            "output_warp": self.output_warp,
            "input_scaling": self.input_scaling,
            "gp_mean_acq": self.gp_mean_acq,
            "acquisition": self.acquisition.value,
            "budget_multiplier": self.budget_multiplier,
            "description": self.description,
        }


_EXP = KernelFamily.EXPONENTIAL

CONFIG_REGISTRY: Dict[str, BOConfig] = {c.name: c for c in [
    BOConfig("M", description="default setting"),
    BOConfig("S", doe_class=DoeClass.S, description="small initial DoE"),
    BOConfig("L", doe_class=DoeClass.L, description="large initial DoE"),
    BOConfig("LinM", degree=TrendDegree.LINEAR, description="linear trend"),
    BOConfig("QuadM", degree=TrendDegree.QUADRATIC, description="quadratic trend"),
    BOConfig("ScalM", input_scaling=True, description="input scaling"),
    BOConfig("ScalS", doe_class=DoeClass.S, input_scaling=True, description="input scaling, small initial DoE"),
    BOConfig("ScalL", doe_class=DoeClass.L, input_scaling=True, description="input scaling, large initial DoE"),
    BOConfig("WarpM", output_warp=True, description="output warping"),
    BOConfig("WarpS", doe_class=DoeClass.S, output_warp=True, description="output warping, small initial DoE"),
    BOConfig("WarpL", doe_class=DoeClass.L, output_warp=True, description="output warping, large initial DoE"),
    BOConfig("ExpM", family=_EXP, description="exponential kernel"),
    BOConfig("ExpS", doe_class=DoeClass.S, family=_EXP, description="exponential kernel, small initial DoE"),
    BOConfig("ExpScalM", family=_EXP, input_scaling=True, description="exponential kernel and input scaling"),
    BOConfig("MeanM", gp_mean_acq=True, description="GP mean as a proxy criterion"),
    BOConfig("EirandM", acquisition=AcquisitionKind.RANDOM_ONLY, description="global search only for EI"),
    BOConfig("EilocM", acquisition=AcquisitionKind.SINGLE_LOCAL, description="local search only for EI"),
    BOConfig("MeanS", doe_class=DoeClass.S, gp_mean_acq=True,
             description="GP mean as an occasional acquisition, small initial DoE"),
    BOConfig("ExpMeanS", doe_class=DoeClass.S, family=_EXP, gp_mean_acq=True,
             description="exponential kernel, proxy criterion, small initial DoE"),
    BOConfig("QuadMean", doe_class=DoeClass.QUAD_MEAN, degree=TrendDegree.QUADRATIC, gp_mean_acq=True,
             description="proxy criterion, quadratic trend, initial DoE of size 2d+1"),
    BOConfig("ExpWarpM", family=_EXP, output_warp=True, description="exponential kernel and output warping"),
]}


def config_names() -> List[str]:
    """Registry names in study order."""
    return list(CONFIG_REGISTRY)


def config_from_name(name: str, d: int) -> BOConfig:
    """
    Look up a configuration and check it against the dimension.

    Examples:
        >>> c = config_from_name("QuadMean", 5)
        >>> (c.initial_size(5), c.degree.value, c.gp_mean_acq)
        (11, 'quadratic', True)

    Raises:
        UnknownConfigError: If the name is not registered
    """
    try:
        config = CONFIG_REGISTRY[name]
    except KeyError:
        raise UnknownConfigError(f"Unknown configuration: {name!r}") from None
    config.check_dimension(d)
    return config


def with_overrides(config: BOConfig, **changes) -> BOConfig:
    """Copy of a configuration with some fields changed."""
    return replace(config, **changes)
