"""
Input validation module for campaign specifications.

This module provides data structures and functions for validating and
parsing user input (CLI flags, web API payloads) into campaign
specifications. Parsers never raise on bad input: they return a
ValidationResult carrying the error message.
"""

import os
from dataclasses import dataclass, field
from typing import List, Optional, Union

from core.configs import CONFIG_REGISTRY, config_names
from core.metrics import RegressionVariant
from core.testbed import SUPPORTED_DIMS, TestFunctionId, UnknownFunctionError


SEED_ENV_VAR = "BOCOA_SEED"
ALL = "all"


@dataclass
class ValidationResult:
    """
    Result of input validation.

    Attributes:
        is_valid: Whether the input is valid
        error_message: Error message if validation failed (None if valid)
    """
    is_valid: bool
    error_message: Optional[str] = None


@dataclass
class CampaignSpec:
    """
    Specification of an optimization campaign.

    Attributes:
        configs: Configuration names
        functions: Test functions
        dims: Dimensions
        instances: Number of instances per (function, dimension)
        seed: Base seed
        out_dir: Output directory
        jobs: Number of worker processes
        include_random: Also run the random-search baseline
    """
    configs: List[str]
    functions: List[TestFunctionId]
    dims: List[int]
    instances: int = 15
    seed: int = 1
    out_dir: str = "results"
    jobs: int = 1
    include_random: bool = True
    budget_multiplier: Optional[int] = None

    def __post_init__(self):
        """Validate the specification."""
        result = validate_campaign(self.configs, self.functions, self.dims, self.instances, self.jobs)
        if not result.is_valid:
            raise ValueError(result.error_message)
        if self.budget_multiplier is not None and self.budget_multiplier < 1:
            raise ValueError("Invalid budget-multiplier: must be at least 1")

    @property
    def run_count(self) -> int:
        per_problem = len(self.configs) + (1 if self.include_random else 0)
        return per_problem * len(self.functions) * len(self.dims) * self.instances


@dataclass
class RegressionSpec:
    """
    Specification of a regression campaign.

    Attributes:
        variants: GP variants to compare
        functions: Test functions
        dims: Dimensions
        instances: Number of instances
        seed: Base seed
        out_dir: Output directory
        jobs: Number of worker processes
        ertd_dir: Campaign directory to read optimization ranks from
    """
    variants: List[RegressionVariant] = field(default_factory=lambda: list(RegressionVariant))
    functions: List[TestFunctionId] = field(default_factory=list)
    dims: List[int] = field(default_factory=list)
    instances: int = 15
    seed: int = 1
    out_dir: str = "results"
    jobs: int = 1
    ertd_dir: Optional[str] = None

    def __post_init__(self):
        if not self.variants:
            raise ValueError("At least one variant is required")
        result = validate_campaign(["M"], self.functions, self.dims, self.instances, self.jobs)
        if not result.is_valid:
            raise ValueError(result.error_message)


def validate_campaign(configs: List[str], functions: List[TestFunctionId], dims: List[int],
                      instances: int, jobs: int = 1) -> ValidationResult:
    """
    Validate the components of a campaign.

    Examples:
        >>> validate_campaign(["M"], [TestFunctionId.F1], [3], 2)
        ValidationResult(is_valid=True, error_message=None)

        >>> validate_campaign(["M"], [TestFunctionId.F1], [3], 0)
        ValidationResult(is_valid=False, error_message='Invalid instances: must be at least 1')
    """
    if not configs:
        return ValidationResult(False, "Invalid configs: at least one configuration is required")
    unknown = [c for c in configs if c not in CONFIG_REGISTRY]
    if unknown:
        return ValidationResult(False, f"Invalid configs: unknown configuration(s) {', '.join(unknown)}")
    if not functions:
        return ValidationResult(False, "Invalid functions: at least one function is required")
    if not dims:
        return ValidationResult(False, "Invalid dims: at least one dimension is required")
    bad_dims = [d for d in dims if d not in SUPPORTED_DIMS]
    if bad_dims:
        return ValidationResult(False, f"Invalid dims: {bad_dims} not in {list(SUPPORTED_DIMS)}")
    if instances < 1:
        return ValidationResult(False, "Invalid instances: must be at least 1")
    if jobs < 1:
        return ValidationResult(False, "Invalid jobs: must be at least 1")
    return ValidationResult(True)


def _split(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def parse_configs(text: str) -> Union[List[str], ValidationResult]:
    """
    Parse a comma-separated list of configuration names, or "all".

    Examples:
        >>> parse_configs("M, S")
        ['M', 'S']

        >>> parse_configs("M,Bogus")
        ValidationResult(is_valid=False, error_message='Invalid configs: unknown configuration(s) Bogus')
    """
    if text.strip().lower() == ALL:
        return config_names()
    names = _split(text)
    if not names:
        return ValidationResult(False, "Invalid configs: empty list")
    unknown = [n for n in names if n not in CONFIG_REGISTRY]
    if unknown:
        return ValidationResult(False, f"Invalid configs: unknown configuration(s) {', '.join(unknown)}")
    return names


def parse_functions(text: str) -> Union[List[TestFunctionId], ValidationResult]:
    """
    Parse a comma-separated list of function labels ("f1" or "1"), or "all".

    Examples:
        >>> [f.label for f in parse_functions("f1,8")]
        ['f1', 'f8']
    """
    if text.strip().lower() == ALL:
        return list(TestFunctionId)
    labels = _split(text)
    if not labels:
        return ValidationResult(False, "Invalid functions: empty list")
    functions = []
    for label in labels:
        try:
            functions.append(TestFunctionId.parse(label))
        except UnknownFunctionError as e:
            return ValidationResult(False, f"Invalid functions: {e}")
    return functions


def parse_dims(text: str) -> Union[List[int], ValidationResult]:
    """
    Parse a comma-separated list of dimensions.

    Examples:
        >>> parse_dims("3,5")
        [3, 5]

        >>> parse_dims("4")
        ValidationResult(is_valid=False, error_message='Invalid dims: [4] not in [2, 3, 5, 10]')
    """
    parts = _split(text)
    if not parts:
        return ValidationResult(False, "Invalid dims: empty list")
    try:
        dims = [int(p) for p in parts]
    except ValueError as e:
        return ValidationResult(False, f"Invalid dims: could not parse integers: {e}")
    bad = [d for d in dims if d not in SUPPORTED_DIMS]
    if bad:
        return ValidationResult(False, f"Invalid dims: {bad} not in {list(SUPPORTED_DIMS)}")
    return dims


def parse_variants(text: str) -> Union[List[RegressionVariant], ValidationResult]:
    """
    Parse a comma-separated list of GP variants, or "all".

    Examples:
        >>> [v.value for v in parse_variants("default,exponential")]
        ['default', 'exponential']
    """
    if text.strip().lower() == ALL:
        return list(RegressionVariant)
    variants = []
    for name in _split(text):
        try:
            variants.append(RegressionVariant(name.lower()))
        except ValueError:
            valid = ", ".join(v.value for v in RegressionVariant)
            return ValidationResult(False, f"Invalid variants: unknown variant {name!r} (expected one of {valid})")
    if not variants:
        return ValidationResult(False, "Invalid variants: empty list")
    return variants


def resolve_seed(seed: int) -> Union[int, ValidationResult]:
    """Return the BOCOA_SEED environment override if set, else seed."""
    override = os.environ.get(SEED_ENV_VAR)
    if override is None or override.strip() == "":
        return seed
    try:
        return int(override)
    except ValueError:
        return ValidationResult(False, f"Invalid {SEED_ENV_VAR}: {override!r} is not an integer")
