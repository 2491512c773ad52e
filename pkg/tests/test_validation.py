"""
Tests for input validation module.

This module contains unit tests and property-based tests for validating
campaign specifications and parsing user input.
"""

import pytest
from hypothesis import given, strategies as st

from core.configs import config_names
from core.metrics import RegressionVariant
from core.testbed import SUPPORTED_DIMS, TestFunctionId
from core.validation import (
    SEED_ENV_VAR,
    CampaignSpec,
    RegressionSpec,
    ValidationResult,
    parse_configs,
    parse_dims,
    parse_functions,
    parse_variants,
    resolve_seed,
    validate_campaign,
)


# Property-Based Tests

@given(
    configs=st.lists(st.sampled_from(config_names()), min_size=1, max_size=4),
    dims=st.lists(st.sampled_from(SUPPORTED_DIMS), min_size=1, max_size=4),
    instances=st.integers(min_value=1, max_value=15),
)
def test_property_valid_campaign_acceptance(configs, dims, instances):
    """
    **Feature: bocoa, Property 1: Valid campaign acceptance**

    Registered configurations, supported dimensions and a positive
    instance count always validate.
    """
    result = validate_campaign(configs, [TestFunctionId.F1], dims, instances)
    assert result.is_valid, result.error_message
    assert result.error_message is None


@given(d=st.integers(min_value=-5, max_value=40).filter(lambda d: d not in SUPPORTED_DIMS))
def test_property_unsupported_dimension_rejection(d):
    """
    **Feature: bocoa, Property 2: Unsupported dimension rejection**
    """
    result = validate_campaign(["M"], [TestFunctionId.F1], [d], 1)
    assert not result.is_valid
    assert "dims" in result.error_message


@given(st.lists(st.sampled_from([f.value for f in TestFunctionId]), min_size=1, max_size=6))
def test_property_function_label_parsing(ids):
    """
    **Feature: bocoa, Property 3: Function label parsing**

    Both "fN" and "N" spellings parse to the same function.
    """
    text = ",".join(f"f{i}" if i % 2 else str(i) for i in ids)
    parsed = parse_functions(text)
    assert [f.value for f in parsed] == ids


# Unit Tests

class TestParsers:
    """Tests for the comma-separated list parsers."""

    def test_parse_configs_all(self):
        assert parse_configs("all") == config_names()

    def test_parse_configs_unknown(self):
        result = parse_configs("M,Nope")
        assert isinstance(result, ValidationResult)
        assert "Nope" in result.error_message

    def test_parse_configs_empty(self):
        assert isinstance(parse_configs(" , "), ValidationResult)

    def test_parse_functions_all(self):
        assert parse_functions("ALL") == list(TestFunctionId)

    @pytest.mark.parametrize("text", ["f0", "f4", "f25", "g3", ""])
    def test_parse_functions_invalid(self, text):
        assert isinstance(parse_functions(text), ValidationResult)

    def test_parse_dims(self):
        assert parse_dims(" 2, 10 ") == [2, 10]

    @pytest.mark.parametrize("text", ["three", "4", "", "3,7"])
    def test_parse_dims_invalid(self, text):
        result = parse_dims(text)
        assert isinstance(result, ValidationResult)
        assert not result.is_valid

    def test_parse_variants(self):
        assert parse_variants("all") == list(RegressionVariant)
        assert parse_variants("Warping") == [RegressionVariant.WARPING]
        assert isinstance(parse_variants("bogus"), ValidationResult)


class TestSpecs:
    """Tests for the campaign specification dataclasses."""

    def test_campaign_run_count(self):
        spec = CampaignSpec(["M", "S"], [TestFunctionId.F1, TestFunctionId.F2], [2, 3], instances=3)
        assert spec.run_count == 3 * 2 * 2 * 3

    def test_campaign_run_count_without_random(self):
        spec = CampaignSpec(["M"], [TestFunctionId.F1], [3], instances=4, include_random=False)
        assert spec.run_count == 4

    @pytest.mark.parametrize("kwargs", [
        dict(configs=[], functions=[TestFunctionId.F1], dims=[3]),
        dict(configs=["Bogus"], functions=[TestFunctionId.F1], dims=[3]),
        dict(configs=["M"], functions=[], dims=[3]),
        dict(configs=["M"], functions=[TestFunctionId.F1], dims=[]),
        dict(configs=["M"], functions=[TestFunctionId.F1], dims=[3], instances=0),
        dict(configs=["M"], functions=[TestFunctionId.F1], dims=[3], jobs=0),
    ])
    def test_campaign_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            CampaignSpec(**kwargs)

    def test_regression_requires_variants(self):
        with pytest.raises(ValueError):
            RegressionSpec(variants=[], functions=[TestFunctionId.F1], dims=[5])

    def test_regression_defaults(self):
        spec = RegressionSpec(functions=[TestFunctionId.F1], dims=[5])
        assert spec.variants == list(RegressionVariant)
        assert spec.instances == 15


class TestSeedOverride:
    """Tests for the seed environment override."""

    def test_no_override(self, monkeypatch):
        monkeypatch.delenv(SEED_ENV_VAR, raising=False)
        assert resolve_seed(4) == 4

    def test_override(self, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "17")
        assert resolve_seed(4) == 17

    def test_blank_override_ignored(self, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "  ")
        assert resolve_seed(4) == 4

    def test_invalid_override(self, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "abc")
        result = resolve_seed(4)
        assert isinstance(result, ValidationResult)
        assert SEED_ENV_VAR in result.error_message

    def test_campaign_rejects_zero_budget_multiplier(self):
        with pytest.raises(ValueError):
            CampaignSpec(["M"], [TestFunctionId.F1], [3], budget_multiplier=0)
