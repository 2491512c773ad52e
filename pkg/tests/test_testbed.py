"""
Property-based tests for the testbed module.

Feature: bocoa
"""

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st, settings

from core.testbed import (
    SUPPORTED_DIMS,
    TARGET_PRECISIONS,
    EvaluationLedger,
    FunctionGroup,
    OutOfBoundsError,
    SearchSpace,
    TestFunctionId,
    UnknownFunctionError,
    evaluate,
    first_hit_index,
    instance_from_descriptor,
    make_instance,
    targets_for,
)


functions = st.sampled_from(list(TestFunctionId))
dims = st.sampled_from(list(SUPPORTED_DIMS))
seeds = st.integers(min_value=0, max_value=10_000)

LOWER_BOUND_SAMPLES = 100_000


def _uniform_points(instance, n, seed):
    rng = np.random.default_rng(seed)
    return instance.space.lower + rng.uniform(size=(n, instance.dim)) * instance.space.widths


def _at(instance, z):
    """Value of an instance at canonical coordinates z."""
    return instance.value(instance.shift + instance.rotation.T @ z)


class TestOptimumProperty:
    """Tests that the optimum of every instance is where it claims to be."""

    @given(functions, dims, seeds)
    @settings(max_examples=100, deadline=None)
    def test_value_at_shift_is_f_opt(self, fid, d, seed):
        """
        **Feature: bocoa, Property 1: Optimum location**

        For any instance, f(shift) = f_opt and the shift lies inside the box.
        """
        instance = make_instance(fid, d, seed)
        assert instance.space.contains(instance.shift)
        assert instance.value(instance.shift) == pytest.approx(instance.f_opt, abs=1e-9)

    @pytest.mark.parametrize("seed", [1, 2])
    @pytest.mark.parametrize("d", SUPPORTED_DIMS)
    @pytest.mark.parametrize("fid", list(TestFunctionId))
    def test_f_opt_is_a_lower_bound(self, fid, d, seed):
        """
        **Feature: bocoa, Property 2: Optimum is a lower bound**

        For any instance, f(x) >= f_opt on 10^5 uniform points of the box.
        """
        instance = make_instance(fid, d, seed)
        X = _uniform_points(instance, LOWER_BOUND_SAMPLES, seed)
        assert np.min(instance.values(X)) >= instance.f_opt - 1e-9

    @pytest.mark.parametrize("seed", range(30))
    def test_schwefel_lower_bound_across_seeds(self, seed):
        instance = make_instance(TestFunctionId.F20, 2, seed)
        X = _uniform_points(instance, LOWER_BOUND_SAMPLES, 1000 + seed)
        assert np.min(instance.values(X)) >= instance.f_opt - 1e-9

    def test_schwefel_beyond_sine_range(self):
        # u = 420.97 + 100 z near -555 is a trough of the unclipped sine term
        instance = make_instance(TestFunctionId.F20, 2, 1)
        for z1 in np.linspace(-10.5, -9.0, 61):
            assert _at(instance, np.array([z1, 0.0])) >= instance.f_opt


class TestInstanceDeterminism:
    """Tests for instance derivation from (function, dimension, seed)."""

    @given(functions, dims, seeds)
    @settings(max_examples=50, deadline=None)
    def test_same_seed_same_instance(self, fid, d, seed):
        """
        **Feature: bocoa, Property 3: Instance determinism**

        Building an instance twice yields identical shift and rotation.
        """
        a = make_instance(fid, d, seed)
        b = make_instance(fid, d, seed)
        assert np.array_equal(a.shift, b.shift)
        assert np.array_equal(a.rotation, b.rotation)

    @given(functions, dims, seeds)
    @settings(max_examples=50, deadline=None)
    def test_descriptor_round_trip(self, fid, d, seed):
        """
        **Feature: bocoa, Property 4: Descriptor replay**

        An instance rebuilt from its JSON descriptor evaluates identically.
        """
        instance = make_instance(fid, d, seed)
        rebuilt = instance_from_descriptor(json.loads(instance.to_json()))
        X = instance.space.lower + np.random.default_rng(seed).uniform(size=(5, d)) * instance.space.widths
        assert np.array_equal(instance.values(X), rebuilt.values(X))

    def test_tampered_descriptor_rejected(self):
        descriptor = make_instance(TestFunctionId.F8, 3, 4).to_descriptor()
        descriptor["shift"][0] += 1e-3
        with pytest.raises(ValueError):
            instance_from_descriptor(descriptor)

    def test_rotation_is_orthogonal(self):
        instance = make_instance(TestFunctionId.F10, 5, 3)
        assert np.allclose(instance.rotation @ instance.rotation.T, np.eye(5), atol=1e-12)

    def test_separable_functions_are_not_rotated(self):
        for fid in TestFunctionId:
            if fid.separable:
                assert np.array_equal(make_instance(fid, 3, 1).rotation, np.eye(3))


class TestFunctionIds:
    """Tests for function ids and groups."""

    def test_parse_accepts_label_and_number(self):
        assert TestFunctionId.parse("f3") is TestFunctionId.F3
        assert TestFunctionId.parse("F3") is TestFunctionId.F3
        assert TestFunctionId.parse("3") is TestFunctionId.F3

    @pytest.mark.parametrize("text", ["f99", "f4", "sphere", ""])
    def test_parse_rejects_unknown(self, text):
        with pytest.raises(UnknownFunctionError):
            TestFunctionId.parse(text)

    def test_every_function_has_a_group(self):
        groups = {fid.group for fid in TestFunctionId}
        assert groups == set(FunctionGroup)

    def test_unsupported_dimension(self):
        with pytest.raises(UnknownFunctionError):
            make_instance(TestFunctionId.F1, 4, 1)

    def test_sphere_value(self):
        instance = make_instance(TestFunctionId.F1, 2, 1)
        assert _at(instance, np.array([1.0, -2.0])) == pytest.approx(instance.f_opt + 5.0)

    def test_rastrigin_value(self):
        instance = make_instance(TestFunctionId.F3, 2, 1)
        assert _at(instance, np.array([1.0, 0.0])) == pytest.approx(instance.f_opt + 1.0, abs=1e-9)

    @pytest.mark.parametrize("axis, expected", [(0, 1.0), (1, 1e6)])
    def test_bent_cigar_axes(self, axis, expected):
        instance = make_instance(TestFunctionId.F12, 2, 3)
        assert _at(instance, np.eye(2)[axis]) == pytest.approx(instance.f_opt + expected, rel=1e-9)


class TestEvaluationLedger:
    """Tests for evaluation recording."""

    def setup_method(self):
        self.instance = make_instance(TestFunctionId.F1, 2, 1)
        self.ledger = EvaluationLedger()

    def test_evaluate_records_points(self):
        f = evaluate(self.instance, self.ledger, np.zeros(2))
        assert self.ledger.count == 1
        assert self.ledger.values[0] == f
        assert np.array_equal(self.ledger.points[0], np.zeros(2))

    def test_out_of_bounds_rejected(self):
        with pytest.raises(OutOfBoundsError):
            evaluate(self.instance, self.ledger, np.array([6.0, 0.0]))
        assert self.ledger.count == 0

    def test_best_so_far_is_non_increasing(self):
        rng = np.random.default_rng(0)
        for u in rng.uniform(size=(30, 2)):
            evaluate(self.instance, self.ledger, -5 + 10 * u)
        best = self.ledger.best_so_far()
        assert np.all(np.diff(best) <= 0)
        assert best[-1] == self.ledger.best()[1]

    def test_first_hit(self):
        assert first_hit_index([5.0, 3.0, 1.0, 0.5], 1.0) == 3
        assert first_hit_index([5.0, 3.0], 1.0) is None
        assert first_hit_index([], 1.0) is None


def test_targets_for_six_precisions():
    instance = make_instance(TestFunctionId.F2, 3, 2)
    problems = targets_for(instance)
    assert [p.precision for p in problems] == list(TARGET_PRECISIONS)
    assert all(p.target > instance.f_opt for p in problems)


def test_search_space_validation():
    with pytest.raises(ValueError):
        SearchSpace(np.array([1.0]), np.array([0.0]))
    space = SearchSpace.box(3)
    assert space.dim == 3
    assert np.array_equal(space.clip(np.array([7.0, -9.0, 0.0])), np.array([5.0, -5.0, 0.0]))
