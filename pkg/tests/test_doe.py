"""
Property-based tests for initial designs and seed streams.

Feature: bocoa
"""

import numpy as np
import pytest
from hypothesis import given, strategies as st, settings

from core.doe import DoeClass, Design, doe_size, latin_hypercube, maximin_lhs, scale_to_box, unit_from_box
from core.seeding import Stream, component_rng, component_seed
from core.testbed import SearchSpace


sizes = st.integers(min_value=2, max_value=40)
dims = st.integers(min_value=1, max_value=10)
seeds = st.integers(min_value=0, max_value=2**31 - 1)


class TestMaximinLhs:
    """Tests for maximin Latin hypercube designs."""

    @given(sizes, dims, seeds)
    @settings(max_examples=100, deadline=None)
    def test_latin_property(self, n, d, seed):
        """
        **Feature: bocoa, Property 5: Latin property**

        Every column of a maximin LHS has exactly one point per bin.
        """
        design = maximin_lhs(n, d, seed, n_improve_iters=50)
        assert design.points.shape == (n, d)
        assert np.all((design.points >= 0) & (design.points <= 1))
        assert design.is_latin()

    @given(sizes, dims, seeds)
    @settings(max_examples=50, deadline=None)
    def test_optimization_never_worsens_spread(self, n, d, seed):
        """
        **Feature: bocoa, Property 6: Maximin improvement**

        The optimized design has a minimal distance at least that of the
        unoptimized LHS drawn from the same seed.
        """
        plain = maximin_lhs(n, d, seed, n_improve_iters=0)
        optimized = maximin_lhs(n, d, seed, n_improve_iters=200)
        assert optimized.min_distance() >= plain.min_distance() - 1e-15

    @given(sizes, dims, seeds)
    @settings(max_examples=30, deadline=None)
    def test_deterministic(self, n, d, seed):
        """
        **Feature: bocoa, Property 7: Design determinism**
        """
        a = maximin_lhs(n, d, seed, n_improve_iters=30)
        b = maximin_lhs(n, d, seed, n_improve_iters=30)
        assert np.array_equal(a.points, b.points)

    def test_starts_from_one_seeded_lhs(self):
        start = latin_hypercube(8, 3, np.random.default_rng(5))
        assert np.array_equal(maximin_lhs(8, 3, 5, n_improve_iters=0).points, start)

    def test_rejects_single_point(self):
        with pytest.raises(ValueError):
            maximin_lhs(1, 3, 0)

    def test_plain_lhs_is_latin(self):
        points = latin_hypercube(12, 4, np.random.default_rng(3))
        assert Design(points).is_latin()


class TestDoeSize:
    """Tests for the initial DoE size policy."""

    @pytest.mark.parametrize("doe_class,d,expected", [
        (DoeClass.S, 3, 7),
        (DoeClass.S, 10, 14),
        (DoeClass.M, 3, 23),
        (DoeClass.M, 5, 38),
        (DoeClass.M, 2, 15),
        (DoeClass.L, 5, 100),
        (DoeClass.QUAD_MEAN, 3, 7),
    ])
    def test_sizes(self, doe_class, d, expected):
        assert doe_size(doe_class, d) == expected

    def test_invalid_dimension(self):
        with pytest.raises(ValueError):
            doe_size(DoeClass.S, 0)


class TestBoxMapping:
    """Tests for the unit cube to search space map."""

    @given(dims, seeds)
    @settings(max_examples=50, deadline=None)
    def test_inverse(self, d, seed):
        """
        **Feature: bocoa, Property 8: Box mapping inverse**
        """
        space = SearchSpace.box(d)
        U = np.random.default_rng(seed).uniform(size=(10, d))
        X = scale_to_box(Design(U), space)
        assert np.all(X >= space.lower) and np.all(X <= space.upper)
        assert np.allclose(unit_from_box(X, space), U, atol=1e-12)


class TestSeedStreams:
    """Tests for seed stream derivation."""

    def test_streams_are_distinct(self):
        seeds = {component_seed(7, stream) for stream in Stream}
        assert len(seeds) == len(Stream)

    def test_keys_change_seed(self):
        assert component_seed(7, Stream.TRAIN, 1) != component_seed(7, Stream.TRAIN, 2)

    def test_rng_reproducible(self):
        a = component_rng(11, Stream.ACQUISITION, 3).uniform(size=5)
        b = component_rng(11, Stream.ACQUISITION, 3).uniform(size=5)
        assert np.array_equal(a, b)
