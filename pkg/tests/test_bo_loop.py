"""
Tests for the EGO loop, the random baseline and run replay.

Feature: bocoa
"""

import json

import numpy as np
import pytest

import core.bo_loop as bo_loop
from core.acquisition import AcquisitionStatus
from core.bo_loop import (
    MAX_CONSECUTIVE_FAILURES,
    MODEL_FAILURE,
    RANDOM_CONFIG_NAME,
    Termination,
    random_search_baseline,
    replay,
    run,
)
from core.configs import CONFIG_REGISTRY, with_overrides
from core.doe import maximin_lhs, scale_to_box
from core.gp_train import ModelTrainingError
from core.seeding import Stream, component_seed
from core.testbed import FunctionInstance, SearchSpace, TestFunctionId, make_instance
from core.transforms import OutputWarp


def _short(name, multiplier=8):
    return with_overrides(CONFIG_REGISTRY[name], budget_multiplier=multiplier)


class TestRun:
    """Tests for a complete BO run."""

    def setup_method(self):
        self.instance = make_instance(TestFunctionId.F1, 2, 1)
        self.config = _short("S")

    def test_budget_exhausted(self):
        result = run(self.config, self.instance, seed=3)
        assert result.evaluations == self.config.budget(2)
        assert result.termination is Termination.BUDGET_EXHAUSTED
        assert len(result.iterations) == result.budget - result.initial_size
        assert all(self.instance.space.contains(x) for x in result.points)

    def test_initial_design_is_maximin_lhs(self):
        result = run(self.config, self.instance, seed=3)
        n0 = self.config.initial_size(2)
        design = maximin_lhs(n0, 2, component_seed(3, Stream.DOE))
        assert np.array_equal(result.points[:n0], scale_to_box(design, self.instance.space))

    def test_deterministic(self):
        a = run(self.config, self.instance, seed=4)
        b = run(self.config, self.instance, seed=4)
        assert np.array_equal(a.values, b.values)
        assert a.run_id == b.run_id

    def test_best_so_far(self):
        result = run(self.config, self.instance, seed=5)
        assert np.all(np.diff(result.best_so_far) <= 0)
        assert result.best_value == result.best_so_far[-1]

    def test_improves_on_initial_design(self):
        result = run(_short("S", 15), self.instance, seed=6)
        assert result.best_value <= np.min(result.values[:result.initial_size])
        assert result.status_counts().get(AcquisitionStatus.EI_SUCCESS.value, 0) > 0

    def test_warping_config_records_warp(self):
        result = run(_short("WarpS"), self.instance, seed=1)
        record = result.provenance()
        assert result.warp is not None
        assert "warp" in record
        assert "input_scaling" not in record
        assert all(r.scaling is None for r in result.iterations)

    def test_scaling_config_records_scaling(self):
        result = run(_short("ScalS"), self.instance, seed=1)
        record = json.loads(json.dumps(result.provenance()))
        trained = [r for r in result.iterations if r.trained]
        assert trained and all(r.scaling is not None for r in trained)
        assert [s["iteration"] for s in record["input_scaling"]] == [r.iteration for r in trained]
        for entry in record["input_scaling"]:
            assert len(entry["alpha"]) == 2 and len(entry["beta"]) == 2
            assert "lengthscales" in entry

    def test_identity_warp_matches_unwarped_config(self):
        plain = run(_short("M", 12), self.instance, seed=2)
        warped = run(_short("WarpM", 12), self.instance, seed=2, warp=OutputWarp.identity())
        assert warped.warp.is_identity
        assert np.array_equal(warped.points, plain.points)
        assert np.array_equal(warped.values, plain.values)

    @pytest.mark.parametrize("name", ["ScalS", "ExpMeanS", "QuadMean", "EilocM", "EirandM"])
    def test_variant_configs_complete(self, name):
        config = _short(name, 10)
        result = run(config, self.instance, seed=2)
        assert result.evaluations == config.budget(2)

    def test_budget_too_small(self):
        with pytest.raises(ValueError):
            run(_short("L", 10), self.instance, seed=1)


class TestModelFailures:
    """Tests for training failures inside the loop."""

    def test_repeated_failures_stop_the_run(self, monkeypatch):
        def failing_train(*args, **kwargs):
            raise ModelTrainingError("forced")

        monkeypatch.setattr(bo_loop, "train", failing_train)
        instance = make_instance(TestFunctionId.F1, 2, 1)
        config = _short("S", 30)
        result = run(config, instance, seed=1)
        assert result.termination is Termination.REPEATED_FAILURES
        assert result.evaluations == config.initial_size(2) + MAX_CONSECUTIVE_FAILURES
        assert all(r.status == MODEL_FAILURE for r in result.iterations)
        assert all(instance.space.contains(x) for x in result.points)

    def test_isolated_failure_recovers(self, monkeypatch):
        real_train = bo_loop.train
        calls = {"n": 0}

        def flaky_train(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] == 2:
                raise ModelTrainingError("forced")
            return real_train(*args, **kwargs)

        monkeypatch.setattr(bo_loop, "train", flaky_train)
        config = _short("S")
        result = run(config, make_instance(TestFunctionId.F1, 2, 1), seed=1)
        assert result.termination is Termination.BUDGET_EXHAUSTED
        assert result.iterations[1].status == MODEL_FAILURE
        assert result.iterations[2].status != MODEL_FAILURE


class TestRandomBaseline:
    """Tests for uniform random search."""

    def test_budget_and_bounds(self):
        instance = make_instance(TestFunctionId.F8, 3, 2)
        result = random_search_baseline(instance, 90, seed=1)
        assert result.evaluations == 90
        assert result.config_name == RANDOM_CONFIG_NAME
        assert all(instance.space.contains(x) for x in result.points)

    def test_invalid_budget(self):
        with pytest.raises(ValueError):
            random_search_baseline(make_instance(TestFunctionId.F1, 2, 1), 0, seed=1)

    def test_best_values_match_order_statistics(self):
        # min of n squared uniforms on [-5, 5]: 25 B^2 with B ~ Beta(1, n)
        instance = FunctionInstance(function=TestFunctionId.F1, dim=1, rotation=np.eye(1),
                                    shift=np.zeros(1), seed=0, f_opt=0.0, space=SearchSpace.box(1))
        runs = 1000
        best = np.array([random_search_baseline(instance, 20, seed).best_so_far for seed in range(runs)])
        for n in (1, 5, 20):
            mean = 50.0 / ((n + 1) * (n + 2))
            second = 625.0 * 24.0 / ((n + 1) * (n + 2) * (n + 3) * (n + 4))
            sd = np.sqrt(second - mean ** 2)
            assert abs(best[:, n - 1].mean() - mean) <= 4.0 * sd / np.sqrt(runs)

    @pytest.mark.slow
    def test_ego_beats_random_search_on_sphere(self):
        instance = make_instance(TestFunctionId.F1, 3, 1)
        config = CONFIG_REGISTRY["S"]
        seeds = range(1, 11)
        ego = [run(config, instance, seed).best_value for seed in seeds]
        baseline = [random_search_baseline(instance, config.budget(3), seed).best_value for seed in seeds]
        assert np.median(ego) <= np.median(baseline)


class TestReplay:
    """Tests for replay from provenance records."""

    def test_replay_reproduces_values(self):
        result = run(_short("S"), make_instance(TestFunctionId.F3, 2, 7), seed=11)
        record = json.loads(json.dumps(result.provenance()))
        replayed = replay(record)
        assert np.array_equal(replayed.values, result.values)
        assert replayed.run_id == result.run_id

    def test_replay_random_baseline(self):
        result = random_search_baseline(make_instance(TestFunctionId.F1, 3, 2), 30, seed=4)
        assert np.array_equal(replay(result.provenance()).values, result.values)

    def test_provenance_fields(self):
        result = run(_short("S"), make_instance(TestFunctionId.F1, 2, 1), seed=1)
        record = result.provenance()
        for key in ("run_id", "config", "instance", "seed", "budget", "streams", "version"):
            assert key in record
        assert record["streams"]["DOE"] == int(Stream.DOE)
