"""
Directional reproductions of the factor-study findings on small campaigns.

These campaigns take minutes; run them with `pytest -m slow`.

Feature: bocoa
"""

import os

import numpy as np
import pytest

from core.bo_loop import RANDOM_CONFIG_NAME, Termination, replay, run
from core.campaign import EVALS_HEADER, execute_tasks, plan_runs
from core.configs import config_from_name
from core.formatting import csv_text, evals_rows
from core.metrics import RegressionVariant, ertd, problem_first_hits, regression_experiment
from core.testbed import TestFunctionId, make_instance
from core.validation import CampaignSpec


pytestmark = pytest.mark.slow

TARGETS = (1.0, 0.1, 0.01)
JOBS = min(4, os.cpu_count() or 1)


def _final_ertd(results, config_name):
    hits = []
    for result in results:
        if result.config_name == config_name:
            hits.extend(problem_first_hits(result.values, result.instance.f_opt, TARGETS))
    return ertd(hits, results[0].budget).final


def _campaign(tmp_path, configs, functions, d, instances):
    spec = CampaignSpec([c for c in configs if c != RANDOM_CONFIG_NAME], functions, [d], instances=instances,
                        seed=1, out_dir=str(tmp_path), jobs=JOBS, include_random=RANDOM_CONFIG_NAME in configs)
    results, failed = execute_tasks(plan_runs(spec), JOBS)
    assert failed == []
    return results


@pytest.fixture(scope="module")
def doe_campaign(tmp_path_factory):
    """S, M, L and random search on {f1, f3, f8}, d=3, budget 30 d, 10 instances."""
    functions = [TestFunctionId.F1, TestFunctionId.F3, TestFunctionId.F8]
    return _campaign(tmp_path_factory.mktemp("doe"), ["S", "M", "L", RANDOM_CONFIG_NAME], functions, 3, 10)


def test_regression_quality_on_sphere():
    default = regression_experiment(RegressionVariant.DEFAULT, TestFunctionId.F1, 5)
    exponential = regression_experiment(RegressionVariant.EXPONENTIAL, TestFunctionId.F1, 5)
    assert default.skipped == 0
    assert default.q2_mean >= 0.999
    assert exponential.q2_mean < default.q2_mean


def test_small_initial_design_beats_large(doe_campaign):
    assert _final_ertd(doe_campaign, "S") >= _final_ertd(doe_campaign, "L")


def test_ego_beats_random_search(doe_campaign):
    assert _final_ertd(doe_campaign, "M") - _final_ertd(doe_campaign, RANDOM_CONFIG_NAME) >= 0.2


def test_multistart_beats_single_local(tmp_path):
    results = _campaign(tmp_path, ["M", "EilocM"], [TestFunctionId.F1, TestFunctionId.F2], 5, 10)
    assert _final_ertd(results, "M") > _final_ertd(results, "EilocM")


def test_hundred_runs_exhaust_budget():
    config = config_from_name("M", 3)
    for seed in range(1, 101):
        result = run(config, make_instance(TestFunctionId.F3, 3, seed), seed)
        assert result.termination is Termination.BUDGET_EXHAUSTED
        assert result.evaluations == 90


@pytest.mark.parametrize("name", ["M", "WarpS", "ScalM", "MeanM"])
def test_replay_is_byte_identical(name):
    result = run(config_from_name(name, 3), make_instance(TestFunctionId.F8, 3, 4), seed=21)
    replayed = replay(result.provenance())
    assert csv_text(EVALS_HEADER, evals_rows(replayed)) == csv_text(EVALS_HEADER, evals_rows(result))
    assert np.array_equal(replayed.points, result.points)
