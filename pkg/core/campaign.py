"""
Campaign orchestration.

Runs every (configuration, function, dimension, instance) combination of a
campaign in a process pool, then reduces the run records into CSV reports.
Outputs are ordered by sorted run id, so a rerun of the same campaign
writes byte-identical CSV files regardless of scheduling.

Instance and run seeds depend only on (base seed, function, dimension,
instance index), so all configurations of a campaign see the same
instances and the same seed streams.
"""

import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cache.run_store import RunStore
from core.bo_loop import RANDOM_CONFIG_NAME, RunResult, random_search_baseline, run, run_id_for
from core.configs import DEFAULT_BUDGET_MULTIPLIER, config_from_name, with_overrides
from core.formatting import SummaryRow, evals_rows, read_csv, write_csv
from core.logging_config import ProgressLogger
from core.metrics import (
    DegenerateMetricError,
    RegressionEntry,
    RegressionVariant,
    ertd,
    popt,
    problem_first_hits,
    rank_scores,
    regression_experiment,
)
from core.seeding import Stream, component_seed
from core.testbed import FunctionGroup, TARGET_PRECISIONS, TestFunctionId, instance_name, make_instance
from core.validation import CampaignSpec, RegressionSpec


ALL_GROUPS = "all"
EVALS_HEADER = ["run_id", "eval_index", "f", "best_so_far"]
ERTD_HEADER = ["config", "function_group", "d", "evals", "proportion"]
ERTD_FUNCTIONS_HEADER = ["config", "fid", "d", "evals", "proportion"]
POPT_HEADER = ["config", "d", "ertd_at_budget", "popt"]
Q2_HEADER = ["variant", "fid", "d", "q2_mean", "q2_sd", "ks_mean", "ks_sd", "rank_q2", "rank_ertd",
             "q2_raw_mean", "n_instances", "skipped"]
PLOT_HEADER = ERTD_HEADER + ["log10_evals_per_dim"]


@dataclass(frozen=True)
class RunTask:
    """
    One run of a campaign.

    Attributes:
        config_name: Configuration name, or "random"
        fid: Test function
        d: Dimension
        instance_index: Index of the instance within the campaign
        instance_seed: Seed of the function instance
        run_seed: Seed of the run
        budget_multiplier: Evaluations per dimension
    """
    config_name: str
    fid: TestFunctionId
    d: int
    instance_index: int
    instance_seed: int
    run_seed: int
    budget_multiplier: int = DEFAULT_BUDGET_MULTIPLIER

    @property
    def run_id(self) -> str:
        return run_id_for(self.config_name, instance_name(self.fid, self.d, self.instance_seed), self.run_seed)

    @property
    def budget(self) -> int:
        return self.budget_multiplier * self.d


@dataclass
class CampaignResult:
    """
    Outcome of a campaign.

    Attributes:
        results: Run results sorted by run id
        summary: Console summary rows
        failed: Run ids of runs that raised
        out_dir: Output directory
    """
    results: List[RunResult]
    summary: List[SummaryRow]
    failed: List[str] = field(default_factory=list)
    out_dir: Optional[Path] = None


def instance_seed_for(base_seed: int, fid: TestFunctionId, d: int, index: int) -> int:
    return component_seed(base_seed, Stream.INSTANCE, fid.value, d, index)


def run_seed_for(base_seed: int, fid: TestFunctionId, d: int, index: int) -> int:
    return component_seed(base_seed, Stream.RUN, fid.value, d, index)


def plan_runs(spec: CampaignSpec) -> List[RunTask]:
    """All run tasks of a campaign, configurations first, random baseline last."""
    multiplier = spec.budget_multiplier or DEFAULT_BUDGET_MULTIPLIER
    names = list(spec.configs) + ([RANDOM_CONFIG_NAME] if spec.include_random else [])
    tasks = []
    for name in names:
        for fid in spec.functions:
            for d in spec.dims:
                for i in range(spec.instances):
                    tasks.append(RunTask(name, fid, d, i, instance_seed_for(spec.seed, fid, d, i),
                                         run_seed_for(spec.seed, fid, d, i), multiplier))
    return tasks


def execute_task(task: RunTask) -> RunResult:
    """Execute one run task (top-level so worker processes can unpickle it)."""
    instance = make_instance(task.fid, task.d, task.instance_seed)
    if task.config_name == RANDOM_CONFIG_NAME:
        return random_search_baseline(instance, task.budget, task.run_seed)
    config = config_from_name(task.config_name, task.d)
    if config.budget_multiplier != task.budget_multiplier:
        config = with_overrides(config, budget_multiplier=task.budget_multiplier)
        config.check_dimension(task.d)
    return run(config, instance, task.run_seed)


def _describe(task: RunTask) -> str:
    return f"{task.config_name} on {task.fid.label} d={task.d} instance {task.instance_index}"


def execute_tasks(tasks: Sequence[RunTask], jobs: int, logger: Optional[ProgressLogger] = None,
                  worker: Callable[[RunTask], RunResult] = execute_task) -> Tuple[List[RunResult], List[str]]:
    """
    Execute tasks sequentially or in a process pool.

    Returns:
        (results sorted by run id, sorted run ids of failed tasks)
    """
    results: List[RunResult] = []
    failed: List[str] = []

    def record(task: RunTask, result: RunResult, elapsed: float):
        results.append(result)
        if logger:
            logger.complete_run(result.run_id, {
                "best_value": result.best_value,
                "evaluations": result.evaluations,
                "termination": result.termination.value,
                "elapsed": elapsed,
            })

    def fail(task: RunTask, error: Exception):
        failed.append(task.run_id)
        if logger:
            logger.fail_run(task.run_id, str(error))

    if logger:
        for task in tasks:
            logger.register_run(task.run_id, task.budget, _describe(task))

    if jobs <= 1:
        for task in tasks:
            start = time.time()
            try:
                record(task, worker(task), time.time() - start)
            except Exception as e:
                fail(task, e)
    else:
        start = time.time()
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            futures = {executor.submit(worker, task): task for task in tasks}
            for future in as_completed(futures):
                task = futures[future]
                try:
                    record(task, future.result(), time.time() - start)
                except Exception as e:
                    fail(task, e)

    results.sort(key=lambda r: r.run_id)
    return results, sorted(failed)


def _curve_rows(curve, prefix: List) -> List[List]:
    return [prefix + [int(n), float(p)] for n, p in zip(curve.evals, curve.proportions)]


def _group_hits(results: Sequence[RunResult], key: Callable[[RunResult], tuple]) -> Dict[tuple, List]:
    grouped: Dict[tuple, List] = {}
    for result in results:
        hits = problem_first_hits(result.values, result.instance.f_opt)
        grouped.setdefault(key(result), []).extend(hits)
    return grouped


def ertd_rows(results: Sequence[RunResult], configs: Sequence[str]) -> List[List]:
    """Rows of ertd.csv: overall and per function group."""
    position = {name: i for i, name in enumerate(configs)}
    grouped: Dict[tuple, List] = {}
    budgets: Dict[tuple, int] = {}
    for result in results:
        hits = problem_first_hits(result.values, result.instance.f_opt)
        d = result.instance.dim
        for group in (ALL_GROUPS, result.instance.function.group.value):
            key = (result.config_name, group, d)
            grouped.setdefault(key, []).extend(hits)
            budgets[key] = max(budgets.get(key, 0), result.budget)

    group_order = [ALL_GROUPS] + [g.value for g in FunctionGroup]
    rows = []
    for key in sorted(grouped, key=lambda k: (position.get(k[0], len(position)), k[2], group_order.index(k[1]))):
        rows.extend(_curve_rows(ertd(grouped[key], budgets[key]), list(key)))
    return rows


def ertd_function_rows(results: Sequence[RunResult], configs: Sequence[str]) -> List[List]:
    """Rows of ertd_functions.csv: one curve per (config, function, dimension)."""
    position = {name: i for i, name in enumerate(configs)}
    grouped = _group_hits(results, lambda r: (r.config_name, r.instance.function.label, r.instance.dim))
    budgets = {}
    for result in results:
        key = (result.config_name, result.instance.function.label, result.instance.dim)
        budgets[key] = max(budgets.get(key, 0), result.budget)
    rows = []
    for key in sorted(grouped, key=lambda k: (position.get(k[0], len(position)), k[2],
                                              TestFunctionId.parse(k[1]).value)):
        rows.extend(_curve_rows(ertd(grouped[key], budgets[key]), list(key)))
    return rows


def popt_rows(results: Sequence[RunResult], configs: Sequence[str]) -> Tuple[List[List], List[SummaryRow]]:
    """
    Rows of popt.csv and the console summary.

    The reference solves a problem at the budget if any configuration
    (random search included) solved it; Popt is left empty when there is
    no random baseline or the reference does not beat it.
    """
    problem_hits: Dict[tuple, Dict[str, bool]] = {}
    runs_per: Dict[tuple, int] = {}
    for result in results:
        inst = result.instance
        for delta, hit in zip(TARGET_PRECISIONS, problem_first_hits(result.values, inst.f_opt)):
            problem = (inst.function.value, inst.dim, inst.seed, delta)
            solved = hit is not None and hit <= result.budget
            entry = problem_hits.setdefault(problem, {})
            entry[result.config_name] = entry.get(result.config_name, False) or solved
        key = (result.config_name, inst.dim)
        runs_per[key] = runs_per.get(key, 0) + 1

    dims = sorted({problem[1] for problem in problem_hits})
    names = [c for c in configs if any((c, d) in runs_per for d in dims)]
    if any(r.config_name == RANDOM_CONFIG_NAME for r in results) and RANDOM_CONFIG_NAME not in names:
        names.append(RANDOM_CONFIG_NAME)

    rows, summary = [], []
    for d in dims:
        problems = [p for p in problem_hits if p[1] == d]
        reference = float(np.mean([any(problem_hits[p].values()) for p in problems]))
        final: Dict[str, float] = {}
        for name in names:
            solved = [problem_hits[p].get(name) for p in problems if name in problem_hits[p]]
            if solved:
                final[name] = float(np.mean(solved))
        for name in names:
            if name not in final:
                continue
            value: Optional[float] = None
            if RANDOM_CONFIG_NAME in final:
                try:
                    value = popt(final[name], reference, final[RANDOM_CONFIG_NAME])
                except DegenerateMetricError:
                    value = None
            rows.append([name, d, final[name], value])
            summary.append(SummaryRow(name, d, runs_per[(name, d)], final[name],
                                      value if value is not None else math.nan))
    return rows, summary


def write_campaign_outputs(results: Sequence[RunResult], configs: Sequence[str],
                           out_dir) -> List[SummaryRow]:
    """Write run records and all campaign CSV files."""
    out_dir = Path(out_dir)
    store = RunStore(out_dir)
    for result in results:
        store.put(result)

    ordered = sorted(results, key=lambda r: r.run_id)
    write_csv(out_dir / "evals.csv", EVALS_HEADER, [row for r in ordered for row in evals_rows(r)])
    write_csv(out_dir / "ertd.csv", ERTD_HEADER, ertd_rows(ordered, configs))
    write_csv(out_dir / "ertd_functions.csv", ERTD_FUNCTIONS_HEADER, ertd_function_rows(ordered, configs))
    rows, summary = popt_rows(ordered, configs)
    write_csv(out_dir / "popt.csv", POPT_HEADER, rows)
    return summary


def run_campaign(spec: CampaignSpec, logger: Optional[ProgressLogger] = None) -> CampaignResult:
    """
    Execute an optimization campaign and write its reports.

    Args:
        spec: Campaign specification
        logger: Optional session logger

    Returns:
        CampaignResult with the runs sorted by run id
    """
    tasks = plan_runs(spec)
    if logger:
        logger.start_campaign("run", configs=spec.configs, functions=[f.label for f in spec.functions],
                              dims=spec.dims, instances=spec.instances, seed=spec.seed,
                              jobs=spec.jobs, runs=len(tasks))
    results, failed = execute_tasks(tasks, spec.jobs, logger)
    configs = list(spec.configs) + ([RANDOM_CONFIG_NAME] if spec.include_random else [])
    summary = write_campaign_outputs(results, configs, spec.out_dir) if results else []
    if logger:
        logger.log_campaign_summary()
    return CampaignResult(results, summary, failed, Path(spec.out_dir))


def execute_regression(task: Tuple[RegressionVariant, TestFunctionId, int, int, int]) -> RegressionEntry:
    variant, fid, d, instances, seed = task
    return regression_experiment(variant, fid, d, instances, seed)


def final_ertd_by_function(path) -> Dict[tuple, float]:
    """Final proportion per (config, fid label, d) from an ertd_functions.csv file."""
    final: Dict[tuple, Tuple[int, float]] = {}
    for row in read_csv(path):
        key = (row["config"], row["fid"], int(row["d"]))
        evals = int(row["evals"])
        if key not in final or evals >= final[key][0]:
            final[key] = (evals, float(row["proportion"]))
    return {key: value for key, (_, value) in final.items()}


def regression_rows(entries: Sequence[RegressionEntry],
                    final_ertd: Optional[Dict[tuple, float]] = None) -> List[List]:
    """Rows of q2.csv with Q2 ranks and, when available, optimization ranks."""
    by_problem: Dict[tuple, Dict[RegressionVariant, RegressionEntry]] = {}
    for entry in entries:
        by_problem.setdefault((entry.fid.value, entry.d), {})[entry.variant] = entry

    rows = []
    for (fid_value, d) in sorted(by_problem):
        group = by_problem[(fid_value, d)]
        q2_ranks = rank_scores({v: e.q2_mean for v, e in group.items()})
        ertd_ranks: Dict[RegressionVariant, int] = {}
        if final_ertd is not None:
            label = TestFunctionId(fid_value).label
            scores = {v: final_ertd.get((v.config_name, label, d), math.nan) for v in group}
            if not all(math.isnan(s) for s in scores.values()):
                ertd_ranks = rank_scores(scores)
        for variant in RegressionVariant:
            if variant not in group:
                continue
            e = group[variant]
            rows.append([variant.value, e.fid.label, d, e.q2_mean, e.q2_sd, e.ks_mean, e.ks_sd,
                         q2_ranks[variant], ertd_ranks.get(variant), e.q2_raw_mean, e.n_instances, e.skipped])
    return rows


def run_regression(spec: RegressionSpec, logger: Optional[ProgressLogger] = None) -> List[RegressionEntry]:
    """
    Execute a regression campaign and write q2.csv.

    Returns:
        Entries in (function, dimension, variant) order
    """
    tasks = [(variant, fid, d, spec.instances, spec.seed)
             for fid in spec.functions for d in spec.dims for variant in spec.variants]
    if logger:
        logger.start_campaign("regress", variants=[v.value for v in spec.variants],
                              functions=[f.label for f in spec.functions], dims=spec.dims,
                              instances=spec.instances, seed=spec.seed)

    entries: List[RegressionEntry] = []
    if spec.jobs <= 1:
        entries = [execute_regression(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=spec.jobs) as executor:
            entries = list(executor.map(execute_regression, tasks))

    final_ertd = None
    if spec.ertd_dir is not None:
        final_ertd = final_ertd_by_function(Path(spec.ertd_dir) / "ertd_functions.csv")
    write_csv(Path(spec.out_dir) / "q2.csv", Q2_HEADER, regression_rows(entries, final_ertd))
    if logger:
        for e in entries:
            logger.info(f"📈 {e.variant.value} {e.fid.label} d={e.d}: Q2 {e.q2_mean:.4f}, "
                        f"KS p {e.ks_mean:.3f}, skipped {e.skipped}",
                        variant=e.variant.value, fid=e.fid.label, d=e.d, q2_mean=e.q2_mean,
                        ks_mean=e.ks_mean, skipped=e.skipped)
    return entries


def plot_rows(rows: Sequence[Dict[str, str]]) -> List[List]:
    """
    Append x = log10(evals / d) to ERTD rows.

    Raises:
        ValueError: If a row lacks evals or d, or has non-positive values
    """
    out = []
    for row in rows:
        try:
            evals, d = int(row["evals"]), int(row["d"])
        except (KeyError, TypeError, ValueError) as e:
            raise ValueError(f"Malformed ERTD row {row}: {e}") from e
        if evals < 1 or d < 1:
            raise ValueError(f"Malformed ERTD row {row}: evals and d must be positive")
        group = row.get("function_group", row.get("fid", ""))
        out.append([row["config"], group, d, evals, float(row["proportion"]), math.log10(evals / d)])
    return out


def plotdata(paths: Sequence, out_path) -> int:
    """Write plot-ready ERTD data from one or more ERTD CSV files; returns the row count."""
    rows = []
    for path in paths:
        rows.extend(plot_rows(read_csv(path)))
    write_csv(out_path, PLOT_HEADER, rows)
    return len(rows)
