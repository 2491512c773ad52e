#!/usr/bin/env python3
"""
Directional factor-study campaigns.

Runs small campaigns comparing one factor at a time and prints the final
ERTD of each configuration on the targets 1, 0.1 and 0.01.

Usage:
    python scripts/study_campaigns.py [options]

Options:
    --study NAME    doe, optimizer or all (default: all)
    --instances N   Instances per function (default: 10)
    --jobs N        Worker processes (default: 1)
    --out DIR       Output directory (default: results/study)
"""

import argparse
import sys
import time
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from core.bo_loop import RANDOM_CONFIG_NAME
from core.campaign import run_campaign
from core.logging_config import ProgressLogger
from core.metrics import ertd, problem_first_hits
from core.testbed import TestFunctionId
from core.validation import CampaignSpec


STUDY_TARGETS = (1.0, 0.1, 0.01)

STUDIES = {
    "doe": (["S", "M", "L"], [TestFunctionId.F1, TestFunctionId.F3, TestFunctionId.F8], 3, True),
    "optimizer": (["M", "EirandM", "EilocM"], [TestFunctionId.F1, TestFunctionId.F2], 5, False),
}


def final_ertd(results, config_name):
    hits = [h for r in results if r.config_name == config_name
            for h in problem_first_hits(r.values, r.instance.f_opt, STUDY_TARGETS)]
    return ertd(hits, results[0].budget).final if hits else float("nan")


def run_study(name, instances, jobs, out_dir):
    configs, functions, d, include_random = STUDIES[name]
    print(f"🔄 Study '{name}': {', '.join(configs)} on {', '.join(f.label for f in functions)}, d={d}")

    spec = CampaignSpec(configs, functions, [d], instances=instances, out_dir=str(out_dir / name),
                        jobs=jobs, include_random=include_random)
    logger = ProgressLogger(f"study_{name}", log_dir=str(out_dir / name / "logs"))
    start = time.time()
    try:
        result = run_campaign(spec, logger)
    finally:
        logger.close_session()

    names = configs + ([RANDOM_CONFIG_NAME] if include_random else [])
    for config_name in names:
        print(f"   {config_name:<10} ERTD@budget {final_ertd(result.results, config_name):.3f}")
    print(f"✅ {len(result.results)} runs in {time.time() - start:.1f}s, {len(result.failed)} failed")
    return 1 if result.failed else 0


def main():
    parser = argparse.ArgumentParser(description="Directional factor-study campaigns")
    parser.add_argument("--study", choices=sorted(STUDIES) + ["all"], default="all")
    parser.add_argument("--instances", type=int, default=10)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--out", default="results/study")
    args = parser.parse_args()

    studies = sorted(STUDIES) if args.study == "all" else [args.study]
    status = 0
    for name in studies:
        status |= run_study(name, args.instances, args.jobs, Path(args.out))
    return status


if __name__ == "__main__":
    sys.exit(main())
