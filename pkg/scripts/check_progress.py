#!/usr/bin/env python3
"""
Check campaign progress by reading a session's structured log.

Usage:
    python scripts/check_progress.py [LOG_DIR]

Reads the newest *_progress.jsonl file under LOG_DIR (default:
results/logs) and prints registered, completed and failed run counts.
"""

import json
import sys
from datetime import datetime
from pathlib import Path


def latest_progress_file(log_dir: Path):
    files = sorted(log_dir.glob("*_progress.jsonl"), key=lambda p: p.stat().st_mtime)
    return files[-1] if files else None


def summarize(path: Path) -> dict:
    """Count run records of one progress file."""
    registered, completed, failed = set(), set(), {}
    campaign = None
    with open(path) as f:
        for line in f:
            try:
                entry = json.loads(line)
            except json.JSONDecodeError:
                continue
            if "campaign" in entry:
                campaign = entry
            run_id = entry.get("run_id")
            if run_id is None:
                continue
            if "budget" in entry:
                registered.add(run_id)
            elif "final_results" in entry:
                completed.add(run_id)
            elif "error" in entry:
                failed[run_id] = entry["error"]
    return {"campaign": campaign, "registered": registered, "completed": completed, "failed": failed}


def check_progress(log_dir: Path) -> int:
    path = latest_progress_file(log_dir)
    if path is None:
        print(f"No progress files found in {log_dir}")
        return 1

    summary = summarize(path)
    print(f"[{datetime.now().strftime('%H:%M:%S')}] Session {path.name}")
    print("=" * 80)
    if summary["campaign"]:
        params = summary["campaign"].get("parameters", {})
        print(f"Campaign: {summary['campaign']['campaign']}  " +
              "  ".join(f"{k}={v}" for k, v in params.items()))

    total = len(summary["registered"])
    done = len(summary["completed"])
    print(f"Runs: {done:,}/{total:,} completed, {len(summary['failed']):,} failed")
    if total:
        print(f"Progress: {100.0 * (done + len(summary['failed'])) / total:.1f}%")
    for run_id, error in sorted(summary["failed"].items()):
        print(f"  ❌ {run_id}: {error}")
    return 0


if __name__ == "__main__":
    sys.exit(check_progress(Path(sys.argv[1] if len(sys.argv) > 1 else "results/logs")))
