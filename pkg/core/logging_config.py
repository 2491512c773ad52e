"""
Session logging for benchmark campaigns.

This module provides session-based logging with run tracking for long
campaigns of BO runs and regression experiments. Every session writes a
human-readable log file and a JSON-lines file for later analysis.
"""

import json
import logging
import logging.handlers
import threading
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional


CONSOLE_FORMAT = logging.Formatter('%(asctime)s - %(levelname)s - %(message)s', datefmt='%H:%M:%S')
FILE_FORMAT = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
MAX_LOG_BYTES = 50 * 1024 * 1024
LOG_BACKUPS = 5


def _handler(handler: logging.Handler, level: int, formatter: logging.Formatter) -> logging.Handler:
    handler.setLevel(level)
    handler.setFormatter(formatter)
    return handler


def _fresh_logger(name: str, level: int) -> logging.Logger:
    """A named logger stripped of handlers from an earlier session of the same name."""
    named = logging.getLogger(name)
    named.setLevel(level)
    for old in list(named.handlers):
        old.close()
        named.removeHandler(old)
    named.propagate = False
    return named


class ProgressLogger:
    """
    Session-based logger with run tracking for long campaigns.

    Features:
    - Session-based log files with timestamps
    - Structured logging with JSON format for analysis
    - Per-run registration and completion records
    - Optional periodic summaries from a background thread

    Attributes:
        session_name: Name of the session, used for both file names
        log_dir: Directory holding the session files
        runs: Run id -> bookkeeping dict with a "status" of running,
            completed or failed
    """

    def __init__(self, session_name: str = None, log_dir: str = "logs"):
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self.session_name = session_name or f"bocoa_{datetime.now():%Y%m%d_%H%M%S}"
        self.session_start = time.time()

        self.runs: Dict[str, Dict[str, Any]] = {}
        self.progress_lock = threading.Lock()
        self.progress_thread: Optional[threading.Thread] = None
        self._stop_monitoring = threading.Event()

        self.logger = _fresh_logger(f"bocoa.{self.session_name}", logging.DEBUG)
        self.logger.addHandler(_handler(logging.StreamHandler(), logging.INFO, CONSOLE_FORMAT))
        self.logger.addHandler(_handler(
            logging.handlers.RotatingFileHandler(self.log_path, maxBytes=MAX_LOG_BYTES, backupCount=LOG_BACKUPS),
            logging.DEBUG, FILE_FORMAT))

        self.progress_logger = _fresh_logger(f"bocoa_progress.{self.session_name}", logging.INFO)
        self.progress_logger.addHandler(_handler(
            logging.FileHandler(self.progress_path), logging.INFO, logging.Formatter('%(message)s')))

        self.logger.info(f"=== SESSION START: {self.session_name} ===")
        self.logger.info(f"Log directory: {self.log_dir.absolute()}")

    @property
    def log_path(self) -> Path:
        return self.log_dir / f"{self.session_name}.log"

    @property
    def progress_path(self) -> Path:
        return self.log_dir / f"{self.session_name}_progress.jsonl"

    def _emit(self, level: int, message: str, data: Dict[str, Any]):
        self.logger.log(level, message)
        if not data:
            return
        record = {
            "timestamp": datetime.now().isoformat(),
            "level": logging.getLevelName(level),
            "message": message,
            "session": self.session_name,
            "elapsed_time": time.time() - self.session_start,
        }
        record.update(data)
        self.progress_logger.info(json.dumps(record, default=str))

    def info(self, message: str, **kwargs):
        """Log at INFO; keyword data also goes to the JSON-lines file."""
        self._emit(logging.INFO, message, kwargs)

    def debug(self, message: str, **kwargs):
        self._emit(logging.DEBUG, message, kwargs)

    def warning(self, message: str, **kwargs):
        self._emit(logging.WARNING, message, kwargs)

    def error(self, message: str, **kwargs):
        self._emit(logging.ERROR, message, kwargs)

    def start_campaign(self, kind: str, **params):
        """Log the start of a campaign with its parameters."""
        self.info(f"🚀 Starting {kind} campaign", campaign=kind, parameters=params)

    def register_run(self, run_id: str, budget: int, description: str = ""):
        """Register a run for tracking."""
        with self.progress_lock:
            self.runs[run_id] = {"budget": budget, "description": description,
                                 "start_time": time.time(), "status": "running"}
        self.debug(f"📋 Run {run_id} registered: {description}",
                   run_id=run_id, budget=budget, description=description)

    def _finish(self, run_id: str, status: str) -> Dict[str, Any]:
        with self.progress_lock:
            entry = self.runs.setdefault(run_id, {"start_time": time.time(), "budget": None})
            entry["status"] = status
            entry["end_time"] = time.time()
            return dict(entry)

    def complete_run(self, run_id: str, final_results: Dict[str, Any] = None):
        """Mark a run as completed."""
        entry = self._finish(run_id, "completed")
        entry_results = final_results or {}
        with self.progress_lock:
            self.runs[run_id]["final_results"] = entry_results
            done = sum(1 for r in self.runs.values() if r["status"] == "completed")
            total = len(self.runs)
        elapsed = entry["end_time"] - entry["start_time"]
        self.info(f"✅ Run {run_id} completed in {elapsed:.2f}s ({done}/{total})",
                  run_id=run_id, elapsed_time=elapsed, final_results=entry_results)

    def fail_run(self, run_id: str, error: str):
        """Mark a run as failed."""
        self._finish(run_id, "failed")
        self.error(f"❌ Run {run_id} failed: {error}", run_id=run_id, error=error)

    def log_campaign_summary(self):
        """Log counts of registered, completed and failed runs."""
        with self.progress_lock:
            statuses = [r["status"] for r in self.runs.values()]
        counts = {status: statuses.count(status) for status in ("completed", "failed", "running")}
        self.info(f"📊 CAMPAIGN SUMMARY - {counts['completed']}/{len(statuses)} runs completed, "
                  f"{counts['failed']} failed",
                  runs=len(statuses), session_elapsed=time.time() - self.session_start, **counts)

    def start_progress_monitoring(self, interval_minutes: float = 1):
        """Start a daemon thread that logs a campaign summary every interval."""
        if self.progress_thread is not None:
            return

        def monitor():
            while not self._stop_monitoring.wait(interval_minutes * 60):
                self.log_campaign_summary()

        self.progress_thread = threading.Thread(target=monitor, daemon=True)
        self.progress_thread.start()
        self.info(f"📊 Started progress monitoring (updates every {interval_minutes} minutes)")

    def close_session(self):
        """Stop monitoring and close the session's handlers."""
        self._stop_monitoring.set()
        if self.progress_thread is not None:
            self.progress_thread.join(timeout=1.0)

        self.info(f"=== SESSION END: {self.session_name} ===")
        self.info(f"Total session time: {time.time() - self.session_start:.2f}s")
        for named in (self.logger, self.progress_logger):
            for handler in named.handlers:
                handler.close()


_session: Optional[ProgressLogger] = None


def get_logger(session_name: str = None, log_dir: str = "logs") -> ProgressLogger:
    """Return the process-wide session logger, creating it on first use."""
    global _session
    if _session is None:
        _session = ProgressLogger(session_name, log_dir)
    return _session


def close_logger():
    global _session
    if _session is not None:
        _session.close_session()
        _session = None
