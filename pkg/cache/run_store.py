"""
Run record store.

This module provides the RunStore class for storing and retrieving
per-run provenance records as flat JSON files under
<root>/runs/<run_id>.json, one file per run.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional

from core.bo_loop import RunResult


class RunStore:
    """
    Flat-file store of run provenance records.

    Each record holds the provenance of a run (configuration, instance
    descriptor, seed, stream ids, software version) and its evaluated
    values, which is enough to replay the run and check the replay.

    Attributes:
        root: Output directory of the campaign
        runs_dir: Directory holding the JSON records
    """

    def __init__(self, root: str = "results"):
        """
        Initialize the store.

        Args:
            root: Output directory of the campaign (default: "results")
        """
        self.root = Path(root)
        self.runs_dir = self.root / "runs"
        self.runs_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, run_id: str) -> Path:
        if not run_id or "/" in run_id or "\\" in run_id or run_id.startswith("."):
            raise ValueError(f"Invalid run id: {run_id!r}")
        return self.runs_dir / f"{run_id}.json"

    @staticmethod
    def record_for(result: RunResult) -> Dict[str, Any]:
        """Provenance record of a run with its evaluated values."""
        record = result.provenance()
        record["values"] = [float(v) for v in result.values]
        return record

    def put(self, result: RunResult) -> Path:
        """
        Store the record of a run, replacing any previous record.

        Returns:
            Path of the written file
        """
        return self.put_record(self.record_for(result))

    def put_record(self, record: Dict[str, Any]) -> Path:
        path = self._path(record["run_id"])
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(record, indent=2, sort_keys=True))
        tmp.replace(path)
        return path

    def get(self, run_id: str) -> Optional[Dict[str, Any]]:
        """
        Retrieve a run record.

        Returns:
            The record, or None if the run is not stored
        """
        path = self._path(run_id)
        if not path.exists():
            return None
        return json.loads(path.read_text())

    def exists(self, run_id: str) -> bool:
        return self._path(run_id).exists()

    def run_ids(self) -> List[str]:
        """Stored run ids in sorted order."""
        return sorted(p.stem for p in self.runs_dir.glob("*.json"))

    def get_all(self) -> List[Dict[str, Any]]:
        """All stored records, sorted by run id."""
        return [self.get(run_id) for run_id in self.run_ids()]

    def delete(self, run_id: str):
        path = self._path(run_id)
        if path.exists():
            path.unlink()
