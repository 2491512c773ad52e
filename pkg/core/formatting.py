"""
Result formatting module.

This module provides functions for formatting campaign results for
display in different contexts: CSV files, a console text table and web
JSON. Floats are written with 17 significant digits so that CSV values
round-trip exactly.
"""

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from core.bo_loop import RunResult


@dataclass
class SummaryRow:
    """
    One line of the console summary.

    Attributes:
        config: Configuration name
        d: Dimension
        runs: Number of runs
        ertd_final: ERTD at the budget
        popt: Relative optimization performance, if available
    """
    config: str
    d: int
    runs: int
    ertd_final: float
    popt: Optional[float] = None


def format_float(value: Optional[float]) -> str:
    """
    Serialize a float with 17 significant digits.

    Examples:
        >>> format_float(0.1)
        '0.10000000000000001'
        >>> format_float(None)
        ''
    """
    if value is None:
        return ""
    return format(float(value), ".17g")


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Render rows as CSV text with a header row."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buffer.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write rows as CSV with a header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(header, rows))
    return path


def read_csv(path) -> List[Dict[str, str]]:
    """Read a CSV file with a header row into dictionaries."""
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def evals_rows(result: RunResult) -> List[List[Any]]:
    """Rows (run_id, eval_index, f, best_so_far) of one run."""
    best = result.best_so_far
    return [[result.run_id, i + 1, float(f), float(b)]
            for i, (f, b) in enumerate(zip(result.values, best))]


def format_table(rows: List[SummaryRow]) -> str:
    """
    Format summary rows as a text table.

    Examples:
        >>> print(format_table([SummaryRow("M", 3, 10, 0.5, 0.25), SummaryRow("random", 3, 10, 0.1)]))
        Config | d | Runs | ERTD@budget | Popt
        -------|---|------|-------------|------
        M      | 3 |   10 |      0.5000 | 0.250
        random | 3 |   10 |      0.1000 | -
    """
    if not rows:
        return "No results to display."

    headers = ["Config", "d", "Runs", "ERTD@budget", "Popt"]
    cells = [[
        row.config,
        str(row.d),
        str(row.runs),
        f"{row.ertd_final:.4f}",
        f"{row.popt:.3f}" if row.popt is not None and not math.isnan(row.popt) else "-",
    ] for row in rows]

    col_widths = [len(h) for h in headers]
    for line in cells:
        col_widths = [max(w, len(c)) for w, c in zip(col_widths, line)]

    header_row = " | ".join(headers[i].ljust(col_widths[i]) for i in range(len(headers)))
    separator_row = "-|-".join("-" * w for w in col_widths)
    data_rows = []
    for line in cells:
        data_rows.append(" | ".join([
            line[0].ljust(col_widths[0]),
            line[1].ljust(col_widths[1]),
            line[2].rjust(col_widths[2]),
            line[3].rjust(col_widths[3]),
            line[4].ljust(col_widths[4]),
        ]).rstrip())

    return "\n".join([header_row.rstrip(), separator_row] + data_rows)


def format_for_web(result: RunResult) -> Dict[str, Any]:
    """
    Convert a run result to a JSON-serializable dictionary.

    Returns:
        Dictionary with the provenance record, the evaluated points and
        values, the best-so-far trace and the per-iteration statuses
    """
    return {
        "provenance": result.provenance(),
        "points": result.points.tolist(),
        "values": result.values.tolist(),
        "best_so_far": result.best_so_far.tolist(),
        "iterations": [record.to_dict() for record in result.iterations],
    }
