"""File emission for experiment results.

JSON is written with sorted keys and a trailing newline so that identical
results give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..estimate import TABLE_COLUMNS
from ..protocol import CSV_COLUMNS

PLOT_COLUMNS = ("x", "empirical", "wilson_lo", "wilson_hi", "analytic", "trials")


def _clean(obj):
    """Plain-Python copy with non-finite floats, which JSON cannot carry, as strings."""
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path: Path, obj) -> Path:
    path.write_text(dumps(obj))
    return path


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    return path


def emit_report(results: dict, out_dir: str | Path) -> list[Path]:
    """Write every artifact present in ``results`` into ``out_dir``.

    Recognised keys: ``summary`` (summary.json), ``transcript_rows``
    (transcripts.csv), ``bounds`` (bounds.json), ``plot_rows``
    (plot_data.csv), ``estimate_rows`` (estimate.csv) and ``lemmas``
    (lemmas.json).  A simulate result without rows still gets a header-only
    transcript file.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "summary" in results:
        written.append(write_json(out / "summary.json", results["summary"]))
    if "transcript_rows" in results:
        written.append(write_csv(out / "transcripts.csv", CSV_COLUMNS, results["transcript_rows"]))
    if "bounds" in results:
        written.append(write_json(out / "bounds.json", results["bounds"]))
    if "plot_rows" in results:
        written.append(write_csv(out / "plot_data.csv", PLOT_COLUMNS, results["plot_rows"]))
    if "estimate_rows" in results:
        rows = [[r[c] for c in TABLE_COLUMNS] for r in results["estimate_rows"]]
        written.append(write_csv(out / "estimate.csv", TABLE_COLUMNS, rows))
    if "lemmas" in results:
        written.append(write_json(out / "lemmas.json", results["lemmas"]))
    return written
