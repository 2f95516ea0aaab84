"""CSV export of round transcripts."""

from __future__ import annotations

import csv
import io
from typing import Iterable, TextIO

from .prf import to_hex

CSV_COLUMNS = ("trial_id", "round_idx", "x_hex", "y_hex", "c_A", "c_B", "answer", "v", "verdict", "t_commit", "t_answer")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _latest(times) -> float | None:
    present = [t for t in times if t is not None]
    return max(present) if present else None


def record_row(trial_id: int, rec) -> list[str]:
    if rec.answer_a is None and rec.answer_b is None:
        answer = "bot"
    elif rec.answer_a == rec.answer_b:
        answer = str(rec.answer_a)
    else:
        answer = f"{_fmt(rec.answer_a) or 'bot'}|{_fmt(rec.answer_b) or 'bot'}"
    return [
        str(trial_id),
        str(rec.round_idx),
        to_hex(rec.x, rec.n),
        to_hex(rec.y, rec.n),
        _fmt(rec.commit_a),
        _fmt(rec.commit_b),
        answer,
        _fmt(rec.v),
        rec.verdict.value,
        _fmt(_latest(rec.commit_received)),
        _fmt(_latest(rec.answer_received)),
    ]


def write_transcripts_csv(transcripts: Iterable, out: TextIO) -> int:
    """Write one row per round; returns the number of rows written."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    rows = 0
    for tr in transcripts:
        for rec in tr.records:
            w.writerow(record_row(tr.trial_id, rec))
            rows += 1
    return rows


def transcripts_to_csv(transcripts: Iterable) -> str:
    buf = io.StringIO()
    write_transcripts_csv(transcripts, buf)
    return buf.getvalue()
