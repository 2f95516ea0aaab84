"""Sequential repetition until a committed-round budget is met.

Two engines produce the same per-trial statistics:

* :func:`run_sequential` plays every round through the round state machine
  and keeps full :class:`RoundRecord` lists.  Use it for transcripts,
  adaptive strategies that read history, and timing tests.
* :func:`run_sequential_fast` asks the strategy for whole batches of rounds
  (``strategy.sample_rounds``) and only keeps counts.  It is what the large
  Monte Carlo experiments use.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import ProtocolConfig
from .rounds import ABORT_VERDICTS, RoundRecord, StrategyBundle, Verdict, run_round

STATUS_COMPLETE = "complete"
STATUS_ABORTED = "aborted"
STATUS_INCONCLUSIVE = "inconclusive"

VERDICT_ORDER = tuple(Verdict)


@dataclass(frozen=True)
class StopRule:
    """Stop after ``target`` committed rounds, or give up after ``max_rounds``."""

    target: int
    max_rounds: Optional[int] = None

    def __post_init__(self):
        if self.target < 1:
            raise ValueError("target must be positive")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise ValueError("max_rounds must be positive")

    @classmethod
    def from_config(cls, cfg: ProtocolConfig) -> "StopRule":
        return cls(cfg.r, cfg.max_rounds)


@dataclass(frozen=True)
class TranscriptSummary:
    """Verdict counts of one sequential run."""

    counts: dict
    committed: int
    total_rounds: int
    status: str
    target: int

    def __post_init__(self):
        full = {v.value: 0 for v in VERDICT_ORDER}
        full.update({Verdict(k).value: int(c) for k, c in self.counts.items()})
        object.__setattr__(self, "counts", full)

    @property
    def aborted(self) -> bool:
        return self.status == STATUS_ABORTED

    @property
    def abort_reason(self) -> Optional[str]:
        for v in (Verdict.ABORT_MISMATCH_COMMIT, Verdict.ABORT_MISMATCH_ANSWER, Verdict.ABORT_TIMING):
            if self.counts[v.value]:
                return v.value
        return None

    @property
    def scored(self) -> tuple[int, int, int]:
        """(correct, no answer, incorrect) among committed, non-aborted rounds."""
        c = self.counts
        return c["accept"], c["loss"], c["wrong"]

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "target": self.target,
            "committed": self.committed,
            "total_rounds": self.total_rounds,
            "counts": dict(self.counts),
        }


@dataclass
class Transcript:
    records: list = field(default_factory=list)
    status: str = STATUS_COMPLETE
    target: int = 0
    trial_id: int = 0

    @property
    def counts(self) -> dict:
        c = Counter(r.verdict.value for r in self.records)
        return {v.value: c.get(v.value, 0) for v in VERDICT_ORDER}

    @property
    def committed(self) -> int:
        return sum(r.counts_as_committed for r in self.records)

    def summary(self) -> TranscriptSummary:
        return TranscriptSummary(self.counts, self.committed, len(self.records), self.status, self.target)


def run_sequential(
    cfg: ProtocolConfig,
    bundle: StrategyBundle,
    stop: Optional[StopRule] = None,
    rng: Optional[np.random.Generator] = None,
    trial_id: int = 0,
    round_period: float = 10.0,
) -> Transcript:
    """Play rounds until ``stop.target`` committed rounds or the first abort.

    A transcript that hits ``stop.max_rounds`` first is marked inconclusive.
    """
    stop = stop or StopRule.from_config(cfg)
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    tr = Transcript(target=stop.target, trial_id=trial_id)
    committed = 0
    idx = 0
    while True:
        if stop.max_rounds is not None and idx >= stop.max_rounds:
            tr.status = STATUS_INCONCLUSIVE
            return tr
        rec = run_round(cfg, bundle, rng, round_idx=idx, t0=idx * round_period)
        tr.records.append(rec)
        idx += 1
        if rec.verdict in ABORT_VERDICTS:
            tr.status = STATUS_ABORTED
            return tr
        committed += rec.counts_as_committed
        if committed >= stop.target:
            tr.status = STATUS_COMPLETE
            return tr


# --- batch engine ---------------------------------------------------------------

BOTTOM = -1  # answer code for "no answer" in batch arrays

_CODE = {v: i for i, v in enumerate(VERDICT_ORDER)}


def classify_batch(mode: str, c_a, c_b, a_a, a_b, v) -> np.ndarray:
    """Verdict codes (indices into ``VERDICT_ORDER``) for batch arrays.

    Batch strategies are always on time, so no timing aborts appear here.
    """
    a_a = np.asarray(a_a)
    a_b = np.asarray(a_b)
    v = np.asarray(v)
    out = np.where(
        a_a != a_b,
        _CODE[Verdict.ABORT_MISMATCH_ANSWER],
        np.where(a_a == BOTTOM, _CODE[Verdict.LOSS], np.where(a_a == v, _CODE[Verdict.ACCEPT], _CODE[Verdict.WRONG])),
    )
    if mode == "commit":
        c_a = np.asarray(c_a)
        c_b = np.asarray(c_b)
        out = np.where(c_a != c_b, _CODE[Verdict.ABORT_MISMATCH_COMMIT], out)
        out = np.where((c_a == 0) & (c_b == 0), _CODE[Verdict.DISCARDED_NO_COMMIT], out)
    return out


_ABORT_CODES = np.array([_CODE[v] for v in ABORT_VERDICTS])


def run_sequential_fast(
    cfg: ProtocolConfig,
    strategy,
    stop: Optional[StopRule] = None,
    rng: Optional[np.random.Generator] = None,
    chunk: Optional[int] = None,
) -> TranscriptSummary:
    """Count-only sequential run driven by ``strategy.sample_rounds``.

    The first batch is sized from ``strategy.commit_rate_hint`` so that most
    trials finish in a single call.
    """
    stop = stop or StopRule.from_config(cfg)
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    counts = np.zeros(len(VERDICT_ORDER), dtype=np.int64)
    committed = 0
    total = 0
    if chunk is None:
        hint = float(getattr(strategy, "commit_rate_hint", 1.0))
        chunk = min(1 << 20, int(1.1 * stop.target / hint) + 64)
    size = chunk
    while True:
        if stop.max_rounds is not None:
            if total >= stop.max_rounds:
                return _summary(counts, committed, total, STATUS_INCONCLUSIVE, stop)
            size = min(size, stop.max_rounds - total)
        batch = strategy.sample_rounds(cfg, size, rng, committed)
        codes = classify_batch(cfg.mode, batch["c_a"], batch["c_b"], batch["a_a"], batch["a_b"], batch["v"])
        if cfg.mode == "commit":
            is_committed = codes != _CODE[Verdict.DISCARDED_NO_COMMIT]
        else:
            is_committed = np.ones(codes.size, dtype=bool)
        cum = committed + np.cumsum(is_committed)
        abort_at = np.flatnonzero(np.isin(codes, _ABORT_CODES))
        done_at = np.flatnonzero(cum >= stop.target)
        first_abort = abort_at[0] if abort_at.size else None
        first_done = done_at[0] if done_at.size else None
        end, status = None, None
        if first_abort is not None and (first_done is None or first_abort <= first_done):
            end, status = first_abort, STATUS_ABORTED
        elif first_done is not None:
            end, status = first_done, STATUS_COMPLETE
        if end is not None:
            used = codes[: end + 1]
            counts += np.bincount(used, minlength=len(VERDICT_ORDER))
            committed = int(cum[end])
            return _summary(counts, committed, total + end + 1, status, stop)
        counts += np.bincount(codes, minlength=len(VERDICT_ORDER))
        committed = int(cum[-1])
        total += codes.size
        size = min(size * 2, 1 << 20)


def _summary(counts, committed, total, status, stop) -> TranscriptSummary:
    return TranscriptSummary(
        {v.value: int(c) for v, c in zip(VERDICT_ORDER, counts)}, int(committed), int(total), status, stop.target
    )
