"""Prover and attacker behaviours.

Every strategy works with both sequential engines: the round-by-round
methods (``quantum_step`` / ``answer`` / ``observe``) used by
:func:`cqpv.protocol.run_sequential`, and ``sample_rounds`` used by
:func:`cqpv.protocol.run_sequential_fast`.  The two paths sample the same
per-round distribution.

Batch arrays returned by ``sample_rounds`` hold commit bits ``c_a``/``c_b``,
answers ``a_a``/``a_b`` (``-1`` for no answer) and the verifier's reference
bit ``v``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .devices import DeviceParams, measurement_stage, prover_lab_batch
from .protocol.prf import eval_f_many, sample_inputs
from .protocol.rounds import AbstractAnswer

BOTTOM = -1


def _combine_flips(p: float, q: float) -> float:
    """Probability that exactly one of two independent flips happens."""
    return p + q - 2 * p * q


def _resolve_batch(p_correct: float, p_wrong: float, v: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(v.size)
    return np.where(u < p_correct, v, np.where(u < p_correct + p_wrong, 1 - v, BOTTOM))


class Strategy:
    kind = "attackers"
    commit_rate_hint = 1.0

    def begin_round(self) -> None:
        pass

    def observe(self, record) -> None:
        pass


# --- honest prover --------------------------------------------------------------


class HonestProver(Strategy):
    """Prover at P with the laboratory model of :mod:`cqpv.devices`.

    Commit mode: commit when presence detection heralds.  Answer with the
    measurement of the (teleported) photon in basis ``f(x, y)``, corrected for
    the heralded Pauli byproduct; no answer if the photon is lost after the
    herald.  Each answer is flipped with the combined probability of
    ``p_err`` and the device infidelity.
    """

    kind = "prover"

    def __init__(self, dev: DeviceParams, p_err: float = 0.0, processing_time: float = 0.0):
        if not 0 <= p_err <= 1:
            raise ValueError("p_err outside [0, 1]")
        self.dev = dev
        self.p_err = p_err
        self.processing_time = processing_time

    @property
    def flip_probability(self) -> float:
        return _combine_flips(self.p_err, self.dev.flip_probability)

    @property
    def commit_rate_hint(self) -> float:
        if self.dev.presence_mode == "qnd":
            return max(self.dev.p_commit(), 1e-9)
        return max(0.5 * self.dev.eta_v * self.dev.eta_det**2, 1e-9)

    # round-by-round

    def quantum_step(self, ctx, _ctx_b):
        if ctx.cfg.mode == "plain":
            return None
        lab = prover_lab_batch(self.dev, np.array([ctx.port.arrived]), ctx.rng).row(0)
        ctx.scratch["lab"] = lab
        c = int(lab.commit)
        return c, c

    def answer(self, ctx, _ctx_b):
        if ctx.cfg.mode == "plain":
            measured, faithful = measurement_stage(self.dev, [True], [ctx.port.arrived], ctx.rng)
            measured, faithful, correction = bool(measured[0]), bool(faithful[0]), "I"
        else:
            lab = ctx.scratch["lab"]
            if not lab.commit:
                return None, None
            measured, faithful, correction = lab.measured, lab.faithful, lab.correction
        if not measured:
            return None, None
        if faithful:
            basis = ctx.basis()
            ctx.port.apply_pauli(ctx, correction)
            bit = ctx.port.measure(ctx, basis, ctx.cfg.m, frame=correction)
        else:
            bit = int(ctx.rng.integers(0, 2))
        if ctx.rng.random() < self.flip_probability:
            bit ^= 1
        return bit, bit

    # batch

    def sample_rounds(self, cfg, n: int, rng: np.random.Generator, committed_offset: int = 0) -> dict:
        arrived = rng.random(n) < self.dev.eta_v
        if cfg.mode == "commit":
            lab = prover_lab_batch(self.dev, arrived, rng)
            commit, measured, faithful = lab.commit, lab.measured, lab.faithful
        else:
            commit = np.ones(n, dtype=bool)
            measured, faithful = measurement_stage(self.dev, commit, arrived, rng)
        v = rng.integers(0, 2, size=n)
        bit = np.where(faithful, v, rng.integers(0, 2, size=n))
        bit ^= (rng.random(n) < self.flip_probability).astype(bit.dtype)
        a = np.where(commit & measured, bit, BOTTOM)
        c = commit.astype(np.int8)
        return {"c_a": c, "c_b": c, "a_a": a, "a_b": a, "v": v}


# --- basis-guess attack ------------------------------------------------------------


class BasisGuessAttacker(Strategy):
    """Alice measures Q at once in a uniformly guessed basis.

    After one round of communication both attackers know ``f(x, y)``; they
    answer the measured bit if the guess was right and send no answer
    otherwise.  In commit mode both always send the same commit bit, equal to
    1 with probability ``commit_rate``.
    """

    def __init__(self, commit_rate: float = 1.0):
        if not 0 <= commit_rate <= 1:
            raise ValueError("commit_rate outside [0, 1]")
        self.commit_rate = commit_rate
        self.commit_rate_hint = max(commit_rate, 1e-9)

    def quantum_step(self, ctx_a, ctx_b):
        c = int(ctx_a.rng.random() < self.commit_rate)
        ctx_a.scratch["commit"] = c
        if c or ctx_a.cfg.mode == "plain":
            guess = int(ctx_a.rng.integers(0, ctx_a.cfg.m))
            ctx_a.scratch["guess"] = guess
            ctx_a.scratch["bit"] = ctx_a.port.measure(ctx_a, guess, ctx_a.cfg.m)
        return c, c

    def answer(self, ctx_a, ctx_b):
        if "guess" not in ctx_a.scratch:
            return None, None
        # each attacker evaluates f on its own copy of (x, y)
        fa, fb = ctx_a.basis(), ctx_b.basis()
        guess, bit = ctx_a.scratch["guess"], ctx_a.scratch["bit"]
        return (bit if fa == guess else None), (bit if fb == guess else None)

    def sample_rounds(self, cfg, n: int, rng: np.random.Generator, committed_offset: int = 0) -> dict:
        xs = sample_inputs(cfg.n, n, rng)
        ys = sample_inputs(cfg.n, n, rng)
        f = eval_f_many(cfg.f_seed, xs, ys, cfg.m, cfg.n)
        if cfg.mode == "commit":
            commit = rng.random(n) < self.commit_rate
        else:
            commit = np.ones(n, dtype=bool)
        guess = rng.integers(0, cfg.m, size=n)
        v = rng.integers(0, 2, size=n)
        a = np.where(commit & (guess == f), v, BOTTOM)
        c = commit.astype(np.int8)
        return {"c_a": c, "c_b": c, "a_a": a, "a_b": a, "v": v}


# --- commit-mismatch attacks ----------------------------------------------------------


def bad_x_predicate(seed: int, fraction: float) -> Callable[[int], bool]:
    """Keyed predicate selecting about ``fraction`` of inputs ``x``.

    Rows chosen this way make the pairs ``(x, y)`` with a bad ``x`` a set of
    relative size ``fraction``; the predicate only needs ``x`` so Alice can
    evaluate it locally.
    """
    key = int(seed).to_bytes(16, "little")
    threshold = int(fraction * 2**64)

    def bad(x: int) -> bool:
        h = hashlib.blake2b(int(x).to_bytes(max(1, (int(x).bit_length() + 7) // 8), "little"), digest_size=8, key=key)
        return int.from_bytes(h.digest(), "little") < threshold

    return bad


@dataclass(frozen=True)
class MismatchAttackSpec:
    """Parameters of the non-adaptive commit-mismatch attack.

    ``epsilon`` is the conditional probability of unequal commits, given that
    at least one attacker commits, on good inputs; ``bad_epsilon`` applies to
    the bad set, which covers a fraction ``bad_fraction`` of input pairs.
    Committed rounds are answered correctly with probability ``p_answer`` and
    wrongly with ``p_wrong`` (default ``1 - p_answer``).
    """

    epsilon: float = 0.0
    bad_fraction: float = 0.0
    bad_epsilon: float = 1.0
    p_answer: float = 1.0
    p_wrong: Optional[float] = None
    commit_rate: float = 1.0
    bad_seed: int = 0

    def __post_init__(self):
        for name in ("epsilon", "bad_epsilon", "p_answer", "commit_rate"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} outside [0, 1]")
        if not 0 <= self.bad_fraction <= 0.5:
            raise ValueError("bad_fraction must lie in [0, 1/2]")
        if self.p_wrong is None:
            object.__setattr__(self, "p_wrong", 1.0 - self.p_answer)
        if self.p_answer + self.p_wrong > 1 + 1e-12:
            raise ValueError("p_answer + p_wrong exceeds 1")


class _SharedThresholdCommits(Strategy):
    """Commit rule shared by the mismatch attacks.

    A pre-shared uniform ``u`` decides the commits: Bob commits iff
    ``u < p``, Alice iff ``u < p (1 - eps)``.  Given that someone commits, the
    commits then differ with probability exactly ``eps``.
    """

    commit_rate = 1.0
    p_answer = 1.0
    p_wrong = 0.0

    def _eps(self, ctx_a) -> float:
        raise NotImplementedError

    def quantum_step(self, ctx_a, ctx_b):
        u = ctx_a.rng.random()
        eps = self._eps(ctx_a)
        c_b = int(u < self.commit_rate)
        c_a = int(u < self.commit_rate * (1 - eps))
        ctx_a.scratch["commit"] = c_a
        return c_a, c_b

    def answer(self, ctx_a, ctx_b):
        if not ctx_a.scratch.get("commit"):
            return None, None
        ans = AbstractAnswer(self.p_answer, self.p_wrong)
        return ans, ans

    def _batch(self, eps: np.ndarray, u: np.ndarray, rng) -> dict:
        n = u.size
        c_b = (u < self.commit_rate).astype(np.int8)
        c_a = (u < self.commit_rate * (1 - eps)).astype(np.int8)
        v = rng.integers(0, 2, size=n)
        a = _resolve_batch(self.p_answer, self.p_wrong, v, rng)
        return {"c_a": c_a, "c_b": c_b, "a_a": a, "a_b": a, "v": v}


class MismatchAttacker(_SharedThresholdCommits):
    def __init__(self, spec: MismatchAttackSpec):
        self.spec = spec
        self.commit_rate = spec.commit_rate
        self.commit_rate_hint = max(spec.commit_rate, 1e-9)
        self.p_answer = spec.p_answer
        self.p_wrong = spec.p_wrong
        self._bad = bad_x_predicate(spec.bad_seed, spec.bad_fraction) if spec.bad_fraction > 0 else None

    def _eps(self, ctx_a) -> float:
        if self._bad is not None and self._bad(ctx_a.x):
            return self.spec.bad_epsilon
        return self.spec.epsilon

    def sample_rounds(self, cfg, n: int, rng: np.random.Generator, committed_offset: int = 0) -> dict:
        u = rng.random(n)
        eps = np.full(n, self.spec.epsilon)
        if self._bad is not None:
            xs = sample_inputs(cfg.n, n, rng)
            bad = np.fromiter((self._bad(x) for x in xs), dtype=bool, count=n)
            eps[bad] = self.spec.bad_epsilon
        return self._batch(eps, u, rng)


Schedule = Union[Sequence[float], Callable[[int], float]]


class AdaptiveMismatchAttacker(_SharedThresholdCommits):
    """Mismatch attack whose ``eps_i`` depends on the committed-round index.

    ``schedule`` is a sequence (indices past its end give 0) or a callable of
    the number of previously committed rounds.
    """

    def __init__(self, schedule: Schedule, commit_rate: float = 1.0, p_answer: float = 1.0, p_wrong: Optional[float] = None):
        self.schedule = schedule
        self.commit_rate = commit_rate
        self.commit_rate_hint = max(commit_rate, 1e-9)
        self.p_answer = p_answer
        self.p_wrong = 1.0 - p_answer if p_wrong is None else p_wrong

    def eps_at(self, i: int) -> float:
        if callable(self.schedule):
            e = float(self.schedule(i))
        else:
            e = float(self.schedule[i]) if i < len(self.schedule) else 0.0
        if not 0 <= e <= 1:
            raise ValueError(f"schedule gave eps={e} at index {i}")
        return e

    def _eps(self, ctx_a) -> float:
        return self.eps_at(ctx_a.history.committed)

    def sample_rounds(self, cfg, n: int, rng: np.random.Generator, committed_offset: int = 0) -> dict:
        u = rng.random(n)
        committed = u < self.commit_rate  # someone commits iff Bob does
        index = committed_offset + np.cumsum(committed) - 1
        eps = np.zeros(n)
        sel = np.flatnonzero(committed)
        if sel.size:
            if callable(self.schedule):
                eps[sel] = [self.eps_at(int(i)) for i in index[sel]]
            else:
                table = np.asarray(self.schedule, dtype=float)
                idx = index[sel]
                inside = idx < table.size
                eps[sel[inside]] = table[idx[inside]]
        return self._batch(eps, u, rng)


class AnswerPolicyAttacker(_SharedThresholdCommits):
    """Always-coordinated commits with a fixed answer distribution.

    The answer is correct with probability ``p_correct``, wrong with
    ``p_wrong`` and absent otherwise, which places the attack at the point
    ``(p_correct, 1 - p_correct - p_wrong, p_wrong)`` of the outcome simplex.
    """

    def __init__(self, p_correct: float, p_wrong: Optional[float] = None, commit_rate: float = 1.0):
        self.p_answer = p_correct
        self.p_wrong = 1.0 - p_correct if p_wrong is None else p_wrong
        AbstractAnswer(self.p_answer, self.p_wrong)  # validates
        self.commit_rate = commit_rate
        self.commit_rate_hint = max(commit_rate, 1e-9)

    def _eps(self, ctx_a) -> float:
        return 0.0

    def sample_rounds(self, cfg, n: int, rng: np.random.Generator, committed_offset: int = 0) -> dict:
        return self._batch(np.zeros(n), rng.random(n), rng)


# --- construction from configuration ----------------------------------------------------

STRATEGY_NAMES = ("honest", "basis_guess", "mismatch", "adaptive_mismatch", "answer_policy")


@dataclass(frozen=True)
class StrategySpec:
    """Picklable description of a strategy, built fresh for every trial."""

    name: str
    params: dict = field(default_factory=dict)

    def build(self, dev: Optional[DeviceParams] = None) -> Strategy:
        p = dict(self.params)
        if self.name == "honest":
            return HonestProver(dev or DeviceParams(), **p)
        if self.name == "basis_guess":
            return BasisGuessAttacker(**p)
        if self.name == "mismatch":
            return MismatchAttacker(MismatchAttackSpec(**p))
        if self.name == "adaptive_mismatch":
            return AdaptiveMismatchAttacker(**p)
        if self.name == "answer_policy":
            return AnswerPolicyAttacker(**p)
        raise ValueError(f"unknown strategy {self.name!r}; choose from {STRATEGY_NAMES}")
