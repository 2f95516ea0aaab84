"""Round state machines for the plain and the commit variant.

A round is driven by a strategy object (honest prover or attacker pair, see
:mod:`cqpv.strategies`).  The machine owns the timetable and the quantum
state, hands the strategy :class:`PartyContext` views that expose only what
has physically arrived at that party, and fills in the verdict.

Strategy interface::

    kind: "prover" | "attackers"
    begin_round() -> None
    quantum_step(ctx_a, ctx_b) -> (c_A, c_B)     # when Q arrives; the commit
                                                 # bits are ignored in plain mode
    answer(ctx_a, ctx_b) -> (a_A, a_B)           # bits, None for no answer,
                                                 # or an AbstractAnswer
    observe(record) -> None

For the honest prover both contexts are the same object located at P.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

import numpy as np

from .. import qcore
from .config import ProtocolConfig, Timetable, schedule_round
from .prf import eval_f, sample_input


class CausalityError(RuntimeError):
    """A strategy read information that had not reached it yet."""


class ProtocolOrderError(RuntimeError):
    """Protocol steps were requested out of order."""


class Verdict(str, Enum):
    ACCEPT = "accept"
    WRONG = "wrong"
    LOSS = "loss"
    ABORT_TIMING = "abort_timing"
    ABORT_MISMATCH_ANSWER = "abort_mismatch_answer"
    ABORT_MISMATCH_COMMIT = "abort_mismatch_commit"
    DISCARDED_NO_COMMIT = "discarded_no_commit"


ABORT_VERDICTS = frozenset({Verdict.ABORT_TIMING, Verdict.ABORT_MISMATCH_ANSWER, Verdict.ABORT_MISMATCH_COMMIT})


@dataclass(frozen=True)
class AbstractAnswer:
    """Answer model resolved on the verifier side.

    Both attackers send the same answer; it is correct with probability
    ``p_correct``, wrong with ``p_wrong`` and absent otherwise.  This stands in
    for attacks whose success probability is an input constant rather than
    something derived from an explicit quantum strategy.
    """

    p_correct: float
    p_wrong: float = 0.0

    def __post_init__(self):
        if self.p_correct < 0 or self.p_wrong < 0 or self.p_correct + self.p_wrong > 1 + 1e-12:
            raise ValueError("invalid answer distribution")


@dataclass
class History:
    rounds: int = 0
    committed: int = 0
    accepted: int = 0
    wrong: int = 0
    lost: int = 0

    def update(self, record: "RoundRecord") -> None:
        self.rounds += 1
        if record.counts_as_committed:
            self.committed += 1
        self.accepted += record.verdict is Verdict.ACCEPT
        self.wrong += record.verdict is Verdict.WRONG
        self.lost += record.verdict is Verdict.LOSS


@dataclass
class RoundRecord:
    round_idx: int
    n: int
    x: int
    y: int
    basis: int
    mode: str
    commit_a: Optional[int]
    commit_b: Optional[int]
    answer_a: Optional[int]
    answer_b: Optional[int]
    v: Optional[int]
    verdict: Verdict
    q_arrival: float
    classical_arrival: float
    commit_received: tuple = (None, None)
    answer_received: tuple = (None, None)

    @property
    def answer(self) -> Optional[int]:
        """The common answer, or None when absent or inconsistent."""
        return self.answer_a if self.answer_a == self.answer_b else None

    @property
    def counts_as_committed(self) -> bool:
        if self.mode == "plain":
            return True
        return (self.commit_a, self.commit_b) != (0, 0)

    @property
    def scored(self) -> bool:
        return self.verdict in (Verdict.ACCEPT, Verdict.WRONG, Verdict.LOSS)


class QuantumPort:
    """The EPR pair of one round: qubit 0 stays at V0, qubit 1 travels.

    ``arrived`` is False when the travelling qubit was lost on the way.
    """

    def __init__(self, arrival_time: float, arrived: bool = True):
        phi = qcore.bell_state("phi+")
        self._state = np.outer(phi, phi.conj())
        self.arrival_time = arrival_time
        self.arrived = arrived
        self.measured = False

    def _check(self, ctx: "PartyContext") -> None:
        if not self.arrived:
            raise CausalityError("the quantum input was lost")
        if ctx.now + ctx.tolerance < ctx.arrival("q"):
            raise CausalityError(f"{ctx.role} touched Q before it arrived")
        if self.measured:
            raise ProtocolOrderError("Q was already measured")

    def apply_pauli(self, ctx: "PartyContext", label: str) -> None:
        """Apply a Pauli to the travelling qubit (e.g. a teleportation byproduct)."""
        self._check(ctx)
        op = np.kron(np.eye(2), qcore.PAULI[label])
        self._state = op @ self._state @ op.conj().T

    def measure(self, ctx: "PartyContext", basis: int, m: int, frame: str = "I") -> int:
        self._check(ctx)
        bit, post = qcore.measure_qubit_in_basis(self._state, basis, 1, ctx.rng, m=m, frame=frame)
        self._state = post.data
        self.measured = True
        return bit

    def verifier_measure(self, basis: int, m: int, rng: np.random.Generator) -> int:
        bit, post = qcore.measure_qubit_in_basis(self._state, basis, 0, rng, m=m)
        self._state = post.data
        return bit


class PartyContext:
    """What one party can see at time ``now``."""

    def __init__(
        self,
        role: str,
        position: float,
        now: float,
        cfg: ProtocolConfig,
        timetable: Timetable,
        inputs: dict,
        history: History,
        rng: np.random.Generator,
        port: Optional[QuantumPort],
        scratch: dict,
    ):
        self.role = role
        self.position = position
        self.now = now
        self.cfg = cfg
        self.timetable = timetable
        self._inputs = inputs
        self.history = history
        self.rng = rng
        self.port = port
        self.scratch = scratch  # per-round strategy state

    @property
    def tolerance(self) -> float:
        return self.cfg.geometry.tolerance

    def arrival(self, name: str) -> float:
        return self.timetable.arrival_at(name, self.position, self.cfg.geometry)

    def has(self, name: str) -> bool:
        return self.arrival(name) <= self.now + self.tolerance

    def input(self, name: str) -> int:
        if not self.has(name):
            raise CausalityError(f"{self.role} read {name} at t={self.now:.6g} before its arrival at t={self.arrival(name):.6g}")
        return self._inputs[name]

    @property
    def x(self) -> int:
        return self.input("x")

    @property
    def y(self) -> int:
        return self.input("y")

    def basis(self) -> int:
        """f(x, y); needs both inputs."""
        return eval_f(self.cfg.f_seed, self.x, self.y, self.cfg.m, self.cfg.n)

    def with_time(self, now: float) -> "PartyContext":
        return PartyContext(
            self.role, self.position, now, self.cfg, self.timetable, self._inputs, self.history, self.rng, self.port, self.scratch
        )


@dataclass
class StrategyBundle:
    """A strategy plus the device model of the link it runs over."""

    strategy: Any
    dev: Any = None  # DeviceParams; only the link transmission eta_v is read here
    rng: Optional[np.random.Generator] = None
    history: History = field(default_factory=History)
    scratch: dict = field(default_factory=dict)  # per-round strategy state


def _contexts(cfg, tt, inputs, bundle, rng, port, phase: str):
    g = cfg.geometry
    scratch = bundle.scratch
    if bundle.strategy.kind == "prover":
        now = tt.q_arrival if phase == "commit" else tt.classical_arrival
        now += getattr(bundle.strategy, "processing_time", 0.0)
        ctx = PartyContext("prover", g.p, now, cfg, tt, inputs, bundle.history, rng, port, scratch)
        return ctx, ctx
    expected = tt.commit_expected if phase == "commit" else tt.answer_expected
    now_a = expected[0] - (g.alice - g.v0)
    now_b = expected[1] - (g.v1 - g.bob)
    ca = PartyContext("alice", g.alice, now_a, cfg, tt, inputs, bundle.history, rng, port, scratch)
    cb = PartyContext("bob", g.bob, now_b, cfg, tt, inputs, bundle.history, rng, port, scratch)
    return ca, cb


def _received(cfg, ctx_a, ctx_b):
    g = cfg.geometry
    return (ctx_a.now + (ctx_a.position - g.v0), ctx_b.now + (g.v1 - ctx_b.position))


def _on_time(received, expected, tol) -> bool:
    return all(r <= e + tol for r, e in zip(received, expected))


def _check_bit(value, what):
    if value not in (0, 1):
        raise ProtocolOrderError(f"{what} must be 0 or 1, got {value!r}")
    return int(value)


def _check_answer(value):
    if value is None or isinstance(value, AbstractAnswer):
        return value
    return _check_bit(value, "answer")


def _resolve_answers(a_a, a_b, v, rng):
    if isinstance(a_a, AbstractAnswer) or isinstance(a_b, AbstractAnswer):
        if a_a != a_b:
            raise ProtocolOrderError("abstract answers must be shared by both attackers")
        u = rng.random()
        if u < a_a.p_correct:
            bit = v
        elif u < a_a.p_correct + a_a.p_wrong:
            bit = 1 - v
        else:
            bit = None
        return bit, bit
    return a_a, a_b


def _classify(answer_a, answer_b, v, on_time: bool) -> Verdict:
    if not on_time:
        return Verdict.ABORT_TIMING
    if answer_a != answer_b:
        return Verdict.ABORT_MISMATCH_ANSWER
    if answer_a is None:
        return Verdict.LOSS
    return Verdict.ACCEPT if answer_a == v else Verdict.WRONG


def _start(cfg, bundle, rng, t0):
    tt = schedule_round(cfg, t0)
    x = sample_input(cfg.n, rng)
    y = sample_input(cfg.n, rng)
    if bundle.strategy.kind == "prover":
        eta_v = 1.0 if bundle.dev is None else bundle.dev.eta_v
        arrived = bool(rng.random() < eta_v)
    else:
        # attackers sit next to the verifiers and receive Q without loss
        arrived = True
    port = QuantumPort(tt.q_arrival, arrived)
    bundle.scratch = {}
    bundle.strategy.begin_round()
    return tt, {"x": x, "y": y}, port


def _finish(cfg, bundle, record):
    bundle.history.update(record)
    bundle.strategy.observe(record)
    return record


def run_round_plain(cfg: ProtocolConfig, bundle: StrategyBundle, rng: np.random.Generator, round_idx: int = 0, t0: float = 0.0) -> RoundRecord:
    """One round without a commitment step."""
    if cfg.mode != "plain":
        raise ProtocolOrderError("run_round_plain needs mode='plain'")
    srng = bundle.rng or rng
    tt, inputs, port = _start(cfg, bundle, rng, t0)
    bundle.strategy.quantum_step(*_contexts(cfg, tt, inputs, bundle, srng, port, "commit"))
    ctx_a, ctx_b = _contexts(cfg, tt, inputs, bundle, srng, port, "answer")
    a_a, a_b = (_check_answer(a) for a in bundle.strategy.answer(ctx_a, ctx_b))
    basis = eval_f(cfg.f_seed, inputs["x"], inputs["y"], cfg.m, cfg.n)
    v = port.verifier_measure(basis, cfg.m, rng)
    a_a, a_b = _resolve_answers(a_a, a_b, v, rng)
    received = _received(cfg, ctx_a, ctx_b)
    verdict = _classify(a_a, a_b, v, _on_time(received, tt.answer_expected, cfg.geometry.tolerance))
    record = RoundRecord(
        round_idx, cfg.n, inputs["x"], inputs["y"], basis, "plain", None, None, a_a, a_b, v, verdict,
        tt.q_arrival, tt.classical_arrival, (None, None), received,
    )
    return _finish(cfg, bundle, record)


def run_round_commit(cfg: ProtocolConfig, bundle: StrategyBundle, rng: np.random.Generator, round_idx: int = 0, t0: float = 0.0) -> RoundRecord:
    """One round with the commitment step before the classical inputs."""
    if cfg.mode != "commit":
        raise ProtocolOrderError("run_round_commit needs mode='commit'")
    srng = bundle.rng or rng
    tol = cfg.geometry.tolerance
    tt, inputs, port = _start(cfg, bundle, rng, t0)
    basis = eval_f(cfg.f_seed, inputs["x"], inputs["y"], cfg.m, cfg.n)

    ctx_a, ctx_b = _contexts(cfg, tt, inputs, bundle, srng, port, "commit")
    c_a, c_b = (_check_bit(c, "commit") for c in bundle.strategy.quantum_step(ctx_a, ctx_b))
    commit_received = _received(cfg, ctx_a, ctx_b)
    commit_on_time = _on_time(commit_received, tt.commit_expected, tol)

    def record(verdict, a_a=None, a_b=None, v=None, answer_received=(None, None)):
        return RoundRecord(
            round_idx, cfg.n, inputs["x"], inputs["y"], basis, "commit", c_a, c_b, a_a, a_b, v, verdict,
            tt.q_arrival, tt.classical_arrival, commit_received, answer_received,
        )

    if not commit_on_time and (c_a, c_b) != (0, 0):
        return _finish(cfg, bundle, record(Verdict.ABORT_TIMING))
    if c_a != c_b:
        return _finish(cfg, bundle, record(Verdict.ABORT_MISMATCH_COMMIT))

    ctx_a, ctx_b = _contexts(cfg, tt, inputs, bundle, srng, port, "answer")
    a_a, a_b = (_check_answer(a) for a in bundle.strategy.answer(ctx_a, ctx_b))
    answer_received = _received(cfg, ctx_a, ctx_b)
    if c_a == 0:
        if a_a is not None or a_b is not None:
            raise ProtocolOrderError("answer sent for a round that was not committed")
        return _finish(cfg, bundle, record(Verdict.DISCARDED_NO_COMMIT))
    v = port.verifier_measure(basis, cfg.m, rng)
    a_a, a_b = _resolve_answers(a_a, a_b, v, rng)
    verdict = _classify(a_a, a_b, v, _on_time(answer_received, tt.answer_expected, tol))
    return _finish(cfg, bundle, record(verdict, a_a, a_b, v, answer_received))


def run_round(cfg: ProtocolConfig, bundle: StrategyBundle, rng: np.random.Generator, round_idx: int = 0, t0: float = 0.0) -> RoundRecord:
    fn = run_round_commit if cfg.mode == "commit" else run_round_plain
    return fn(cfg, bundle, rng, round_idx, t0)
