import csv
import io

import numpy as np
import pytest

from cqpv.devices import DeviceParams
from cqpv.protocol import (
    CSV_COLUMNS,
    AbstractAnswer,
    CausalityError,
    ConfigError,
    Geometry,
    InputLengthError,
    ProtocolConfig,
    ProtocolOrderError,
    StopRule,
    StrategyBundle,
    Verdict,
    eval_f,
    eval_f_many,
    run_round,
    run_round_commit,
    run_round_plain,
    run_sequential,
    run_sequential_fast,
    schedule_round,
    transcripts_to_csv,
)
from cqpv.protocol.prf import sample_inputs
from cqpv.strategies import BasisGuessAttacker, HonestProver, MismatchAttacker, MismatchAttackSpec, Strategy


def within(p_hat, p, n, k=3.0):
    return abs(p_hat - p) <= k * np.sqrt(max(p * (1 - p), 1e-300) / n) + 1e-12


# --- keyed basis function ---------------------------------------------------------


def test_eval_f_deterministic():
    assert eval_f(7, 0b1011, 0b0110, 2, 4) == eval_f(7, 0b1011, 0b0110, 2, 4)
    assert eval_f(7, [1, 0, 1, 1], [0, 1, 1, 0], 5) == eval_f(7, 0b1011, 0b0110, 5, 4)
    assert 0 <= eval_f(3, 1, 2, 5, 4) < 5


def test_eval_f_length_mismatch():
    with pytest.raises(InputLengthError):
        eval_f(0, [1, 0, 1], [1, 0], 2)
    with pytest.raises(InputLengthError):
        eval_f(0, 1 << 9, 1, 2, n=8)


def test_eval_f_uniform():
    rng = np.random.default_rng(0)
    count = 100_000
    xs = sample_inputs(32, count, rng)
    ys = sample_inputs(32, count, rng)
    f = eval_f_many(11, xs, ys, 2, 32)
    assert within(f.mean(), 0.5, count)


def test_eval_f_avalanche():
    rng = np.random.default_rng(1)
    count, m = 10_000, 3
    xs = sample_inputs(16, count, rng)
    ys = sample_inputs(16, count, rng)
    bits = rng.integers(0, 16, size=count)
    flipped = [x ^ (1 << int(b)) for x, b in zip(xs, bits)]
    agree = (eval_f_many(5, xs, ys, m, 16) == eval_f_many(5, flipped, ys, m, 16)).mean()
    assert within(agree, 1 / m, count)


# --- timetable -------------------------------------------------------------------


def test_schedule_plain_symmetric():
    tt = schedule_round(ProtocolConfig(mode="plain", delay=0.0), t0=0.0)
    assert tt.x_send == 0.0 and tt.q_send == 0.0
    assert tt.q_arrival == 1.0 and tt.classical_arrival == 1.0
    assert tt.answer_expected == (2.0, 2.0)


def test_schedule_slow_quantum():
    cfg = ProtocolConfig(mode="plain", delay=0.0, geometry=Geometry(quantum_speed=0.5))
    tt = schedule_round(cfg, t0=0.0)
    assert abs(tt.q_send - (-1.0)) < 1e-12
    assert abs(tt.q_arrival - tt.classical_arrival) < 1e-12


def test_schedule_commit_delay():
    tt = schedule_round(ProtocolConfig(mode="commit", delay=0.1), t0=5.0)
    t_q = tt.q_arrival
    assert abs(tt.classical_arrival - t_q - 0.1) < 1e-12
    assert abs(tt.commit_expected[0] - (t_q + 1)) < 1e-12
    assert abs(tt.answer_expected[0] - (t_q + 0.1 + 1)) < 1e-12
    assert abs(tt.y_send - (tt.classical_arrival - 1)) < 1e-12


def test_config_validation():
    with pytest.raises(ConfigError):
        ProtocolConfig(mode="commit", delay=0.0)
    with pytest.raises(ConfigError):
        ProtocolConfig(m=1)
    with pytest.raises(ConfigError):
        Geometry(v0=0, p=3, v1=2)


# --- single rounds -----------------------------------------------------------------


def test_plain_honest_noiseless():
    cfg = ProtocolConfig(mode="plain", delay=0.0, m=3)
    bundle = StrategyBundle(HonestProver(DeviceParams()), DeviceParams())
    rng = np.random.default_rng(2)
    for i in range(300):
        rec = run_round_plain(cfg, bundle, rng, i)
        assert rec.verdict is Verdict.ACCEPT
        assert rec.answer == rec.v


def test_plain_honest_link_loss():
    cfg = ProtocolConfig(mode="plain", delay=0.0)
    dev = DeviceParams(eta_v=0.5)
    bundle = StrategyBundle(HonestProver(dev), dev)
    rng = np.random.default_rng(3)
    n = 20_000
    lost = sum(run_round_plain(cfg, bundle, rng, i).verdict is Verdict.LOSS for i in range(n))
    assert within(lost / n, 0.5, n)
    # the batch engine over the full 10^5 rounds
    s = run_sequential_fast(cfg, HonestProver(dev), StopRule(100_000), np.random.default_rng(4))
    assert within(s.counts["loss"] / s.total_rounds, 0.5, s.total_rounds)
    assert s.counts["accept"] + s.counts["loss"] == s.total_rounds


def test_plain_basis_guess():
    cfg = ProtocolConfig(mode="plain", delay=0.0)
    bundle = StrategyBundle(BasisGuessAttacker())
    rng = np.random.default_rng(5)
    recs = [run_round_plain(cfg, bundle, rng, i) for i in range(5000)]
    answered = [r for r in recs if r.answer is not None]
    assert within(len(answered) / len(recs), 0.5, len(recs))
    assert all(r.answer == r.v for r in answered)
    assert all(r.verdict in (Verdict.ACCEPT, Verdict.LOSS) for r in recs)


def test_commit_honest():
    cfg = ProtocolConfig(mode="commit")
    rng = np.random.default_rng(6)
    ok = StrategyBundle(HonestProver(DeviceParams()), DeviceParams())
    for i in range(200):
        rec = run_round_commit(cfg, ok, rng, i)
        assert (rec.commit_a, rec.commit_b) == (1, 1)
        assert rec.verdict is Verdict.ACCEPT and rec.answer == rec.v
        assert rec.commit_received[0] < rec.answer_received[0]
    dead = DeviceParams(eta_det_qnd=0.0)
    bundle = StrategyBundle(HonestProver(dead), dead)
    for i in range(50):
        rec = run_round_commit(cfg, bundle, rng, i)
        assert (rec.commit_a, rec.commit_b) == (0, 0)
        assert rec.verdict is Verdict.DISCARDED_NO_COMMIT


def test_commit_mismatch_frequency():
    cfg = ProtocolConfig(mode="commit")
    bundle = StrategyBundle(MismatchAttacker(MismatchAttackSpec(epsilon=0.05, commit_rate=0.5)))
    rng = np.random.default_rng(7)
    recs = [run_round_commit(cfg, bundle, rng, i) for i in range(20_000)]
    played = [r for r in recs if r.counts_as_committed]
    aborted = sum(r.verdict is Verdict.ABORT_MISMATCH_COMMIT for r in played)
    assert within(aborted / len(played), 0.05, len(played))
    assert all(r.verdict is not Verdict.ABORT_MISMATCH_COMMIT for r in recs if not r.counts_as_committed)


class _PeekX(Strategy):
    kind = "prover"

    def quantum_step(self, ctx, _):
        _ = ctx.x
        return 1, 1

    def answer(self, ctx, _):
        return 0, 0


class _EarlyBasis(Strategy):
    def quantum_step(self, ctx_a, ctx_b):
        ctx_a.basis()
        return 1, 1

    def answer(self, ctx_a, ctx_b):
        return None, None


class _Chatty(Strategy):
    def quantum_step(self, ctx_a, ctx_b):
        return 0, 0

    def answer(self, ctx_a, ctx_b):
        return 1, 1


class _Split(Strategy):
    def quantum_step(self, ctx_a, ctx_b):
        return 1, 1

    def answer(self, ctx_a, ctx_b):
        return 0, 1


def test_causality_errors():
    rng = np.random.default_rng(8)
    cfg = ProtocolConfig(mode="commit")
    with pytest.raises(CausalityError):
        run_round(cfg, StrategyBundle(_PeekX()), rng)
    with pytest.raises(CausalityError):
        run_round(cfg, StrategyBundle(_EarlyBasis()), rng)


def test_protocol_order_error():
    rng = np.random.default_rng(9)
    with pytest.raises(ProtocolOrderError):
        run_round_commit(ProtocolConfig(mode="commit"), StrategyBundle(_Chatty()), rng)
    with pytest.raises(ProtocolOrderError):
        run_round_plain(ProtocolConfig(mode="commit"), StrategyBundle(_Chatty()), rng)


def test_answer_mismatch_and_timing_aborts():
    rng = np.random.default_rng(10)
    cfg = ProtocolConfig(mode="commit")
    assert run_round(cfg, StrategyBundle(_Split()), rng).verdict is Verdict.ABORT_MISMATCH_ANSWER
    slow = HonestProver(DeviceParams(), processing_time=0.5)
    assert run_round(cfg, StrategyBundle(slow, DeviceParams()), rng).verdict is Verdict.ABORT_TIMING
    # a small slack inside the tolerance is fine
    quick = HonestProver(DeviceParams(), processing_time=1e-12)
    assert run_round(cfg, StrategyBundle(quick, DeviceParams()), rng).verdict is Verdict.ACCEPT


def test_abstract_answer_validation():
    with pytest.raises(ValueError):
        AbstractAnswer(0.8, 0.3)


# --- sequential runs ----------------------------------------------------------------


def test_expected_total_rounds():
    cfg = ProtocolConfig(mode="commit", r=100)
    dev = DeviceParams(eta_v=0.1)
    trials = 1000
    rng = np.random.default_rng(11)
    totals = np.array([run_sequential_fast(cfg, HonestProver(dev), rng=rng).total_rounds for _ in range(trials)])
    sd = np.sqrt(100 * 0.9) / 0.1 / np.sqrt(trials)
    assert abs(totals.mean() - 1000) <= 3 * sd


def test_sequential_honest_no_aborts():
    cfg = ProtocolConfig(mode="commit", r=50)
    dev = DeviceParams(eta_v=0.3)
    tr = run_sequential(cfg, StrategyBundle(HonestProver(dev), dev), rng=np.random.default_rng(12))
    s = tr.summary()
    assert s.status == "complete" and not s.aborted
    assert s.committed == 50 == s.counts["accept"]
    assert sum(s.counts.values()) == s.total_rounds == len(tr.records)
    assert tr.records[-1].counts_as_committed


def test_sequential_inconclusive():
    cfg = ProtocolConfig(mode="commit", r=50, max_rounds=20)
    dev = DeviceParams(eta_v=0.1)
    tr = run_sequential(cfg, StrategyBundle(HonestProver(dev), dev), rng=np.random.default_rng(13))
    assert tr.status == "inconclusive" and len(tr.records) == 20
    s = run_sequential_fast(cfg, HonestProver(dev), rng=np.random.default_rng(13))
    assert s.status == "inconclusive" and s.total_rounds == 20


def test_sequential_stops_on_abort():
    cfg = ProtocolConfig(mode="commit", r=10_000)
    attack = MismatchAttacker(MismatchAttackSpec(epsilon=0.05))
    tr = run_sequential(cfg, StrategyBundle(attack), rng=np.random.default_rng(14))
    assert tr.status == "aborted"
    assert tr.records[-1].verdict is Verdict.ABORT_MISMATCH_COMMIT
    assert all(r.verdict is Verdict.ACCEPT for r in tr.records[:-1])
    assert tr.summary().abort_reason == "abort_mismatch_commit"


def test_replay_determinism_and_csv():
    cfg = ProtocolConfig(mode="commit", r=30, n=12)
    dev = DeviceParams(eta_v=0.4)

    def once():
        return run_sequential(cfg, StrategyBundle(HonestProver(dev), dev), rng=np.random.default_rng(15), trial_id=3)

    a, b = once(), once()
    text = transcripts_to_csv([a])
    assert text == transcripts_to_csv([b])
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 1 + len(a.records)
    assert all(len(r[2]) == 3 for r in rows[1:])  # 12 bits -> 3 hex digits
    verdicts = {r[8] for r in rows[1:]}
    assert verdicts <= {"accept", "discarded_no_commit"}
    assert {r[6] for r in rows[1:] if r[8] == "discarded_no_commit"} == {"bot"}


def test_counts_match_records():
    cfg = ProtocolConfig(mode="plain", delay=0.0, r=200)
    tr = run_sequential(cfg, StrategyBundle(BasisGuessAttacker()), rng=np.random.default_rng(16))
    counts = tr.counts
    for v in Verdict:
        assert counts[v.value] == sum(r.verdict is v for r in tr.records)
    assert sum(counts.values()) == len(tr.records)
