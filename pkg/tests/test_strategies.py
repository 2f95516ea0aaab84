import math

import numpy as np
import pytest

from cqpv.devices import DeviceParams
from cqpv.protocol import ProtocolConfig, StopRule, StrategyBundle, Verdict, run_sequential, run_sequential_fast
from cqpv.strategies import (
    AdaptiveMismatchAttacker,
    AnswerPolicyAttacker,
    BasisGuessAttacker,
    HonestProver,
    MismatchAttacker,
    MismatchAttackSpec,
    StrategySpec,
    bad_x_predicate,
)


def within(p_hat, p, n, k=3.0):
    return abs(p_hat - p) <= k * np.sqrt(max(p * (1 - p), 1e-300) / n) + 1e-12


COMMIT = ProtocolConfig(mode="commit")


def batch(strategy, n, seed, cfg=COMMIT):
    return strategy.sample_rounds(cfg, n, np.random.default_rng(seed))


def detection_rate(strategy_factory, target, trials, seed, cfg=COMMIT):
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(trials):
        s = run_sequential_fast(cfg, strategy_factory(), StopRule(target), rng)
        hits += s.counts["abort_mismatch_commit"] > 0
    return hits / trials


# --- honest prover -------------------------------------------------------------------


def test_honest_perfect_all_accept():
    tr = run_sequential(
        ProtocolConfig(mode="commit", r=200), StrategyBundle(HonestProver(DeviceParams()), DeviceParams()),
        rng=np.random.default_rng(0),
    )
    assert tr.counts["accept"] == 200 == len(tr.records)


def test_honest_error_rate():
    b = batch(HonestProver(DeviceParams(), p_err=0.05), 200_000, 1)
    committed = b["c_a"] == 1
    wrong = (b["a_a"] != b["v"])[committed].mean()
    assert within(wrong, 0.05, committed.sum())
    # the round-by-round path agrees
    tr = run_sequential(
        ProtocolConfig(mode="commit", r=5000), StrategyBundle(HonestProver(DeviceParams(), p_err=0.05), DeviceParams()),
        rng=np.random.default_rng(2),
    )
    assert within(tr.counts["wrong"] / 5000, 0.05, 5000)


def test_honest_delay_loss():
    dev = DeviceParams(delay_survival=0.9)
    b = batch(HonestProver(dev), 200_000, 3)
    committed = b["c_a"] == 1
    assert committed.all()
    lost = (b["a_a"] == -1)[committed].mean()
    assert within(lost, 0.1, committed.sum())


def test_honest_commit_rate():
    dev = DeviceParams(eta_v=0.2, eta_det_qnd=0.5)
    b = batch(HonestProver(dev), 200_000, 4)
    assert within((b["c_a"] == 1).mean(), dev.p_commit(), b["c_a"].size)


# --- basis guess ------------------------------------------------------------------------


def test_basis_guess_rates():
    for m in (2, 3):
        cfg = ProtocolConfig(mode="plain", delay=0.0, m=m)
        b = batch(BasisGuessAttacker(), 100_000, 5 + m, cfg)
        answered = b["a_a"] != -1
        assert within(answered.mean(), 1 / m, answered.size)
        assert (b["a_a"][answered] == b["v"][answered]).all()


def test_basis_guess_scalar_m3():
    cfg = ProtocolConfig(mode="plain", delay=0.0, m=3, r=3000)
    tr = run_sequential(cfg, StrategyBundle(BasisGuessAttacker()), rng=np.random.default_rng(8))
    answered = [r for r in tr.records if r.answer is not None]
    assert within(len(answered) / 3000, 1 / 3, 3000)
    assert all(r.answer == r.v for r in answered)


def test_basis_guess_commit_mode_bottom_rate():
    b = batch(BasisGuessAttacker(), 100_000, 9)
    assert (b["c_a"] == b["c_b"]).all()
    lost = (b["a_a"] == -1).mean()
    assert within(lost, 0.5, b["a_a"].size)


# --- non-adaptive mismatch -----------------------------------------------------------------


def test_mismatch_zero_never_aborts():
    rng = np.random.default_rng(10)
    for _ in range(200):
        s = run_sequential_fast(COMMIT, MismatchAttacker(MismatchAttackSpec(epsilon=0.0, commit_rate=0.3)), StopRule(500), rng)
        assert not s.aborted and s.counts["abort_mismatch_commit"] == 0


def test_mismatch_zero_matches_always_commit():
    a = batch(MismatchAttacker(MismatchAttackSpec(epsilon=0.0)), 10_000, 11)
    b = batch(AnswerPolicyAttacker(1.0), 10_000, 11)
    assert (a["c_a"] == 1).all() and (a["c_b"] == 1).all()
    assert (b["c_a"] == 1).all() and (b["c_b"] == 1).all()


def test_mismatch_conditional_rate():
    b = batch(MismatchAttacker(MismatchAttackSpec(epsilon=0.05, commit_rate=0.4)), 400_000, 12)
    played = (b["c_a"] == 1) | (b["c_b"] == 1)
    mism = (b["c_a"] != b["c_b"])[played].mean()
    assert within(mism, 0.05, played.sum())
    assert within(played.mean(), 0.4, played.size)


def test_mismatch_400_rounds_detected():
    p = 1 - 0.95**400
    assert abs(p - (1 - 1.22e-9)) < 1e-11
    rate = detection_rate(lambda: MismatchAttacker(MismatchAttackSpec(epsilon=0.05)), 400, 10_000, 13)
    assert rate == 1.0


def test_mismatch_scaled_budget():
    rate = detection_rate(lambda: MismatchAttacker(MismatchAttackSpec(epsilon=0.01)), 500, 10_000, 14)
    assert rate >= 1 - math.exp(-5) - 0.01
    assert within(rate, 1 - 0.99**500, 10_000)


def test_bad_set():
    bad = bad_x_predicate(3, 0.25)
    frac = np.mean([bad(x) for x in range(1 << 14)])
    assert within(frac, 0.25, 1 << 14)
    spec = MismatchAttackSpec(epsilon=0.0, bad_fraction=0.25, bad_epsilon=1.0, bad_seed=3)
    cfg = ProtocolConfig(mode="commit", n=14)
    b = batch(MismatchAttacker(spec), 100_000, 15, cfg)
    assert within((b["c_a"] != b["c_b"]).mean(), 0.25, 100_000)
    with pytest.raises(ValueError):
        MismatchAttackSpec(bad_fraction=0.6)


# --- adaptive mismatch ---------------------------------------------------------------------------


def test_adaptive_zero_schedule():
    rng = np.random.default_rng(16)
    for _ in range(200):
        s = run_sequential_fast(COMMIT, AdaptiveMismatchAttacker([0.0] * 300, commit_rate=0.5), StopRule(300), rng)
        assert not s.aborted


def test_adaptive_front_loaded():
    r, alpha, trials = 200, 0.01, 10_000
    schedule = [alpha] * (r // 2) + [0.0] * (r // 2)
    rate = detection_rate(lambda: AdaptiveMismatchAttacker(schedule, commit_rate=0.5), r, trials, 17)
    assert within(rate, 1 - (1 - alpha) ** (r // 2), trials)


def test_adaptive_log_budget():
    # sum of eps equal to ln(1/delta): the undetected frequency follows the
    # product formula and cannot exceed delta
    delta, r, trials = 0.1, 100, 20_000
    eps = np.full(r, math.log(1 / delta) / r)
    assert abs(eps.sum() - math.log(1 / delta)) < 1e-12
    undetected = 1 - detection_rate(lambda: AdaptiveMismatchAttacker(eps), r, trials, 18)
    product = float(np.prod(1 - eps))
    assert product <= delta
    assert within(undetected, product, trials)
    assert undetected <= delta + 3 * math.sqrt(delta * (1 - delta) / trials)
    # a schedule that keeps the undetected probability at delta spends at most ln(1/delta)
    eps_exact = np.full(r, 1 - delta ** (1 / r))
    assert abs(np.prod(1 - eps_exact) - delta) < 1e-12
    assert eps_exact.sum() <= math.log(1 / delta)


def test_adaptive_callable_and_history():
    attacker = AdaptiveMismatchAttacker(lambda i: 1.0 if i == 7 else 0.0)
    tr = run_sequential(ProtocolConfig(mode="commit", r=20), StrategyBundle(attacker), rng=np.random.default_rng(19))
    assert tr.status == "aborted" and len(tr.records) == 8
    s = run_sequential_fast(ProtocolConfig(mode="commit", r=20), attacker, rng=np.random.default_rng(19), chunk=3)
    assert s.aborted and s.committed == 8


# --- engines agree ----------------------------------------------------------------------------------


def test_engines_agree():
    cfg = ProtocolConfig(mode="commit", r=40)
    trials = 400

    def factory():
        return MismatchAttacker(MismatchAttackSpec(epsilon=0.02, commit_rate=0.5, p_answer=0.7, p_wrong=0.1))

    rng = np.random.default_rng(20)
    slow = [run_sequential(cfg, StrategyBundle(factory()), rng=rng).summary() for _ in range(trials)]
    fast = [run_sequential_fast(cfg, factory(), rng=rng) for _ in range(trials)]
    for key in ("accept", "loss", "wrong", "discarded_no_commit"):
        a = np.array([s.counts[key] for s in slow], float)
        b = np.array([s.counts[key] for s in fast], float)
        se = math.sqrt(a.var() / trials + b.var() / trials) + 1e-9
        assert abs(a.mean() - b.mean()) <= 4 * se, key
    det_a = np.mean([s.aborted for s in slow])
    det_b = np.mean([s.aborted for s in fast])
    assert abs(det_a - det_b) <= 4 * math.sqrt(2 * 0.55 * 0.45 / trials)


def test_strategy_spec_build():
    assert isinstance(StrategySpec("honest", {"p_err": 0.1}).build(DeviceParams()), HonestProver)
    assert isinstance(StrategySpec("mismatch", {"epsilon": 0.1}).build(), MismatchAttacker)
    assert isinstance(StrategySpec("adaptive_mismatch", {"schedule": [0.1]}).build(), AdaptiveMismatchAttacker)
    with pytest.raises(ValueError):
        StrategySpec("teleport").build()


def test_answer_policy_distribution():
    b = batch(AnswerPolicyAttacker(0.6, 0.1), 200_000, 21)
    correct = (b["a_a"] == b["v"]).mean()
    wrong = ((b["a_a"] != b["v"]) & (b["a_a"] != -1)).mean()
    assert within(correct, 0.6, 200_000) and within(wrong, 0.1, 200_000)
