"""Acceptance criteria, one test per criterion (criterion 5 has two parts).

Each test records its outcome through the ``acceptance`` fixture; the run
ends with one PASS/FAIL line per criterion.
"""

import math
import time

import numpy as np

from cqpv.cli import execute
from cqpv.devices import DeviceParams, bsm_conclusive_probability, empirical_eta_p
from cqpv.estimate import eta_p_formula, fiber_length, protocol_duration
from cqpv.lemma_checks import (
    check_gentle_measurement,
    check_instrument_decomposition,
    check_paths_between_strings,
    gentle_saturation_error,
)
from cqpv.protocol import ProtocolConfig, StopRule, StrategyBundle, run_sequential, run_sequential_fast
from cqpv.rng import STREAM_LEMMAS, trial_rng
from cqpv.stats import wilson_interval
from cqpv.strategies import AnswerPolicyAttacker, BasisGuessAttacker, HonestProver, MismatchAttacker, MismatchAttackSpec
from cqpv.verdict import (
    BoundParams,
    attacker_score_ceiling,
    check_edge_removal,
    chernoff_accept_floor,
    decide,
    detection_probability_nonadaptive,
)

SEED = 20240611


def sigma(p, n):
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def test_criterion_01_gentle_measurement(acceptance):
    t0 = time.perf_counter()
    rep = check_gentle_measurement(10_000, trial_rng(SEED, 1, STREAM_LEMMAS), dims=(2, 8))
    seconds = time.perf_counter() - t0
    sat = gentle_saturation_error()
    ok = rep.instances >= 10_000 and rep.violations == 0 and sat <= 1e-10 and seconds < 10
    acceptance(1, "gentle bound", ok, f"{rep.instances} instances, {rep.violations} violations, saturation err {sat:.1e}, {seconds:.1f}s")
    assert rep.instances >= 10_000 and rep.violations == 0
    assert sat <= 1e-10
    assert seconds < 10


def test_criterion_02_instrument_decomposition(acceptance):
    t0 = time.perf_counter()
    rep = check_instrument_decomposition(1_000, trial_rng(SEED, 2, STREAM_LEMMAS))
    seconds = time.perf_counter() - t0
    ok = rep.instances >= 1_000 and rep.violations == 0 and rep.worst <= 1e-10 and seconds < 30
    acceptance(2, "decomposition", ok, f"{rep.instances} instruments, worst {rep.worst:.1e}, {seconds:.1f}s")
    assert rep.instances >= 1_000 and rep.violations == 0
    assert rep.worst <= 1e-10
    assert seconds < 30


def test_criterion_03_paths_between_strings(acceptance):
    rep = check_paths_between_strings(1_000, trial_rng(SEED, 3, STREAM_LEMMAS))
    ok = rep.instances >= 1_000 and rep.violations == 0
    acceptance(3, "8 sqrt(eps) bound", ok, f"{rep.instances} instances, {rep.violations} violations")
    assert ok


def test_criterion_04_edge_removal(acceptance):
    rng = trial_rng(SEED, 4, STREAM_LEMMAS)
    reports = []
    for c in (1 / 8, 1 / 4, 1 / 2):
        reports.append(check_edge_removal(1, c))
        for n in (2, 3):
            reports.append(check_edge_removal(n, c, samples=1_000, rng=rng))
    instances = sum(r.instances for r in reports)
    violations = sum(r.violations for r in reports)
    acceptance(4, "reach bound", violations == 0, f"{instances} removal sets, {violations} violations")
    assert violations == 0


def _detection(alpha: float, target: int, trials: int, rng) -> float:
    cfg = ProtocolConfig(mode="commit", r=target)
    hits = 0
    for _ in range(trials):
        s = run_sequential_fast(cfg, MismatchAttacker(MismatchAttackSpec(epsilon=alpha)), StopRule(target), rng)
        hits += s.counts["abort_mismatch_commit"] > 0
    return hits / trials


def test_criterion_05_detection_monte_carlo(acceptance):
    r, trials = 5, 10_000
    need = 1 - math.exp(-r) - 0.01
    rng = np.random.default_rng(SEED + 5)
    rates = {a: _detection(a, round(r / a), trials, rng) for a in (0.01, 0.02, 0.05)}
    ok = all(v >= need for v in rates.values())
    acceptance(5, "Monte Carlo r=5", ok, ", ".join(f"alpha={a}: {v:.4f}" for a, v in rates.items()) + f" >= {need:.4f}")
    assert ok


def test_criterion_05_detection_analytic_r20(acceptance):
    need = 1 - 1e-9
    values = {a: detection_probability_nonadaptive(a, 20 / a)[0] for a in (0.01, 0.02, 0.05)}
    ok = all(v >= need for v in values.values())
    acceptance(5, "analytic r=20", ok, ", ".join(f"alpha={a}: 1-{1 - v:.2e}" for a, v in values.items()) + " vs 1-1e-9")
    assert ok


def test_criterion_06_honest_floor(acceptance):
    p_err, p_b, delta, r, trials = 0.05, 0.8, 0.5, 2000, 10_000
    params = BoundParams(p_b, p_err=p_err, delta_margin=delta)
    floor = 1 - math.exp(-2000 * 0.25 * 0.0225)
    assert abs(params.mu - 0.15) < 1e-12
    assert abs(chernoff_accept_floor(params.mu, delta, r) - floor) < 1e-15
    cfg = ProtocolConfig(mode="commit", r=r)
    rng = np.random.default_rng(SEED + 6)
    t0 = time.perf_counter()
    accepted = 0
    for _ in range(trials):
        s = run_sequential_fast(cfg, HonestProver(DeviceParams(), p_err=p_err), StopRule(r), rng)
        accepted += decide(s, params).accept
    seconds = time.perf_counter() - t0
    rate = accepted / trials
    _, hi = wilson_interval(accepted, trials, z=3.0)
    ok = hi >= floor and seconds < 120
    acceptance(6, "accept floor", ok, f"accept {rate:.5f} (Wilson hi {hi:.5f}) vs floor {floor:.6f}, {seconds:.1f}s")
    assert hi >= floor
    assert seconds < 120


def test_criterion_07_attacker_ceiling(acceptance):
    r, trials = 2000, 2000
    cfg = ProtocolConfig(mode="commit", r=r)
    rng = np.random.default_rng(SEED + 7)
    worst_gap = -math.inf
    cells = 0
    for p_b in (0.6, 0.7, 0.8):
        for delta in (0.3, 0.5, 0.7):
            mu = BoundParams(p_b, delta_margin=delta).mu
            ceiling = attacker_score_ceiling(mu, delta, r).value
            assert abs(ceiling - math.exp(-(r / 2) * (mu * (1 - delta)) ** 2)) < 1e-15
            # every round answered: abstentions are the loss-rate test's job
            for policy in ((p_b, 1 - p_b), (p_b - 0.05, 1 - p_b + 0.05), (p_b - 0.1, 1 - p_b + 0.1)):
                hits = 0
                for _ in range(trials):
                    s = run_sequential_fast(cfg, AnswerPolicyAttacker(*policy), StopRule(r), rng)
                    c, _, w = s.scored
                    hits += (1 - p_b) * c - p_b * w >= r * mu * (1 - delta)
                gap = hits / trials - ceiling - 3 * max(sigma(ceiling, trials), 1 / trials)
                worst_gap = max(worst_gap, gap)
                cells += 1
    ok = worst_gap <= 0
    acceptance(7, "score ceiling", ok, f"{cells} (mu, delta, policy) cells, worst excess {worst_gap:.4f}")
    assert ok


def test_criterion_08_basis_guess(acceptance):
    rounds = 100_000
    cfg = ProtocolConfig(mode="plain", delay=0.0, m=2, r=rounds)
    tr = run_sequential(cfg, StrategyBundle(BasisGuessAttacker()), rng=np.random.default_rng(SEED + 8))
    answered = [rec for rec in tr.records if rec.answer is not None]
    rate = len(answered) / len(tr.records)
    correct = sum(rec.answer == rec.v for rec in answered) / len(answered)
    plain_ok = len(tr.records) == rounds and abs(rate - 0.5) <= 3 * sigma(0.5, rounds) and correct == 1.0
    acceptance(8, "plain m=2", plain_ok, f"answer rate {rate:.4f}, conditional correctness {correct}")

    params = BoundParams(0.5, eta_p=0.9)
    ccfg = ProtocolConfig(mode="commit", r=100)
    rng = np.random.default_rng(SEED + 80)
    trials = 1_000
    rejects = sum(not decide(run_sequential_fast(ccfg, BasisGuessAttacker(), rng=rng), params).accept for _ in range(trials))
    commit_ok = rejects / trials >= 0.99
    acceptance(8, "commit eta_P=0.9", commit_ok, f"rejected {rejects}/{trials}")
    assert plain_ok and commit_ok


def test_criterion_09_eta_p_consistency(acceptance):
    rng = np.random.default_rng(SEED + 9)
    worst = 0.0
    points = 0
    for eta_v in (1e-3, 1e-2, 0.05, 0.2, 0.8):
        for p_dc_qnd in (0.0, 1e-3, 1e-2, 0.05, 0.2):
            dev = DeviceParams(eta_v=eta_v, eta_det_qnd=0.8, p_dc_qnd=p_dc_qnd, eta_det=0.7, p_dc=0.01)
            est = empirical_eta_p(dev, 1_000_000, rng)
            closed = dev.eta_p()
            worst = max(worst, abs(est.eta_p - closed) / est.se_eta_p)
            points += 1
    grid_ok = points == 25 and worst <= 3
    acceptance(9, "25-point grid", grid_ok, f"worst deviation {worst:.2f} standard errors")

    low_v = abs(eta_p_formula(0.0, 0.7, 0.8, 0.01, 1e-3) - 0.01)
    tiny_v = abs(eta_p_formula(1e-15, 0.7, 0.8, 0.01, 1e-3) - 0.01)
    no_dark = max(abs(eta_p_formula(v, 0.63, 0.8, 0.0, 0.0) - 0.63) for v in (1e-6, 0.1, 1.0))
    limits_ok = low_v < 1e-15 and tiny_v < 1e-9 and no_dark == 0.0
    acceptance(9, "limits", limits_ok, f"eta_V->0 err {max(low_v, tiny_v):.1e}, zero-dark err {no_dark:.1e}")
    assert grid_ok and limits_ok


def test_criterion_10_engineering_numbers(acceptance):
    length = fiber_length(0.14, 10, 1e-7)
    duration = protocol_duration(2, 1.0, 1e6, "S3")
    ceiling = bsm_conclusive_probability(True, 1.0, 0.0)
    ok = 400 <= length <= 450 and abs(duration - 5.12e-3) < 1e-18 and ceiling == 0.5
    acceptance(10, "numbers", ok, f"L={length:.2f} km, duration={duration * 1e3:.4f} ms, BSM ceiling={ceiling}")
    assert 400 <= length <= 450
    assert abs(duration - 5.12e-3) < 1e-18
    assert ceiling == 0.5


def test_criterion_11_determinism(acceptance):
    data = {
        "seed": SEED,
        "trials": 200,
        "protocol": {"mode": "commit", "r": 300},
        "strategy": {"name": "mismatch", "params": {"epsilon": 0.005, "commit_rate": 0.5, "p_answer": 0.8}},
    }
    serial, code_a = execute(data, "simulate", workers=1)
    parallel, code_b = execute(data, "simulate", workers=8)
    again, _ = execute(data, "simulate", workers=1)
    ok = serial["summary"] == parallel["summary"] == again["summary"] and code_a == code_b
    acceptance(11, "serial vs 8 workers", ok, f"accept rate {serial['summary']['accept']['rate']}, detection {serial['summary']['detection']['rate']}")
    assert ok
