"""Experiment execution for the command line.

Trials are independent and each one draws from its own child stream of the
master seed, so results do not depend on how trials are spread over worker
processes.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

from ..estimate import estimate_row, sweep_rows
from ..lemma_checks import gentle_saturation_error, run_all
from ..protocol import (
    STATUS_ABORTED,
    STATUS_COMPLETE,
    STATUS_INCONCLUSIVE,
    StopRule,
    StrategyBundle,
    Verdict,
    run_sequential,
    run_sequential_fast,
)
from ..protocol.export import record_row
from ..rng import STREAM_LEMMAS, STREAM_PROTOCOL, STREAM_STRATEGY, trial_rng
from ..stats import wilson_interval
from ..verdict import (
    InfeasibleConfiguration,
    attacker_score_ceiling,
    bounds_report,
    check_edge_removal,
    chernoff_accept_floor,
    decide,
    detection_probability_nonadaptive,
)
from .config import ConfigValidationError, ExperimentConfig, config_hash, set_dotted, validate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INCONCLUSIVE = 3
EXIT_INVARIANT = 4


# --- trials --------------------------------------------------------------------------


def run_trial(cfg: ExperimentConfig, trial_id: int, keep_records: bool = False) -> dict:
    """One sequential run plus the verifier decision."""
    pcfg = cfg.protocol_config()
    dev = cfg.device_params()
    strategy = cfg.strategy_spec().build(dev)
    rng = trial_rng(cfg.seed, trial_id, STREAM_PROTOCOL)
    rows = []
    if cfg.engine == "scalar":
        bundle = StrategyBundle(strategy, dev, rng=trial_rng(cfg.seed, trial_id, STREAM_STRATEGY))
        tr = run_sequential(pcfg, bundle, StopRule.from_config(pcfg), rng, trial_id=trial_id)
        summary = tr.summary()
        if keep_records:
            rows = [record_row(trial_id, rec) for rec in tr.records]
    else:
        summary = run_sequential_fast(pcfg, strategy, StopRule.from_config(pcfg), rng)
    try:
        decision = decide(summary, cfg.bound_params(), cfg.region(), cfg.bounds_extra()["rate_sigma"])
        accept, reason = decision.accept, decision.reason
    except InfeasibleConfiguration:
        accept, reason = False, "infeasible"
    return {
        "trial_id": trial_id,
        "status": summary.status,
        "counts": summary.counts,
        "committed": summary.committed,
        "total_rounds": summary.total_rounds,
        "accept": accept,
        "reason": reason,
        "rows": rows,
    }


def _trial_batch(job) -> list[dict]:
    data, ids, keep_below = job
    cfg = ExperimentConfig(data)
    return [run_trial(cfg, i, i < keep_below) for i in ids]


def _chunks(n: int, parts: int) -> list[range]:
    parts = max(1, min(parts, n))
    step = math.ceil(n / parts)
    return [range(s, min(n, s + step)) for s in range(0, n, step)]


def run_trials(data: dict, workers: int = 1) -> list[dict]:
    """All trials of ``data`` in trial-id order."""
    cfg = ExperimentConfig(data)
    keep = cfg.transcript_trials if cfg.engine == "scalar" else 0
    jobs = [(data, r, keep) for r in _chunks(cfg.trials, 4 * max(1, workers))]
    if workers <= 1:
        batches = [_trial_batch(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(_trial_batch, jobs))
    results = [t for b in batches for t in b]
    results.sort(key=lambda t: t["trial_id"])
    return results


# --- aggregation -----------------------------------------------------------------------


def _rate(successes: int, trials: int) -> dict:
    lo, hi = wilson_interval(successes, trials) if trials else (0.0, 1.0)
    return {"count": successes, "rate": successes / trials if trials else math.nan, "wilson": [lo, hi]}


def _reference_bounds(cfg: ExperimentConfig) -> dict:
    params = cfg.bound_params()
    region = cfg.region()
    r = cfg.protocol_config().r
    mu, w = (params.mu, 1.0) if region is None else (region.honest_mean, 2.0)
    out = {"mu": mu, "r": r, "payoff_width": w}
    if mu > 0:
        out["honest_floor"] = chernoff_accept_floor(mu, params.delta_margin, r, w)
        out["attacker_ceiling"] = attacker_score_ceiling(mu, params.delta_margin, r, params.k, params.model).to_dict()
    else:
        out["honest_floor"] = None
        out["attacker_ceiling"] = None
    return out


def aggregate(data: dict, trials: list[dict]) -> dict:
    """Summary statistics; a pure function of the configuration and trial results."""
    cfg = ExperimentConfig(data)
    n = len(trials)
    status = Counter(t["status"] for t in trials)
    reasons = Counter(t["reason"] for t in trials)
    verdicts = Counter()
    for t in trials:
        verdicts.update(t["counts"])
    accepted = sum(t["accept"] for t in trials)
    detected = sum(t["counts"].get(Verdict.ABORT_MISMATCH_COMMIT.value, 0) > 0 for t in trials)
    bounds = _reference_bounds(cfg)
    floor = bounds["honest_floor"]
    strategy = cfg.strategy_spec()
    summary = {
        "config_hash": config_hash(data),
        "experiment": "simulate",
        "seed": cfg.seed,
        "trials": n,
        "engine": cfg.engine,
        "strategy": {"name": strategy.name, "params": strategy.params},
        "status": {s: status.get(s, 0) for s in (STATUS_COMPLETE, STATUS_ABORTED, STATUS_INCONCLUSIVE)},
        "accept": _rate(accepted, n),
        "decision_reasons": dict(sorted(reasons.items())),
        "detection": _rate(detected, n),
        "verdict_totals": {v.value: verdicts.get(v.value, 0) for v in Verdict},
        "mean_total_rounds": sum(t["total_rounds"] for t in trials) / n if n else math.nan,
        "mean_committed_rounds": sum(t["committed"] for t in trials) / n if n else math.nan,
        "bounds": bounds,
    }
    if strategy.name == "honest" and floor is not None and n:
        hi = summary["accept"]["wilson"][1]
        summary["floor_check"] = {"floor": floor, "passed": bool(hi >= floor)}
    return summary


# --- experiments ---------------------------------------------------------------------------


def simulate(data: dict, workers: int = 1) -> tuple[dict, int]:
    trials = run_trials(data, workers)
    summary = aggregate(data, trials)
    rows = [row for t in trials for row in t["rows"]]
    cfg = ExperimentConfig(data)
    results = {"summary": summary, "transcript_rows": rows, "bounds": _bounds(cfg)}
    if summary["status"][STATUS_INCONCLUSIVE]:
        code = EXIT_INCONCLUSIVE
    elif not summary.get("floor_check", {}).get("passed", True):
        code = EXIT_INVARIANT
    else:
        code = EXIT_OK
    return results, code


def _bounds(cfg: ExperimentConfig) -> dict:
    extra = cfg.bounds_extra()
    report = bounds_report(cfg.bound_params(), extra["r"], extra["alphas"], extra["detection_r"])
    report["config_hash"] = config_hash(cfg.data)
    return report


def bounds(data: dict) -> tuple[dict, int]:
    return {"bounds": _bounds(ExperimentConfig(data))}, EXIT_OK


def estimate(data: dict) -> tuple[dict, int]:
    cfg = ExperimentConfig(data)
    sweeps = cfg.estimate_sweeps()
    base = cfg.estimate_inputs()
    rows = sweep_rows(base, sweeps) if sweeps else [estimate_row(base)]
    summary = {"config_hash": config_hash(data), "experiment": "estimate", "rows": rows}
    return {"estimate_rows": rows, "summary": summary}, EXIT_OK


def verify_lemmas(data: dict) -> tuple[dict, int]:
    cfg = ExperimentConfig(data)
    reports = [r.to_dict() for r in run_all(cfg.seed, cfg.lemma_sizes())]
    for r in reports:
        r.pop("seconds")  # keep the file reproducible
    samples = cfg.edge_removal_samples()
    edge = []
    for n in (1, 2, 3):
        for c in (1 / 8, 1 / 4, 1 / 2):
            rep = check_edge_removal(n, c, None if n == 1 else samples, trial_rng(cfg.seed, 100 + n, STREAM_LEMMAS))
            edge.append({"n": n, "c_tilde": c, "instances": rep.instances, "violations": rep.violations, "passed": rep.passed})
    sat = gentle_saturation_error()
    lemmas = {
        "config_hash": config_hash(data),
        "suites": reports,
        "edge_removal": edge,
        "gentle_saturation_error": sat,
        "passed": all(r["passed"] for r in reports) and all(e["passed"] for e in edge) and sat <= 1e-10,
    }
    return {"lemmas": lemmas, "summary": lemmas}, EXIT_OK if lemmas["passed"] else EXIT_INVARIANT


def _analytic(kind: str, cfg: ExperimentConfig, x) -> Optional[float]:
    if kind == "detection_nonadaptive":
        return detection_probability_nonadaptive(float(x), cfg.protocol_config().r)[0]
    if kind in ("chernoff_floor", "attacker_ceiling"):
        b = _reference_bounds(cfg)
        if kind == "chernoff_floor":
            return b["honest_floor"]
        return None if b["attacker_ceiling"] is None else b["attacker_ceiling"]["value"]
    return None


def sweep(data: dict, workers: int = 1) -> tuple[dict, int]:
    spec = ExperimentConfig(data).sweep()
    if "parameter" not in spec:
        raise ConfigValidationError(["sweep: section required for the sweep experiment"])
    metric = "detection" if spec["analytic"] == "detection_nonadaptive" else "accept"
    points, plot, code = [], [], EXIT_OK
    for x in spec["values"]:
        point_data = validate(set_dotted(data, spec["parameter"], x))
        summary = aggregate(point_data, run_trials(point_data, workers))
        if summary["status"][STATUS_INCONCLUSIVE]:
            code = EXIT_INCONCLUSIVE
        m = summary[metric]
        analytic = _analytic(spec["analytic"], ExperimentConfig(point_data), x)
        plot.append([x, m["rate"], m["wilson"][0], m["wilson"][1], analytic, summary["trials"]])
        points.append({"x": x, "summary": summary, "analytic": analytic})
    out = {
        "config_hash": config_hash(data),
        "experiment": "sweep",
        "parameter": spec["parameter"],
        "metric": metric,
        "points": points,
    }
    return {"summary": out, "plot_rows": plot}, code


def execute(data: dict, experiment: str, workers: int = 1) -> tuple[dict, int]:
    """Validate ``data`` and run ``experiment``; returns (results, exit code)."""
    validate(data)
    if experiment == "simulate":
        return simulate(data, workers)
    if experiment == "bounds":
        return bounds(data)
    if experiment == "estimate":
        return estimate(data)
    if experiment == "verify-lemmas":
        return verify_lemmas(data)
    if experiment == "sweep":
        return sweep(data, workers)
    raise ConfigValidationError([f"experiment: unknown value {experiment!r}"])
