"""Closed-form security and acceptance bounds for sequential repetition."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

MODELS = ("S1", "S2", "S3")


class InfeasibleConfiguration(ValueError):
    """The honest prover cannot beat the configured score threshold."""


@dataclass(frozen=True)
class BoundValue:
    value: float
    vacuous: bool = False

    def to_dict(self) -> dict:
        return {"value": self.value, "vacuous": self.vacuous}


def _check_model(model: str) -> str:
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}, got {model!r}")
    return model


@dataclass(frozen=True)
class BoundParams:
    """Inputs of the verdict engine.

    ``p_attack`` is the single-round attack bound of the underlying protocol,
    taken from the literature.  ``delta_margin`` is the score margin (distinct
    from the protocol's time delay).
    """

    p_attack: float
    p_err: float = 0.0
    eta_p: float = 1.0
    delta_margin: float = 0.5
    k: int = 10
    model: str = "S1"

    def __post_init__(self):
        if not 0 < self.p_attack < 1:
            raise ValueError("p_attack must lie in (0, 1)")
        if not 0 <= self.p_err < 1:
            raise ValueError("p_err must lie in [0, 1)")
        if not 0 < self.eta_p <= 1:
            raise ValueError("eta_p must lie in (0, 1]")
        if not 0 < self.delta_margin < 1:
            raise ValueError("delta_margin must lie in (0, 1)")
        if self.k < 2:
            raise ValueError("k must be at least 2")
        _check_model(self.model)

    @property
    def p_b(self) -> float:
        """Per-round attack bound for the security model."""
        return self.p_attack if self.model == "S1" else self.p_attack + 6.0 / self.k

    @property
    def mu(self) -> float:
        return 1.0 - self.p_b - self.p_err

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(p_b=self.p_b, mu=self.mu)
        return d


def chernoff_accept_floor(mu: float, delta: float, r: int, w: float = 1.0) -> float:
    """Lower bound ``1 - exp(-r delta^2 mu^2 / w^2)`` on honest acceptance.

    ``w`` is the width of the per-round payoff range: 1 for the loss-free
    score, 2 for the lossy score.
    """
    if mu <= 0:
        raise InfeasibleConfiguration(f"honest mean score {mu} is not positive")
    if not 0 <= delta < 1:
        raise ValueError("delta must lie in [0, 1)")
    if delta == 0:
        return 0.0
    return -math.expm1(-r * delta**2 * mu**2 / w**2)


def attacker_score_ceiling(mu: float, delta: float, r: int, k: Optional[int] = None, model: str = "S1") -> BoundValue:
    """Azuma bound on ``Pr[score >= r mu (1 - delta)]`` for attackers.

    S3 shifts the exponent argument by ``1/k`` for the rounds without a
    per-round bound.  A non-positive argument gives the vacuous value 1.
    """
    arg = mu * (1 - delta)
    if _check_model(model) == "S3":
        if k is None:
            raise ValueError("S3 needs k")
        arg -= 1.0 / k
    if arg <= 0:
        return BoundValue(1.0, True)
    return BoundValue(math.exp(-0.5 * r * arg**2))


def caught_probability_floor(p_b: float, rounds: float) -> BoundValue:
    """``1 - p_b^rounds``: attackers answer wrongly at least once."""
    if p_b >= 1:
        return BoundValue(0.0, True)
    return BoundValue(-math.expm1(rounds * math.log(p_b)) if p_b > 0 else 1.0)


def s2_term(r: int) -> float:
    return 24.0 * (5.0 / r) ** (1 / 3)


def s3_term(r: int) -> float:
    return 12.0 * (20.0 / r) ** 0.25


def s3_exponent_factor(r: int) -> float:
    return 1.0 - 2.0 * (20.0 / r) ** 0.25


@dataclass(frozen=True)
class Table1Cells:
    column: str  # "no_error" or "with_error"
    honest: BoundValue
    S1: BoundValue
    S2: BoundValue
    S3: BoundValue
    # the tabulated S3 with-error cell leaves out p_err; this one keeps it
    S3_with_p_err: Optional[BoundValue] = None

    def to_dict(self) -> dict:
        out = {"column": self.column}
        for name in ("honest", "S1", "S2", "S3", "S3_with_p_err"):
            cell = getattr(self, name)
            if cell is not None:
                out[name] = cell.to_dict()
        return out


def _honest_floor(mu: float, delta: float, r: int) -> BoundValue:
    if mu <= 0:
        return BoundValue(0.0, True)
    return BoundValue(chernoff_accept_floor(mu, delta, r))


def table1_bounds(params: BoundParams, r: int) -> Table1Cells:
    """All cells of the sequential-repetition summary for one column.

    The column follows ``params.p_err``: zero selects the honest-always-correct
    column, anything else the score-threshold column.  The honest cell in the
    second column uses the mean score of ``params.model``.
    """
    if r < 1:
        raise ValueError("r must be positive")
    P, e, d = params.p_attack, params.p_err, params.delta_margin
    t2, t3 = s2_term(r), s3_term(r)
    if e == 0:
        return Table1Cells(
            "no_error",
            BoundValue(1.0),
            caught_probability_floor(P, r),
            caught_probability_floor(P + t2, r),
            _s3_no_error(P + t3, s3_exponent_factor(r) * r),
        )
    mus = {"S1": 1 - P - e, "S2": 1 - P - t2 - e, "S3": 1 - P - t3}
    shift3 = (320.0 / r) ** 0.25
    return Table1Cells(
        "with_error",
        _honest_floor(mus[params.model], d, r),
        _azuma((1 - P - e) * (1 - d), r),
        _azuma((1 - P - t2 - e) * (1 - d), r),
        _azuma((1 - P - t3) * (1 - d) - shift3, r),
        _azuma((1 - P - t3 - e) * (1 - d) - shift3, r),
    )


def _s3_no_error(base: float, exponent: float) -> BoundValue:
    if exponent <= 0:
        return BoundValue(0.0, True)
    return caught_probability_floor(base, exponent)


def _azuma(arg: float, r: int) -> BoundValue:
    if arg <= 0:
        return BoundValue(1.0, True)
    return BoundValue(math.exp(-0.5 * r * arg**2))


def detection_probability_nonadaptive(alpha: float, committed_rounds: float) -> tuple[float, float]:
    """Detection floor from differing commits: exact ``1 - (1 - alpha)^R`` and
    the looser ``1 - exp(-alpha R)``."""
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    if alpha == 0:
        return 0.0, 0.0
    exact = 1.0 if alpha == 1 else -math.expm1(committed_rounds * math.log1p(-alpha))
    return exact, -math.expm1(-alpha * committed_rounds)


def detection_probability_adaptive(eps) -> float:
    """``1 - prod(1 - eps_i)`` for a round-indexed mismatch schedule."""
    log_keep = math.fsum(math.log1p(-e) if e < 1 else -math.inf for e in eps)
    return -math.expm1(log_keep)


@dataclass(frozen=True)
class RoundBudget:
    model: str
    k: int
    committed_rounds: int
    alpha: float
    c_tilde: float
    expected_total_rounds: float
    vacuous: bool

    def to_dict(self) -> dict:
        return asdict(self)


def round_budget(k: int, model: str = "S2", p_commit: float = 1.0) -> RoundBudget:
    """Committed-round target, mismatch level and bad-set fraction for ``k``.

    ``vacuous`` is set when the bad-set fraction ``2/k`` exceeds 1/2, where
    the edge-removal argument no longer applies.
    """
    if k < 2:
        raise ValueError("k must be at least 2 (mismatch level 1/(16k^2) <= 1/64)")
    if _check_model(model) == "S1":
        raise ValueError("S1 has no round budget")
    if not 0 < p_commit <= 1:
        raise ValueError("p_commit must lie in (0, 1]")
    target = 320 * k ** (3 if model == "S2" else 4)
    c_tilde = 2.0 / k
    return RoundBudget(model, k, target, 1.0 / (16 * k**2), c_tilde, target / p_commit, c_tilde > 0.5)


@dataclass(frozen=True)
class AdaptivePreset:
    """Adaptive-attack parameter pick: failure probability ``delta``, good-round
    fraction ``q``, block length ``block_rounds`` and ``total_rounds = k * block``."""

    k: int
    delta: float
    q: float
    block_rounds: int
    total_rounds: int

    def to_dict(self) -> dict:
        return asdict(self)


def adaptive_preset(k: int, delta: float = math.exp(-20)) -> AdaptivePreset:
    """Default ``delta = e^-20``, ``q = 1 - 1/k`` and blocks of ``320 k^3`` rounds."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    block = 320 * k**3
    return AdaptivePreset(k, delta, 1.0 - 1.0 / k, block, k * block)


def bounds_report(
    params: BoundParams,
    r: Optional[int] = None,
    alphas=(0.01, 0.02, 0.05),
    detection_r: float = 20.0,
    p_commit: float = 1.0,
) -> dict:
    """Every table cell, the round budgets and detection floors, with inputs echoed.

    ``r`` defaults to the committed-round budget of ``params.model`` (the S2
    budget for S1).  Detection floors use ``detection_r / alpha`` committed
    rounds for each ``alpha``.
    """
    budgets = {m: round_budget(params.k, m, p_commit).to_dict() for m in ("S2", "S3")}
    if r is None:
        r = budgets[params.model]["committed_rounds"] if params.model != "S1" else budgets["S2"]["committed_rounds"]
    with_error = table1_bounds(params, r) if params.p_err > 0 else None
    no_error = table1_bounds(BoundParams(**{**asdict(params), "p_err": 0.0}), r)
    detection = {}
    for a in alphas:
        exact, loose = detection_probability_nonadaptive(a, detection_r / a)
        detection[repr(a)] = {"committed_rounds": detection_r / a, "exact": exact, "loose": loose}
    report = {
        "inputs": {**params.to_dict(), "r": r, "detection_r": detection_r, "p_commit": p_commit},
        "table1": {"no_error": no_error.to_dict(), "with_error": with_error.to_dict() if with_error else None},
        "budgets": budgets,
        "adaptive_preset": adaptive_preset(params.k).to_dict(),
        "detection_nonadaptive": detection,
        "attacker_score_ceiling": attacker_score_ceiling(params.mu, params.delta_margin, r, params.k, params.model).to_dict()
        if params.mu > 0
        else BoundValue(1.0, True).to_dict(),
        "honest_floor": chernoff_accept_floor(params.mu, params.delta_margin, r) if params.mu > 0 else 0.0,
    }
    return report


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
