"""Accept/reject decision on a finished sequential run."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from ..protocol.sequential import STATUS_ABORTED, STATUS_INCONCLUSIVE, TranscriptSummary
from .bounds import BoundParams, InfeasibleConfiguration
from .scores import SecureRegion, outcome_payoffs, score_counts

DEFAULT_RATE_SIGMA = 4.0


@dataclass(frozen=True)
class Decision:
    accept: bool
    reason: str
    score: float = math.nan
    threshold: float = math.nan
    rounds: int = 0
    bottom_rate: float = math.nan

    def to_dict(self) -> dict:
        return {
            "accept": self.accept,
            "reason": self.reason,
            "score": self.score,
            "threshold": self.threshold,
            "rounds": self.rounds,
            "bottom_rate": self.bottom_rate,
        }


def _summary(transcript) -> TranscriptSummary:
    return transcript if isinstance(transcript, TranscriptSummary) else transcript.summary()


def rate_band(eta_p: float, rounds: int, sigmas: float = DEFAULT_RATE_SIGMA) -> tuple[float, float]:
    """Allowed no-answer counts ``r (1 - eta_P) +- sigmas * sd``."""
    mean = rounds * (1 - eta_p)
    sd = math.sqrt(rounds * eta_p * (1 - eta_p))
    return mean - sigmas * sd, mean + sigmas * sd


def decide(
    transcript,
    params: BoundParams,
    region: Optional[SecureRegion] = None,
    rate_sigma: float = DEFAULT_RATE_SIGMA,
) -> Decision:
    """Verifier decision for one run.

    Without ``region`` the loss-free score is used (no-answer rounds score
    0); with ``region`` every committed round is scored with the facet
    normal at the region's honest point.  Acceptance also requires the
    no-answer count to fall inside the binomial band around ``1 - eta_P``.
    """
    s = _summary(transcript)
    if s.status == STATUS_ABORTED:
        return Decision(False, s.abort_reason or "aborted", rounds=s.total_rounds)
    if s.status == STATUS_INCONCLUSIVE:
        return Decision(False, "inconclusive", rounds=s.total_rounds)
    correct, bottom, wrong = s.scored
    rounds = correct + bottom + wrong
    if rounds == 0:
        return Decision(False, "no committed rounds")
    if region is None:
        mu = params.mu
        weights = outcome_payoffs(params.p_b)
    else:
        mu = region.honest_mean
        weights = region.gradient(region.honest_point)
    if mu <= 0:
        raise InfeasibleConfiguration(f"honest mean score {mu} is not positive")
    score = score_counts((correct, bottom, wrong), weights)
    threshold = rounds * mu * (1 - params.delta_margin)
    bottom_rate = bottom / rounds
    lo, hi = rate_band(params.eta_p, rounds, rate_sigma)
    if not lo <= bottom <= hi:
        return Decision(False, "loss rate", score, threshold, rounds, bottom_rate)
    if not score > threshold:
        return Decision(False, "score", score, threshold, rounds, bottom_rate)
    return Decision(True, "accept", score, threshold, rounds, bottom_rate)
