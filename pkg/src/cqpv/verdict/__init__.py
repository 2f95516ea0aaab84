"""Verifier-side scores, closed-form bounds and the accept/reject decision."""

from .bounds import (
    MODELS,
    AdaptivePreset,
    BoundParams,
    BoundValue,
    InfeasibleConfiguration,
    RoundBudget,
    Table1Cells,
    adaptive_preset,
    attacker_score_ceiling,
    bounds_report,
    caught_probability_floor,
    chernoff_accept_floor,
    detection_probability_adaptive,
    detection_probability_nonadaptive,
    dumps_report,
    round_budget,
    table1_bounds,
)
from .combinatorics import EdgeRemovalReport, GoodRounds, check_edge_removal, edge_removal_reach, good_rounds_subset, reach_bound
from .decide import Decision, decide, rate_band
from .scores import Outcome, ScoreContractError, ScoreState, SecureRegion, lossy_payoff, payoff
