"""Per-round payoffs and the piecewise-linear secure region.

Outcome classes are ordered ``(C, BOT, I)``: correct answer, no answer,
incorrect answer.  Points of the outcome simplex use the same order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

SIMPLEX_TOL = 1e-10


class ScoreContractError(ValueError):
    """A payoff was requested for an outcome it is not defined on."""


class Outcome(str, Enum):
    C = "C"
    BOT = "bot"
    I = "I"


_INDEX = {Outcome.C: 0, Outcome.BOT: 1, Outcome.I: 2}


def _outcome(ans) -> Outcome:
    if isinstance(ans, Outcome):
        return ans
    try:
        return Outcome(ans)
    except ValueError:
        raise ScoreContractError(f"unknown outcome {ans!r}") from None


def payoff(ans, p_b: float) -> float:
    """Loss-free payoff: ``1 - p_b`` for a correct answer, ``-p_b`` otherwise."""
    if not 0 < p_b < 1:
        raise ScoreContractError("p_b must lie in (0, 1)")
    ans = _outcome(ans)
    if ans is Outcome.BOT:
        raise ScoreContractError("no-answer outcome has no loss-free payoff; use lossy_payoff")
    return 1.0 - p_b if ans is Outcome.C else -p_b


def _check_simplex_point(p, what: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (3,):
        raise ValueError(f"{what} must have three coordinates")
    if (p < -SIMPLEX_TOL).any() or abs(p.sum() - 1) > SIMPLEX_TOL:
        raise ValueError(f"{what} {p.tolist()} is not in the probability simplex")
    return p


def _angle(p: np.ndarray) -> float:
    """Angle of ``p`` seen from the all-correct vertex, in ``[0, pi/2]``.

    0 points towards the all-loss vertex, pi/2 towards the all-wrong vertex.
    """
    if p[1] <= SIMPLEX_TOL and p[2] <= SIMPLEX_TOL:
        return math.nan
    return math.atan2(p[2], p[1])


@dataclass(frozen=True)
class SecureRegion:
    """Origin cone over a polyline ``curve`` in the outcome simplex.

    Each segment ``g_i g_{i+1}`` spans one facet with unit normal
    ``g_i x g_{i+1} / |g_i x g_{i+1}|``; one global sign makes the honest
    point score positive.  The facet used at a point is the one whose
    angular sector, seen from the all-correct vertex, contains it; a point
    on a seam goes to the lower index.
    """

    curve: tuple
    honest_point: tuple
    normals: np.ndarray = field(init=False, repr=False, compare=False)
    sign: float = field(init=False)
    _bounds: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = [_check_simplex_point(g, "curve point") for g in self.curve]
        if len(pts) < 2:
            raise ValueError("the curve needs at least two points")
        honest = _check_simplex_point(self.honest_point, "honest point")
        normals = []
        for a, b in zip(pts, pts[1:]):
            n = np.cross(a, b)
            norm = np.linalg.norm(n)
            if norm < 1e-14:
                raise ValueError("consecutive curve points are collinear with the origin")
            normals.append(n / norm)
        normals = np.array(normals)
        angles = [_angle(p) for p in pts]
        if any(math.isnan(a) for a in angles):
            raise ValueError("the curve may not pass through the all-correct vertex")
        bounds = tuple((min(a, b), max(a, b)) for a, b in zip(angles, angles[1:]))
        object.__setattr__(self, "curve", tuple(tuple(float(c) for c in p) for p in pts))
        object.__setattr__(self, "honest_point", tuple(float(c) for c in honest))
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "_bounds", bounds)
        object.__setattr__(self, "sign", 1.0)
        raw = float(honest @ normals[self.facet_index(honest)])
        if abs(raw) < 1e-14:
            raise ValueError("the honest point lies on the surface")
        sign = 1.0 if raw > 0 else -1.0
        object.__setattr__(self, "sign", sign)
        object.__setattr__(self, "normals", sign * normals)

    @property
    def n_facets(self) -> int:
        return len(self._bounds)

    def facet_index(self, point) -> int:
        p = _check_simplex_point(point, "point")
        theta = _angle(p)
        if math.isnan(theta):
            return 0
        for i, (lo, hi) in enumerate(self._bounds):
            if lo - 1e-12 <= theta <= hi + 1e-12:
                return i
        gaps = [min(abs(theta - lo), abs(theta - hi)) for lo, hi in self._bounds]
        return int(np.argmin(gaps))

    def gradient(self, point) -> np.ndarray:
        """Unit normal of the facet used at ``point`` (``nabla F`` there)."""
        return self.normals[self.facet_index(point)].copy()

    def expected_score(self, q, eval_point=None) -> float:
        """Mean lossy payoff of outcome distribution ``q`` scored at ``eval_point``."""
        q = _check_simplex_point(q, "distribution")
        grad = self.gradient(q if eval_point is None else eval_point)
        return float(q @ grad)

    @property
    def honest_mean(self) -> float:
        return self.expected_score(self.honest_point)

    @classmethod
    def no_loss(cls, p_b: float, honest_point) -> "SecureRegion":
        """Single facet through ``(p_b, 0, 1 - p_b)`` and the all-loss vertex."""
        return cls(((p_b, 0.0, 1.0 - p_b), (0.0, 1.0, 0.0)), tuple(honest_point))


def lossy_payoff(ans, region: SecureRegion, eval_point) -> float:
    """Component of the facet normal at ``eval_point`` for outcome ``ans``."""
    p = _check_simplex_point(eval_point, "eval point")
    if (p <= 0).any():
        raise ScoreContractError("eval point must lie strictly inside the simplex")
    return float(region.gradient(p)[_INDEX[_outcome(ans)]])


@dataclass
class ScoreState:
    """Running score over committed rounds."""

    payoffs: list = field(default_factory=list)

    def add(self, value: float) -> float:
        self.payoffs.append(float(value))
        return self.total

    @property
    def total(self) -> float:
        return math.fsum(self.payoffs)

    @property
    def rounds(self) -> int:
        return len(self.payoffs)


def outcome_payoffs(p_b: float) -> np.ndarray:
    """Loss-free payoffs for ``(C, BOT, I)`` with the no-answer class scored 0."""
    return np.array([1.0 - p_b, 0.0, -p_b])


def score_counts(counts: Sequence[int], weights: Sequence[float]) -> float:
    """Total score of outcome counts ``(C, BOT, I)`` under per-class weights."""
    return math.fsum(float(c) * float(w) for c, w in zip(counts, weights))
