"""Counting arguments behind the mismatch analysis.

Inputs ``(x, y)`` are edges of the complete bipartite graph on ``2^n + 2^n``
vertices; an edge is removed when its commit-mismatch probability is too
large.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np


def _adjacency(n: int, removed: Iterable[tuple[int, int]]) -> np.ndarray:
    size = 1 << n
    adj = np.ones((size, size), dtype=bool)
    for x, y in removed:
        if not (0 <= x < size and 0 <= y < size):
            raise ValueError(f"edge ({x}, {y}) outside K_{{{size},{size}}}")
        adj[x, y] = False
    return adj


def edge_removal_reach(n: int, removed: Iterable[tuple[int, int]]) -> tuple[int, int]:
    """Left vertex reaching the most edges in two steps, and that count.

    From left vertex ``l`` the walk goes to a neighbour ``r`` and back along
    any edge at ``r``; the count is ``sum(deg(r) for r in N(l))``.  Ties go
    to the lowest index.
    """
    adj = _adjacency(n, removed)
    reach = adj.astype(np.int64) @ adj.sum(axis=0)
    best = int(np.argmax(reach))
    return best, int(reach[best])


def reach_bound(n: int, removed_count: int) -> float:
    """``(1 - 2 c) 2^{2n}`` with ``c`` the removed fraction."""
    total = 1 << (2 * n)
    return (1 - 2 * removed_count / total) * total


@dataclass(frozen=True)
class EdgeRemovalReport:
    n: int
    removed_count: int
    instances: int
    violations: int
    min_margin: float  # smallest reach minus bound

    @property
    def passed(self) -> bool:
        return self.violations == 0


def check_edge_removal(
    n: int,
    c_tilde: float,
    samples: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> EdgeRemovalReport:
    """Test the reach bound on removal sets of size ``floor(c_tilde 2^{2n})``.

    With ``samples=None`` every removal set of that size is enumerated;
    otherwise ``samples`` uniform random sets are drawn.
    """
    if not 0 <= c_tilde <= 0.5:
        raise ValueError("c_tilde must lie in [0, 1/2]")
    size = 1 << n
    total = size * size
    count = int(math.floor(c_tilde * total + 1e-12))
    edges = [(x, y) for x in range(size) for y in range(size)]
    if samples is None:
        sets: Iterable = itertools.combinations(edges, count)
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        sets = ([edges[i] for i in rng.choice(total, size=count, replace=False)] for _ in range(samples))
    bound = reach_bound(n, count)
    instances = violations = 0
    margin = math.inf
    for removed in sets:
        _, reach = edge_removal_reach(n, removed)
        instances += 1
        violations += reach < bound - 1e-9
        margin = min(margin, reach - bound)
    return EdgeRemovalReport(n, count, instances, violations, margin)


@dataclass(frozen=True)
class GoodRounds:
    indices: tuple
    threshold: float
    rounded: bool  # q r was not an integer and was rounded down

    @property
    def size(self) -> int:
        return len(self.indices)


def good_rounds_subset(eps_list: Sequence[float], q: float, alpha_total: Optional[float] = None) -> GoodRounds:
    """Pick ``q r`` rounds whose mismatch level is at most ``alpha/((1-q) r)``.

    The rounds with the smallest levels are taken (stable order); a budget
    ``alpha_total`` below the actual sum is rejected.
    """
    eps = np.asarray(eps_list, dtype=float)
    r = eps.size
    if r == 0:
        raise ValueError("empty schedule")
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    if (eps < 0).any():
        raise ValueError("mismatch levels must be non-negative")
    total = math.fsum(eps)
    alpha = total if alpha_total is None else float(alpha_total)
    if total > alpha * (1 + 1e-12) + 1e-15:
        raise ValueError(f"sum of levels {total} exceeds the budget {alpha}")
    exact = q * r
    size = int(math.floor(exact + 1e-9))
    rounded = abs(exact - round(exact)) > 1e-9
    order = np.argsort(eps, kind="stable")[:size]
    threshold = alpha / ((1 - q) * r)
    chosen = tuple(sorted(int(i) for i in order))
    if (eps[list(chosen)] > threshold * (1 + 1e-12) + 1e-15).any():
        raise AssertionError("counting argument violated")  # cannot happen
    return GoodRounds(chosen, threshold, rounded)
