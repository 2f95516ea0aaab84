"""Randomized numerical checks of the operator inequalities the security
argument relies on.

Each ``check_*`` function samples instances from an explicit generator and
returns a :class:`LemmaReport` with the number of violations and the worst
observed slack.  The suites are what ``cqpv verify-lemmas`` runs.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from . import qcore
from .qcore import (
    KrausChannel,
    QuantumInstrument,
    apply_dilation,
    decompose_instrument,
    gentle_post_state,
    hermitize,
    psd_sqrt,
    stinespring_dilate,
    trace_norm_distance,
)
from .rng import STREAM_LEMMAS, trial_rng

RECON_TOL = 1e-10


# --- random objects ----------------------------------------------------------


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary via QR with phase fix."""
    q, r = np.linalg.qr(_ginibre(rng, d, d))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Induced-measure mixed state; ``rank=1`` gives a Haar pure state."""
    g = _ginibre(rng, d, rank or d)
    rho = g @ g.conj().T
    return hermitize(rho / np.trace(rho).real)


def random_pure_state(d: int, rng: np.random.Generator) -> np.ndarray:
    v = _ginibre(rng, d, 1).ravel()
    return v / np.linalg.norm(v)


def random_effect(d: int, rng: np.random.Generator, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    """POVM element with eigenvalues uniform in ``[low, high]``."""
    u = random_unitary(d, rng)
    lam = rng.uniform(low, high, size=d)
    return hermitize((u * lam) @ u.conj().T)


def random_isometry_blocks(d_in: int, d_out: int, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    """``count`` matrices ``K_j`` (d_out x d_in) with ``sum K_j^dagger K_j = 1``."""
    q, _ = np.linalg.qr(_ginibre(rng, d_out * count, d_in))
    return [q[j * d_out : (j + 1) * d_out] for j in range(count)]


def random_channel(d: int, n_kraus: int, rng: np.random.Generator) -> KrausChannel:
    return KrausChannel(tuple(random_isometry_blocks(d, d, n_kraus, rng)))


def random_instrument(
    d: int,
    rng: np.random.Generator,
    n_outcomes: int = 2,
    max_kraus: int = 2,
    rank_deficient: bool = False,
) -> QuantumInstrument:
    """Random instrument on a ``d``-dimensional system.

    With ``rank_deficient=True`` the outcomes act on complementary random
    subspaces, so each POVM element has a nontrivial kernel and the
    decomposition must use the pseudo-inverse branch.
    """
    counts = rng.integers(1, max_kraus + 1, size=n_outcomes)
    if not rank_deficient:
        blocks = random_isometry_blocks(d, d, int(counts.sum()), rng)
        sets, pos = {}, 0
        for i, c in enumerate(counts):
            sets[i] = tuple(blocks[pos : pos + c])
            pos += c
        return QuantumInstrument(sets)
    u = random_unitary(d, rng)
    cuts = np.sort(rng.choice(np.arange(1, d), size=min(n_outcomes - 1, d - 1), replace=False))
    edges = [0, *cuts.tolist(), d]
    sets = {}
    for i in range(n_outcomes):
        if i < len(edges) - 1:
            cols = u[:, edges[i] : edges[i + 1]]
            proj = cols @ cols.conj().T
        else:
            proj = np.zeros((d, d), dtype=complex)
        sets[i] = tuple(w @ proj for w in random_isometry_blocks(d, d, int(counts[i]), rng))
    return QuantumInstrument(sets)


# --- reports -------------------------------------------------------------------


@dataclass
class LemmaReport:
    name: str
    instances: int
    violations: int
    worst: float  # largest observed (lhs - rhs) or reconstruction error
    seconds: float

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _dim(rng, dims) -> int:
    return int(rng.integers(dims[0], dims[1] + 1))


# --- suites --------------------------------------------------------------------


def check_gentle_measurement(n: int, rng: np.random.Generator, dims=(2, 8)) -> LemmaReport:
    """Sample (rho, M), set eps = 1 - tr(M rho), and test distance <= 2 sqrt(eps).

    Effects are drawn mostly near the identity so that eps is small and the
    bound is close to tight; a quarter of the instances use unrestricted
    effects.
    """
    t0 = time.perf_counter()
    violations, worst = 0, -np.inf
    for _ in range(n):
        d = _dim(rng, dims)
        rank = int(rng.integers(1, d + 1))
        rho = random_density_matrix(d, rng, rank)
        low = rng.uniform(0.0, 1.0) if rng.random() < 0.25 else 1.0 - rng.uniform(0.0, 0.2) ** 2
        m = random_effect(d, rng, low, 1.0)
        prob = float(np.trace(m @ rho).real)
        if prob < 1e-14:
            continue
        post, _ = gentle_post_state(rho, m)
        eps = max(0.0, 1.0 - prob)
        gap = trace_norm_distance(rho, post) - 2 * np.sqrt(eps)
        worst = max(worst, gap)
        violations += gap > RECON_TOL
    return LemmaReport("gentle_measurement", n, int(violations), float(worst), time.perf_counter() - t0)


def gentle_saturation_error() -> float:
    """|distance - sqrt(2)| for rho=|+><+|, M=|0><0| (eps = 1/2)."""
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    rho = np.outer(plus, plus.conj())
    m = np.diag([1.0, 0.0]).astype(complex)
    post, prob = gentle_post_state(rho, m)
    return abs(trace_norm_distance(rho, post) - 2 * np.sqrt(1 - prob))


def check_instrument_decomposition(
    n: int, rng: np.random.Generator, dims=(2, 8), states_per_instrument: int = 2
) -> LemmaReport:
    """Reconstruction I_i(rho) = E_i(sqrt(M_i) rho sqrt(M_i)), TP of E_i, and
    Stinespring recovery of both E_i and I_i."""
    t0 = time.perf_counter()
    violations, worst = 0, 0.0
    for k in range(n):
        d = _dim(rng, dims)
        inst = random_instrument(d, rng, rank_deficient=(k % 4 == 3))
        for outcome in inst.outcomes:
            m, chan = decompose_instrument(inst, outcome)
            sm = psd_sqrt(m.data)
            eff = qcore.kraus_effect(chan.kraus)
            err = float(np.max(np.abs(eff - np.eye(d))))
            u, env = stinespring_dilate(chan)
            err = max(err, float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))))
            for _ in range(states_per_instrument):
                rho = random_density_matrix(d, rng)
                target = inst.apply(outcome, rho)
                squeezed = sm @ rho @ sm
                err = max(err, float(np.max(np.abs(chan.apply(squeezed) - target))))
                err = max(err, float(np.max(np.abs(apply_dilation(u, env, squeezed) - target))))
                err = max(err, float(np.max(np.abs(apply_dilation(u, env, rho) - chan.apply(rho)))))
            worst = max(worst, err)
            violations += err > RECON_TOL
    return LemmaReport("instrument_decomposition", n, int(violations), worst, time.perf_counter() - t0)


def conditioned_states(rho, ma, mb, da: int, db: int) -> dict:
    """Post-commit states for local effects ``ma`` (Alice) and ``mb`` (Bob).

    Returns the joint-conditioned state and both one-sided states together
    with their normalizations.
    """
    ia, ib = np.eye(da), np.eye(db)
    sa, sb = psd_sqrt(ma), psd_sqrt(mb)
    out = {}
    for key, op in (("ab", np.kron(sa, sb)), ("a", np.kron(sa, ib)), ("b", np.kron(ia, sb))):
        s = op @ rho @ op
        out[key] = hermitize(s / np.trace(s).real)
    return out


def mismatch_eps(rho, effects_a: dict, effects_b: dict, pairs, da: int, db: int) -> float:
    """Largest one-sided conditional mismatch over the listed (x, y) pairs."""
    ia, ib = np.eye(da), np.eye(db)
    worst = 0.0
    for x, y in pairs:
        st_a = conditioned_states(rho, effects_a[x], ib, da, db)["a"]
        st_b = conditioned_states(rho, ia, effects_b[y], da, db)["b"]
        miss_b = np.trace(np.kron(ia, ib - effects_b[y]) @ st_a).real
        miss_a = np.trace(np.kron(ia - effects_a[x], ib) @ st_b).real
        worst = max(worst, miss_a, miss_b)
    return float(worst)


def check_paths_between_strings(n: int, rng: np.random.Generator) -> LemmaReport:
    """Product commit effects on a random bipartite state; with eps the
    largest conditional mismatch on (x,y), (x',y), (x',y') the post-commit
    states satisfy ||rho^{xy} - rho^{x'y'}||_1 <= 8 sqrt(eps)."""
    t0 = time.perf_counter()
    violations, worst = 0, -np.inf
    for _ in range(n):
        da, db = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        rho = random_density_matrix(da * db, rng, int(rng.integers(1, da * db + 1)))
        spread = rng.uniform(0.0, 0.3) ** 2 if rng.random() < 0.8 else rng.uniform(0.0, 1.0)
        ea = {x: random_effect(da, rng, 1.0 - spread, 1.0) for x in ("x", "x'")}
        eb = {y: random_effect(db, rng, 1.0 - spread, 1.0) for y in ("y", "y'")}
        eps = mismatch_eps(rho, ea, eb, [("x", "y"), ("x'", "y"), ("x'", "y'")], da, db)
        s1 = conditioned_states(rho, ea["x"], eb["y"], da, db)["ab"]
        s2 = conditioned_states(rho, ea["x'"], eb["y'"], da, db)["ab"]
        gap = trace_norm_distance(s1, s2) - 8 * np.sqrt(eps)
        worst = max(worst, gap)
        violations += gap > RECON_TOL
    return LemmaReport("paths_between_strings", n, int(violations), float(worst), time.perf_counter() - t0)


def check_data_processing(n: int, rng: np.random.Generator, dims=(2, 8)) -> LemmaReport:
    t0 = time.perf_counter()
    violations, worst = 0, -np.inf
    for _ in range(n):
        d = _dim(rng, dims)
        chan = random_channel(d, int(rng.integers(1, 4)), rng)
        rho, sigma = random_density_matrix(d, rng), random_density_matrix(d, rng)
        gap = trace_norm_distance(chan.apply(rho), chan.apply(sigma)) - trace_norm_distance(rho, sigma)
        worst = max(worst, gap)
        violations += gap > RECON_TOL
    return LemmaReport("data_processing", n, int(violations), float(worst), time.perf_counter() - t0)


def check_triangle_inequality(n: int, rng: np.random.Generator, dims=(2, 8)) -> LemmaReport:
    t0 = time.perf_counter()
    violations, worst = 0, -np.inf
    for _ in range(n):
        d = _dim(rng, dims)
        a, b, c = (random_density_matrix(d, rng) for _ in range(3))
        gap = trace_norm_distance(a, c) - trace_norm_distance(a, b) - trace_norm_distance(b, c)
        worst = max(worst, gap, abs(trace_norm_distance(a, b) - trace_norm_distance(b, a)))
        violations += gap > RECON_TOL
    return LemmaReport("triangle_inequality", n, int(violations), float(worst), time.perf_counter() - t0)


DEFAULT_SIZES = {
    "gentle_measurement": 10_000,
    "instrument_decomposition": 1_000,
    "paths_between_strings": 1_000,
    "data_processing": 1_000,
    "triangle_inequality": 1_000,
}

_SUITES = {
    "gentle_measurement": check_gentle_measurement,
    "instrument_decomposition": check_instrument_decomposition,
    "paths_between_strings": check_paths_between_strings,
    "data_processing": check_data_processing,
    "triangle_inequality": check_triangle_inequality,
}


def run_all(seed: int, sizes: dict | None = None) -> list[LemmaReport]:
    """Run every suite on its own stream of ``seed``."""
    sizes = {**DEFAULT_SIZES, **(sizes or {})}
    reports = []
    for idx, (name, fn) in enumerate(_SUITES.items()):
        reports.append(fn(sizes[name], trial_rng(seed, idx, STREAM_LEMMAS)))
    return reports
