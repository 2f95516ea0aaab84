"""Stochastic models of the link and the prover laboratory.

Two presence-detection models are available:

``"qnd"``
    An abstract heralding detector with efficiency ``eta_det_qnd`` and
    dark-herald probability ``p_dc_qnd``.  Dark-count probabilities follow the
    absorbed convention: ``p_dc_qnd`` is the unconditional probability of a
    herald without a photon, and ``p_dc`` the unconditional probability of a
    measurement click without a photon.  Under this model the Monte Carlo
    herald/measurement statistics reproduce the closed-form ``eta_P`` exactly
    in expectation.

``"bsm"``
    A four-detector partial Bell measurement between the incoming photon and
    one half of a locally prepared EPR pair.  Detectors have efficiency
    ``eta_det`` and independent per-window dark counts ``p_dc``.  The other
    EPR half is the teleported photon that gets measured.

In both models the loss chain after the herald (survival, delay line,
equipment, detector) is folded into ``eta_meas``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from itertools import product
from typing import NamedTuple

import numpy as np

from .estimate import eta_p_formula


class DeviceError(ValueError):
    pass


class UndefinedEstimate(RuntimeError):
    """No committed rounds, so a conditional rate is undefined."""


def _prob(name: str, v: float) -> None:
    if not 0.0 <= v <= 1.0:
        raise DeviceError(f"{name}={v} outside [0, 1]")


@dataclass(frozen=True)
class DeviceParams:
    eta_v: float = 1.0
    eta_det: float = 1.0
    p_dc: float = 0.0
    eta_det_qnd: float = 1.0
    p_dc_qnd: float = 0.0
    eta_surv: float = 1.0
    eta_equip: float = 1.0
    delay_survival: float = 1.0
    fidelity: float = 1.0
    presence_mode: str = "qnd"

    def __post_init__(self):
        for name in (
            "eta_v",
            "eta_det",
            "p_dc",
            "eta_det_qnd",
            "p_dc_qnd",
            "eta_surv",
            "eta_equip",
            "delay_survival",
            "fidelity",
        ):
            _prob(name, getattr(self, name))
        if self.presence_mode not in ("qnd", "bsm"):
            raise DeviceError(f"unknown presence_mode {self.presence_mode!r}")

    @property
    def eta_meas(self) -> float:
        """Everything between herald and a registered measurement click."""
        return self.eta_det * self.eta_equip * self.eta_surv * self.delay_survival

    @property
    def flip_probability(self) -> float:
        return 1.0 - self.fidelity

    def eta_p(self) -> float:
        """Closed-form ``eta_P`` for the ``qnd`` model."""
        return eta_p_formula(self.eta_v, self.eta_meas, self.eta_det_qnd, self.p_dc, self.p_dc_qnd)

    def p_commit(self) -> float:
        """Closed-form herald probability for the ``qnd`` model."""
        return self.eta_v * self.eta_det_qnd + self.p_dc_qnd


@dataclass(frozen=True)
class QndParams:
    """Reference values for an atom-cavity nondestructive photon detector.

    ``eta_surv`` was characterised with weak coherent pulses; it is used here
    as a single-photon survival probability, which is an approximation.
    """

    eta_surv: float = 0.40
    eta_surv_range: tuple = (0.25, 0.55)
    p_dc_qnd: float = 0.03
    fidelity: float = 0.96

    def __post_init__(self):
        lo, hi = self.eta_surv_range
        for name, v in (("eta_surv", self.eta_surv), ("p_dc_qnd", self.p_dc_qnd), ("fidelity", self.fidelity), ("lo", lo), ("hi", hi)):
            _prob(name, v)
        if not lo <= self.eta_surv <= hi:
            raise DeviceError("eta_surv outside its stated range")

    def device_params(self, **overrides) -> DeviceParams:
        base = DeviceParams(
            eta_surv=self.eta_surv,
            p_dc_qnd=self.p_dc_qnd,
            fidelity=self.fidelity,
            presence_mode="qnd",
        )
        return replace(base, **overrides)


# --- elementary samplers -------------------------------------------------------


def sample_loss(p_survive: float, rng: np.random.Generator, size=None):
    """Bernoulli(p_survive); returns a bool or a bool array."""
    _prob("p_survive", p_survive)
    u = rng.random(size)
    return u < p_survive if size is not None else bool(u < p_survive)


def detector_click(photon_present: bool, eta_det: float, p_dc: float, rng: np.random.Generator) -> bool:
    """Click with probability ``eta_det + p_dc`` if a photon is present and
    ``p_dc`` otherwise (``p_dc`` already carries the no-detection factor)."""
    _prob("eta_det", eta_det)
    _prob("p_dc", p_dc)
    p = min(1.0, eta_det + p_dc) if photon_present else p_dc
    return bool(rng.random() < p)


# --- partial Bell measurement --------------------------------------------------


class BsmResult(str, Enum):
    PSI_MINUS = "PsiMinus"
    PSI_PLUS = "PsiPlus"
    INCONCLUSIVE = "Inconclusive"


class ClickPattern(NamedTuple):
    d1: bool = False
    d2: bool = False
    d3: bool = False
    d4: bool = False

    @classmethod
    def of(cls, *detectors: int) -> "ClickPattern":
        """Pattern from 1-based detector numbers, e.g. ``ClickPattern.of(1, 3)``."""
        flags = [False] * 4
        for d in detectors:
            if not 1 <= d <= 4:
                raise DeviceError(f"detector {d} outside 1..4")
            flags[d - 1] = True
        return cls(*flags)


def bsm_classify(pattern) -> BsmResult:
    """Map four detector flags to the Bell outcome they herald."""
    d1, d2, d3, d4 = (bool(v) for v in pattern)
    if d1 + d2 + d3 + d4 != 2:
        return BsmResult.INCONCLUSIVE
    if (d1 and d3) or (d2 and d4):
        return BsmResult.PSI_MINUS
    if (d1 and d2) or (d3 and d4):
        return BsmResult.PSI_PLUS
    return BsmResult.INCONCLUSIVE


# Two-photon arrival placements (0-based detectors), each with probability 1/8:
# Psi- (one per arm), Psi+ (both in one arm), Phi+/- (bunched into one detector).
_PLACEMENTS = np.array([(0, 2), (1, 3), (0, 1), (2, 3), (0, 0), (1, 1), (2, 2), (3, 3)])
_PLACEMENT_LABEL = np.array([1, 1, 2, 2, 0, 0, 0, 0])  # 1 = Psi-, 2 = Psi+, 0 = Phi
CORRECTION = {BsmResult.PSI_PLUS: "X", BsmResult.PSI_MINUS: "Y", BsmResult.INCONCLUSIVE: "I"}
_CORRECTION_BY_CODE = np.array(["I", "Y", "X"])


def _classify_codes(clicks: np.ndarray) -> np.ndarray:
    """Vectorized :func:`bsm_classify` on an (N, 4) bool array; 0/1/2 codes."""
    two = clicks.sum(axis=1) == 2
    minus = two & ((clicks[:, 0] & clicks[:, 2]) | (clicks[:, 1] & clicks[:, 3]))
    plus = two & ((clicks[:, 0] & clicks[:, 1]) | (clicks[:, 2] & clicks[:, 3]))
    return np.where(minus, 1, np.where(plus, 2, 0))


def bsm_pattern_distribution(input_present: bool, eta_det: float, p_dc: float) -> dict:
    """Exact distribution over the 16 click patterns.

    The local EPR photon is always present; the input photon only if
    ``input_present``.  Returns ``{ClickPattern: probability}``.
    """
    if input_present:
        placements = [(tuple(p), 1 / 8) for p in _PLACEMENTS]
    else:
        placements = [((d,), 1 / 4) for d in range(4)]
    dist = {ClickPattern(*bits): 0.0 for bits in product((False, True), repeat=4)}
    for photons, weight in placements:
        counts = np.bincount(np.asarray(photons), minlength=4)
        c = 1 - (1 - (1 - (1 - eta_det) ** counts)) * (1 - p_dc)
        for pat in dist:
            prob = 1.0
            for i, bit in enumerate(pat):
                prob *= c[i] if bit else 1 - c[i]
            dist[pat] += weight * prob
    return dist


def bsm_conclusive_probability(input_present: bool, eta_det: float, p_dc: float) -> float:
    """Analytic herald probability of the partial BSM (enumeration oracle)."""
    dist = bsm_pattern_distribution(input_present, eta_det, p_dc)
    return sum(p for pat, p in dist.items() if bsm_classify(pat) is not BsmResult.INCONCLUSIVE)


def sample_bsm_patterns(input_present: np.ndarray, eta_det: float, p_dc: float, rng: np.random.Generator):
    """Sample click patterns for a batch.

    Returns ``(clicks, true_code, both_detected)`` where ``true_code`` is the
    Bell outcome of the photon pair (0 when it was a Phi state or the input
    was missing) and ``both_detected`` marks rounds in which both photons
    registered.
    """
    present = np.asarray(input_present, dtype=bool)
    n = present.size
    clicks = np.zeros((n, 4), dtype=bool)
    rows = np.arange(n)
    pidx = rng.integers(0, 8, size=n)
    place = _PLACEMENTS[pidx]
    single = rng.integers(0, 4, size=n)
    det_a = rng.random(n) < eta_det
    det_b = rng.random(n) < eta_det
    # EPR photon: first slot of the placement if the input is there, else a random detector
    epr_det = np.where(present, place[:, 0], single)
    clicks[rows, epr_det] |= det_a
    idx = np.flatnonzero(present)
    clicks[idx, place[idx, 1]] |= det_b[idx]
    clicks |= rng.random((n, 4)) < p_dc
    true_code = np.where(present, _PLACEMENT_LABEL[pidx], 0)
    both = present & det_a & det_b
    return clicks, true_code, both


# --- prover laboratory ---------------------------------------------------------


@dataclass(frozen=True)
class LabOutcome:
    """Per-round result of the prover laboratory.

    ``faithful`` marks rounds whose measurement click comes from the photon
    that carries the verifier's input state; every other measured round
    yields an unbiased random bit.
    """

    commit: bool
    measured: bool
    faithful: bool
    correction: str


@dataclass
class LabBatch:
    commit: np.ndarray
    measured: np.ndarray
    faithful: np.ndarray
    correction: np.ndarray  # Pauli labels

    def __len__(self):
        return self.commit.size

    def row(self, i: int) -> LabOutcome:
        return LabOutcome(bool(self.commit[i]), bool(self.measured[i]), bool(self.faithful[i]), str(self.correction[i]))


def measurement_stage(dev: DeviceParams, herald: np.ndarray, carries: np.ndarray, rng):
    """Post-herald measurement for a batch.

    ``carries`` marks rounds in which the photon to be measured holds the
    input state.  Returns ``(measured, faithful)`` masks.
    """
    herald = np.asarray(herald, dtype=bool)
    carries = np.asarray(carries, dtype=bool)
    n = herald.size
    survive = carries & (rng.random(n) < dev.eta_meas)
    # dark-click probability conditional on no genuine detection, so that
    # P[click] = eta_meas + p_dc for a present photon and p_dc otherwise
    cond_dark_carry = 0.0 if dev.eta_meas >= 1 else min(1.0, dev.p_dc / (1 - dev.eta_meas))
    p_dark = np.where(carries, cond_dark_carry, dev.p_dc)
    dark = ~survive & (rng.random(n) < p_dark)
    measured = herald & (survive | dark)
    faithful = herald & survive
    return measured, faithful


def prover_lab_batch(dev: DeviceParams, input_arrived, rng: np.random.Generator) -> LabBatch:
    """Vectorized laboratory pipeline for a batch of rounds."""
    arrived = np.asarray(input_arrived, dtype=bool)
    n = arrived.size
    if dev.presence_mode == "qnd":
        genuine = arrived & (rng.random(n) < dev.eta_det_qnd)
        denom = 1.0 - dev.eta_v * dev.eta_det_qnd
        p_dark = 0.0 if denom <= 0 else min(1.0, dev.p_dc_qnd / denom)
        dark = ~genuine & (rng.random(n) < p_dark)
        commit = genuine | dark
        measured, faithful = measurement_stage(dev, commit, genuine, rng)
        correction = np.full(n, "I")
    else:
        clicks, true_code, both = sample_bsm_patterns(arrived, dev.eta_det, dev.p_dc, rng)
        code = _classify_codes(clicks)
        commit = code > 0
        genuine = commit & both & (code == true_code)
        # the local EPR partner is always present to be measured
        measured, faithful = measurement_stage(dev, commit, np.ones(n, dtype=bool), rng)
        faithful &= genuine
        correction = _CORRECTION_BY_CODE[code]
    return LabBatch(commit, measured, faithful, correction)


def prover_lab_pipeline(dev: DeviceParams, input_arrived: bool, rng: np.random.Generator) -> LabOutcome:
    """Single-round laboratory pipeline (commit, measured, faithful, correction)."""
    return prover_lab_batch(dev, np.array([bool(input_arrived)]), rng).row(0)


@dataclass(frozen=True)
class EtaEstimate:
    eta_p: float
    p_commit: float
    se_eta_p: float
    se_p_commit: float
    committed: int
    trials: int


def empirical_eta_p(dev: DeviceParams, trials: int, rng: np.random.Generator, batch: int = 1_000_000) -> EtaEstimate:
    """Monte Carlo ``eta_P`` (measured given committed) and herald rate."""
    if trials < 10_000:
        raise DeviceError("use at least 10^4 trials")
    committed = measured = 0
    left = trials
    while left > 0:
        n = min(batch, left)
        arrived = rng.random(n) < dev.eta_v
        lab = prover_lab_batch(dev, arrived, rng)
        committed += int(lab.commit.sum())
        measured += int(lab.measured.sum())
        left -= n
    if committed == 0:
        raise UndefinedEstimate("no committed rounds")
    eta = measured / committed
    pc = committed / trials
    return EtaEstimate(
        eta_p=eta,
        p_commit=pc,
        se_eta_p=math.sqrt(max(eta * (1 - eta), 0.0) / committed),
        se_p_commit=math.sqrt(pc * (1 - pc) / trials),
        committed=committed,
        trials=trials,
    )
