"""Closed-form engineering estimates for the prover laboratory and link.

Dark-count convention: a dark-count probability already includes the factor
for the genuine photon not being registered, so no extra ``(1 - eta)``
factors appear below.  ``gamma_snr`` always denotes the ratio
``eta_V / p_dc_qnd`` (not the secure-region curve).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Sequence


class EstimateError(ValueError):
    pass


def _check_prob(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise EstimateError(f"{name}={value} outside [0, 1]")


@dataclass(frozen=True)
class EstimateInputs:
    eta_v: float = 1e-6
    eta_det: float = 0.9
    eta_det_qnd: float = 0.81
    p_dc: float = 1e-7
    p_dc_qnd: float = 1e-7
    eta_surv: float = 1.0
    eta_equip: float = 1.0
    alpha_fiber: float = 0.2
    nu: float = 1e6
    p_commit: float = 0.01
    k: int = 10

    def __post_init__(self):
        for name in ("eta_v", "eta_det", "eta_det_qnd", "p_dc", "p_dc_qnd", "eta_surv", "eta_equip", "p_commit"):
            _check_prob(name, getattr(self, name))
        if self.alpha_fiber <= 0:
            raise EstimateError("fiber attenuation must be positive")

    @property
    def eta_meas(self) -> float:
        return self.eta_det * self.eta_equip * self.eta_surv

    @property
    def gamma_snr(self) -> float:
        return math.inf if self.p_dc_qnd == 0 else self.eta_v / self.p_dc_qnd


def eta_p_formula(eta_v: float, eta_meas: float, eta_det_qnd: float, p_dc: float, p_dc_qnd: float) -> float:
    """P[photon measured | presence detected].

    ``((eta_meas + p_dc) eta_V eta_qnd + p_dc p_dc_qnd) / (eta_V eta_qnd + p_dc_qnd)``
    """
    signal = eta_v * eta_det_qnd
    den = signal + p_dc_qnd
    if den <= 0:
        raise EstimateError("no heralds possible: eta_V * eta_det_qnd + p_dc_qnd = 0")
    return ((eta_meas + p_dc) * signal + p_dc * p_dc_qnd) / den


def eta_p_closed_form(inp: EstimateInputs) -> float:
    return eta_p_formula(inp.eta_v, inp.eta_meas, inp.eta_det_qnd, inp.p_dc, inp.p_dc_qnd)


def herald_probability(inp: EstimateInputs) -> float:
    """Probability that presence detection fires (``p_commit`` of the lab model)."""
    return inp.eta_v * inp.eta_det_qnd + inp.p_dc_qnd


def snr_qnd(gamma_snr: float, eta_det_qnd: float) -> float:
    """Signal fraction of presence-detection heralds, ``g e / (g e + 1)``."""
    if gamma_snr < 0:
        raise EstimateError("gamma_snr must be non-negative")
    if math.isinf(gamma_snr):
        return 1.0 if eta_det_qnd > 0 else 0.0
    x = gamma_snr * eta_det_qnd
    return x / (x + 1.0)


def eta_p_snr_approx(gamma_snr: float, eta_det_qnd: float, eta_meas: float) -> float:
    """Small-dark-count approximation ``SNR * eta_meas``."""
    return snr_qnd(gamma_snr, eta_det_qnd) * eta_meas


def eta_p_upper_bsm(gamma_snr: float, eta_det: float) -> float:
    """Ceiling ``g e^3 / (g e^2 + 1)`` for a partial-BSM presence detector
    (``eta_det_qnd = eta_det**2`` and ``eta_meas <= eta_det``)."""
    return snr_qnd(gamma_snr, eta_det**2) * eta_det


def fiber_transmission(alpha_fiber: float, length_km: float) -> float:
    return 10.0 ** (-alpha_fiber * length_km / 10.0)


def fiber_length(alpha_fiber: float, gamma_snr: float, p_dc_qnd: float) -> float:
    """Longest fiber (km) whose transmission still reaches ``gamma * p_dc_qnd``.

    Raises :class:`EstimateError` when ``gamma * p_dc_qnd`` is not in ``(0, 1]``;
    a value of exactly 1 gives length 0.
    """
    if alpha_fiber <= 0:
        raise EstimateError("fiber attenuation must be positive")
    arg = gamma_snr * p_dc_qnd
    if not 0 < arg <= 1:
        raise EstimateError(f"gamma*p_dc_qnd={arg} gives a non-positive length")
    return -(10.0 / alpha_fiber) * math.log10(arg)


def committed_round_target(k: int, model: str = "S3") -> int:
    exponent = {"S2": 3, "S3": 4}.get(model)
    if exponent is None:
        raise EstimateError(f"duration defined for S2 and S3, got {model!r}")
    return 320 * k**exponent


def protocol_duration(k: int, p_commit: float, nu: float, model: str = "S3") -> float:
    """Expected wall time in seconds to collect the committed-round budget."""
    if p_commit <= 0 or nu <= 0:
        raise EstimateError("p_commit and nu must be positive")
    if math.isinf(nu):
        return 0.0
    return committed_round_target(k, model) / (p_commit * nu)


TABLE_COLUMNS = (
    "eta_v",
    "eta_det",
    "eta_det_qnd",
    "p_dc",
    "p_dc_qnd",
    "eta_meas",
    "gamma_snr",
    "snr_qnd",
    "eta_p",
    "eta_p_snr_approx",
    "p_herald",
    "p_commit",
    "fiber_length_km",
    "duration_s2_s",
    "duration_s3_s",
)


def estimate_row(inp: EstimateInputs) -> dict:
    """One row of the parameter table emitted by the ``estimate`` command."""
    g = inp.gamma_snr
    try:
        length = fiber_length(inp.alpha_fiber, g, inp.p_dc_qnd)
    except EstimateError:
        length = float("nan")
    row = {
        "eta_v": inp.eta_v,
        "eta_det": inp.eta_det,
        "eta_det_qnd": inp.eta_det_qnd,
        "p_dc": inp.p_dc,
        "p_dc_qnd": inp.p_dc_qnd,
        "eta_meas": inp.eta_meas,
        "gamma_snr": g,
        "snr_qnd": snr_qnd(g, inp.eta_det_qnd),
        "eta_p": eta_p_closed_form(inp),
        "eta_p_snr_approx": eta_p_snr_approx(g, inp.eta_det_qnd, inp.eta_meas),
        "p_herald": herald_probability(inp),
        "p_commit": inp.p_commit,
        "fiber_length_km": length,
        "duration_s2_s": protocol_duration(inp.k, inp.p_commit, inp.nu, "S2") if inp.p_commit > 0 else math.inf,
        "duration_s3_s": protocol_duration(inp.k, inp.p_commit, inp.nu, "S3") if inp.p_commit > 0 else math.inf,
    }
    return row


def sweep_rows(base: EstimateInputs, sweeps: dict[str, Sequence[float]]) -> list[dict]:
    """Cartesian sweep over the named ``EstimateInputs`` fields."""
    names = list(sweeps)
    rows = []
    for combo in itertools.product(*(sweeps[n] for n in names)):
        rows.append(estimate_row(replace(base, **dict(zip(names, combo)))))
    return rows
