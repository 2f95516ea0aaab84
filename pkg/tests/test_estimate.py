import math

import numpy as np
import pytest

from cqpv.estimate import (
    EstimateError,
    EstimateInputs,
    eta_p_closed_form,
    eta_p_formula,
    eta_p_snr_approx,
    eta_p_upper_bsm,
    fiber_length,
    fiber_transmission,
    protocol_duration,
    snr_qnd,
    sweep_rows,
)


def test_eta_p_zero_dark_counts_is_eta_meas():
    inp = EstimateInputs(eta_v=0.01, eta_det=0.8, eta_det_qnd=0.5, p_dc=0.0, p_dc_qnd=0.0, eta_surv=0.7, eta_equip=0.9)
    assert abs(eta_p_closed_form(inp) - 0.8 * 0.7 * 0.9) < 1e-15


def test_eta_p_small_eta_v_limit():
    for p_dc in (1e-6, 1e-3, 0.05):
        val = eta_p_formula(1e-15, 0.8, 0.9, p_dc, 1e-4)
        assert abs(val - p_dc) < 1e-9


def test_eta_p_snr_form():
    # gamma = 10, eta_qnd = 0.9, p_dc ~ 0
    p_qnd = 1e-6
    val = eta_p_formula(10 * p_qnd, 0.7, 0.9, 0.0, p_qnd)
    assert abs(val - 0.9 * 0.7) < 1e-12
    assert abs(eta_p_snr_approx(10, 0.9, 0.7) - 0.63) < 1e-12


def test_eta_p_zero_denominator():
    with pytest.raises(EstimateError):
        eta_p_formula(0.0, 0.8, 0.9, 0.0, 0.0)


def test_snr_examples():
    assert snr_qnd(0, 0.9) == 0
    assert abs(snr_qnd(10, 0.9) - 0.9) < 1e-15
    assert abs(snr_qnd(1e12, 0.9) - 1) < 1e-11
    assert snr_qnd(math.inf, 0.9) == 1.0


def test_fiber_length_examples():
    assert abs(fiber_length(0.2, 10, 1e-7) - 300.0) < 1e-9
    assert abs(fiber_length(0.14, 10, 1e-7) - 6 * 10 / 0.14) < 1e-9
    assert 400 <= fiber_length(0.14, 10, 1e-7) <= 450
    assert fiber_length(0.2, 1.0, 1.0) == 0.0
    with pytest.raises(EstimateError):
        fiber_length(0.2, 20, 0.1)
    # the length is where transmission equals gamma * p_dc_qnd
    L = fiber_length(0.17, 5, 2e-6)
    assert abs(fiber_transmission(0.17, L) - 1e-5) < 1e-17


def test_protocol_duration_examples():
    assert protocol_duration(2, 1.0, 1e6, "S3") == 5120 / 1e6
    assert abs(protocol_duration(3, 0.01, 1e6, "S3") - 2.592) < 1e-12
    assert abs(protocol_duration(3, 0.01, 1e6, "S2") - 0.864) < 1e-12
    assert protocol_duration(2, 1.0, math.inf) == 0.0
    with pytest.raises(EstimateError):
        protocol_duration(2, 0.0, 1e6)


def test_monotone_in_eta_v_and_eta_meas():
    grid = np.linspace(0.05, 0.95, 5)
    for p_dc in (0.0, 1e-3, 0.02):
        for p_qnd in (1e-4, 1e-2):
            vals_v = [eta_p_formula(v, 0.6, 0.8, p_dc, p_qnd) for v in grid]
            vals_m = [eta_p_formula(0.1, m, 0.8, p_dc, p_qnd) for m in grid]
            assert np.all(np.diff(vals_v) >= -1e-15)
            assert np.all(np.diff(vals_m) >= -1e-15)


def test_upper_bound_partial_bsm():
    # holds with eta_qnd = eta_det^2, eta_meas <= eta_det and no measurement dark counts
    rng = np.random.default_rng(0)
    for _ in range(500):
        eta_det = rng.uniform(0.1, 1)
        p_qnd = 10 ** rng.uniform(-8, -2)
        gamma = 10 ** rng.uniform(-1, 3)
        eta_meas = eta_det * rng.uniform(0, 1)
        val = eta_p_formula(gamma * p_qnd, eta_meas, eta_det**2, 0.0, p_qnd)
        assert val <= eta_p_upper_bsm(gamma, eta_det) + 1e-15


def test_sweep_rows():
    rows = sweep_rows(EstimateInputs(), {"eta_v": [1e-6, 1e-5], "p_dc_qnd": [1e-7, 1e-6]})
    assert len(rows) == 4
    assert all(0 <= r["eta_p"] <= 1 for r in rows)
