"""Torque scheduling, the inner current loop, and the gain certificate."""

import dataclasses
import math

import pytest

from wecs_sim import (
    AeroParams,
    ControllerGains,
    ControllerState,
    current_control_step,
    default_gains,
    optimal_torque_gain,
    otc_reference,
    stability_certificate,
    theorem1_kp_bound,
)


def test_optimal_torque_gain_frozen_value(table_aero):
    # 0.5 * rho * pi * R^5 * cp_max / lambda_opt^3 with the table numbers
    k = optimal_torque_gain(table_aero)
    expect = 0.5 * 1.204 * math.pi * 1.2**5 * 0.33 / 5.75**3
    assert k == pytest.approx(expect, rel=1e-12)
    assert k == pytest.approx(0.008168889096929201, rel=1e-12)


def test_otc_reference_schedule(table_machine):
    K = 0.008168889096929201
    ref = otc_reference(28.75, K, table_machine)
    assert ref.first == 0.0
    assert ref.second == pytest.approx(-2.0 * K * 28.75**2 / (3.0 * 8 * 0.11), rel=1e-12)
    # quadratic schedule saturates at the current rating
    assert otc_reference(80.0, K, table_machine).second == pytest.approx(-20.0)
    assert otc_reference(0.0, K, table_machine).second == 0.0


def test_current_step_uses_pre_update_integrator(table_machine):
    gains = ControllerGains(k_p=2.0, k_i=100.0, K=0.008)
    v, new = current_control_step((1.0, -2.0), ControllerState(), gains, 1e-4, table_machine)
    assert v.first == pytest.approx(-2.0)
    assert v.second == pytest.approx(4.0)
    assert new.x_id == pytest.approx(1e-4)
    assert new.x_iq == pytest.approx(-2e-4)
    assert new.v_dq_cmd == v
    # second call folds the accumulated integral into the command
    v2, _ = current_control_step((1.0, -2.0), new, gains, 1e-4, table_machine)
    assert v2.first == pytest.approx(-2.0 - 100.0 * 1e-4)


def test_current_step_clamps_and_freezes(table_machine):
    gains = ControllerGains(k_p=1000.0, k_i=5000.0, K=0.008)
    v, new = current_control_step((1.0, -2.0), ControllerState(), gains, 1e-4, table_machine)
    assert math.hypot(v.first, v.second) == pytest.approx(table_machine.v_limit, rel=1e-12)
    # direction preserved: v parallel to the raw command (-1000, 2000)
    assert v.first * 2000.0 == pytest.approx(v.second * -1000.0, abs=1e-9)
    # integrators hold while the limiter is active
    assert new.x_id == 0.0
    assert new.x_iq == 0.0


def test_theorem_bound_frozen(table_machine):
    a, kp_min = theorem1_kp_bound(table_machine, 0.008, (0.0, -20.0))
    assert a == pytest.approx(1.1902432574930577, rel=1e-12)
    assert kp_min == pytest.approx(a - 0.42, rel=1e-12)


def test_theorem_bound_zero_reference(table_machine):
    # with zero reference the radical collapses and a = 0, so kp_min = -R
    a, kp_min = theorem1_kp_bound(table_machine, 0.008, (0.0, 0.0))
    assert a == pytest.approx(0.0, abs=1e-12)
    assert kp_min == pytest.approx(-0.42, rel=1e-12)


def test_certificate_flips_at_the_bound(table_machine):
    _, kp_min = theorem1_kp_bound(table_machine, 0.008, (0.0, -20.0))
    good = ControllerGains(k_p=1.10 * kp_min, k_i=200.0, K=0.008)
    bad = ControllerGains(k_p=0.90 * kp_min, k_i=200.0, K=0.008)
    rep = stability_certificate(table_machine, 0.008, 0.66, good, (0.0, -20.0))
    assert rep.certified and rep.worst_eigenvalue < 0.0
    assert rep.kp_min == pytest.approx(kp_min, rel=1e-12)
    rep2 = stability_certificate(table_machine, 0.008, 0.66, bad, (0.0, -20.0))
    assert not rep2.certified and rep2.worst_eigenvalue >= 0.0


def test_default_gains_rule(table_machine, table_aero):
    g = default_gains(table_machine, table_aero)
    worst = dataclasses.replace(table_machine, R=0.2, L=2e-3)
    _, kp_min = theorem1_kp_bound(worst, table_aero.b, (0.0, -20.0))
    assert g.k_p == pytest.approx(2.0 * kp_min, rel=1e-12)
    assert g.k_p == pytest.approx(8.902038821499051, rel=1e-12)
    assert g.k_i == pytest.approx(g.k_p / 5e-3, rel=1e-12)
    assert g.K == pytest.approx(optimal_torque_gain(table_aero), rel=1e-12)
    assert default_gains(table_machine, table_aero, K=0.005).K == 0.005
