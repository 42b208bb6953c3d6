"""Sliding-mode current observer and the tracking loop behind it."""

import math

import numpy as np
import pytest

from wecs_sim import (
    FrameVector2,
    ObserverParams,
    ObserverState,
    UncertaintyBounds,
    bemf_ceiling,
    bemf_speed_step,
    equivalent_park,
    robust_l1_bound,
    smo_step,
)


def test_bounds_widths():
    ub = UncertaintyBounds()
    assert ub.delta_R == pytest.approx(0.6)
    assert ub.delta_L == pytest.approx(1.5e-3)
    with pytest.raises(ValueError):
        UncertaintyBounds(R_min=0.9, R_max=0.8)
    with pytest.raises(ValueError):
        UncertaintyBounds(L_min=0.0, L_max=2e-3)


def test_observer_params_validate():
    with pytest.raises(ValueError):
        ObserverParams(R_o=0.42, L_o=1e-3, sign_mode="relay")
    with pytest.raises(ValueError):
        ObserverParams(R_o=0.42, L_o=1e-3, l1=-1.0)
    assert ObserverParams(R_o=0.42, L_o=1e-3).bl_width == pytest.approx(0.05)
    assert ObserverParams(R_o=0.42, L_o=1e-3, sign_mode="pure").bl_width == 0.0


def test_smo_step_saturated_oracle():
    obs = ObserverParams(R_o=0.42, L_o=1e-3)
    i_new, z = smo_step(ObserverState(), (1.0, 0.0), (5.0, 0.0), obs, 1e-4)
    # s = (-1, 0) sits outside the 0.05 layer so z = -l1 on alpha, then one
    # Euler step with di = (5 - 0 + 30)/1e-3 lands at 3.5
    assert z.first == pytest.approx(-30.0)
    assert z.second == 0.0
    assert i_new.first == pytest.approx(3.5, rel=1e-12)


def test_smo_step_linear_inside_layer():
    obs = ObserverParams(R_o=0.42, L_o=1e-3)
    st = ObserverState(i_hat_ab=FrameVector2(1e-3, 0.0))
    _, z = smo_step(st, (0.0, 0.0), (0.0, 0.0), obs, 1e-4)
    assert z.first == pytest.approx(30.0 * (1e-3 / 0.05), rel=1e-12)


def test_smo_step_pure_sign():
    obs = ObserverParams(R_o=0.42, L_o=1e-3, sign_mode="pure")
    st = ObserverState(i_hat_ab=FrameVector2(1e-3, -1e-3))
    _, z = smo_step(st, (0.0, 0.0), (0.0, 0.0), obs, 1e-4)
    assert z.first == 30.0
    assert z.second == -30.0


def test_robust_injection_bound_frozen(table_machine):
    ub = UncertaintyBounds()
    e_max = 8 * 0.11 * 5.75 * 10.0 / 1.2
    v_max = table_machine.v_limit
    got = robust_l1_bound(ub, 1e-3, e_max, v_max, 20.0)
    # (L_o/L_min)*E + (R_max*dL/L_min + dR)*I + (dL/L_min)*V
    expect = 2.0 * e_max + (0.8 * 1.5e-3 / 0.5e-3 + 0.6) * 20.0 + 3.0 * v_max
    assert got == pytest.approx(expect, rel=1e-12)
    assert got == pytest.approx(230.93587371177722, rel=1e-12)


def test_robust_injection_bound_degenerate():
    # zero parameter spread and matched L_o leaves only the bemf term
    ub = UncertaintyBounds(R_min=0.42, R_max=0.42, L_min=1e-3, L_max=1e-3)
    assert robust_l1_bound(ub, 1e-3, 42.0, 28.9, 20.0) == pytest.approx(42.0, rel=1e-12)


def test_bemf_ceiling(table_machine, table_aero):
    got = bemf_ceiling(table_machine, table_aero, 10.0)
    assert got == pytest.approx(8 * 0.11 * 5.75 * 10.0 / 1.2, rel=1e-12)


def test_tracker_step_oracle():
    st = ObserverState(e_hat_ab=FrameVector2(0.0, 10.0), omega_e_hat=100.0)
    e_new, w_new = bemf_speed_step(st, (0.0, 9.0), 100.0, 10.0, 1e-3)
    # de_a = -w*e_b - l2*(e_a - z_a) = -1000
    # de_b =  w*e_a - l2*(e_b - z_b) = -100
    # dw   = l3*((e_a - z_a)*e_b - (e_b - z_b)*e_a) = 0
    assert e_new.first == pytest.approx(-1.0)
    assert e_new.second == pytest.approx(9.9)
    assert w_new == pytest.approx(100.0)


def test_tracker_turns_toward_the_injection():
    st = ObserverState(e_hat_ab=FrameVector2(1.0, 0.0), omega_e_hat=0.0)
    _, w_new = bemf_speed_step(st, (0.0, 1.0), 0.0, 10.0, 1e-3)
    assert w_new > 0.0


def test_equivalent_park_properties():
    P, degenerate = equivalent_park((3.0, 4.0))
    assert not degenerate
    assert np.allclose(P @ P.T, np.eye(2), atol=1e-12)
    assert np.linalg.det(P) == pytest.approx(1.0, rel=1e-12)
    # scale invariant
    P2, _ = equivalent_park((30.0, 40.0))
    assert np.allclose(P, P2, atol=1e-12)
    # an aligned estimate maps the bemf onto the q axis
    e_dq = P @ np.array([3.0, 4.0])
    assert e_dq[0] == pytest.approx(0.0, abs=1e-12)
    assert e_dq[1] == pytest.approx(5.0, rel=1e-12)


def test_equivalent_park_degenerate_flag():
    P, degenerate = equivalent_park((0.0, 0.0))
    assert degenerate
    assert np.all(np.isfinite(P))
