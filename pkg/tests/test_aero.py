"""Rotor aerodynamics: cp family, blade torque, mechanical balance."""

import math

import numpy as np
import pytest

from wecs_sim import (
    AeroParams,
    CpCurve,
    aero_power,
    blade_torque,
    cp,
    rotor_derivative,
    tsr,
)
from wecs_sim.aero import EPS_OMEGA


def test_calibrated_curve_peaks_at_design_point():
    curve = CpCurve.calibrated(5.75, 0.33)
    assert cp(curve, 5.75) == pytest.approx(0.33, rel=1e-9)
    lam = np.linspace(0.05, 25.0, 4001)
    vals = cp(curve, lam)
    k = int(np.argmax(vals))
    assert abs(lam[k] - 5.75) < 0.01
    assert np.all(vals <= 0.33 + 1e-9)
    assert np.all(vals >= 0.0)


def test_cp_edges():
    curve = CpCurve.calibrated(5.75, 0.33)
    assert cp(curve, 0.0) == 0.0
    assert cp(curve, 25.0) == 0.0  # past the positive root
    with pytest.raises(ValueError):
        cp(curve, -1.0)


def test_cp_from_table_tracks_source_curve(tmp_path):
    curve = CpCurve.calibrated(5.75, 0.33)
    lam = np.linspace(0.0, 20.0, 81)
    path = tmp_path / "cp.csv"
    np.savetxt(path, np.column_stack([lam, cp(curve, lam)]),
               delimiter=",", header="lambda,cp", comments="")
    tab = CpCurve.from_table(path)
    probe = np.linspace(0.2, 12.0, 57)
    assert np.max(np.abs(cp(tab, probe) - cp(curve, probe))) < 5e-4


def test_cp_table_rejects_bad_input(tmp_path):
    path = tmp_path / "cp.csv"
    path.write_text("0,0\n5,0.3\n10,0.1\n15,0\n")  # missing header
    with pytest.raises(ValueError):
        CpCurve.from_table(path)
    path.write_text("lambda,cp\n0,0\n5,0.3\n")  # too few rows
    with pytest.raises(ValueError):
        CpCurve.from_table(path)
    path.write_text("lambda,cp\n0,0\n5,0.3\n4,0.2\n8,0.1\n")  # grid not increasing
    with pytest.raises(ValueError):
        CpCurve.from_table(path)
    path.write_text("lambda,cp\n0,0\n5,0.7\n8,0.3\n10,0\n")  # beyond Betz
    with pytest.raises(ValueError):
        CpCurve.from_table(path)


def test_aero_params_validate():
    with pytest.raises(ValueError):
        AeroParams(cp_max=0.7)
    with pytest.raises(ValueError):
        AeroParams(rho_air=-1.0)
    with pytest.raises(ValueError):
        AeroParams(cp_curve=CpCurve.calibrated(5.75, 0.30))  # peak disagrees with cp_max


def test_tsr_basics():
    assert tsr(28.75, 6.0, 1.2) == pytest.approx(5.75, rel=1e-12)
    with pytest.raises(ValueError):
        tsr(1.0, 0.0, 1.2)
    with pytest.raises(ValueError):
        tsr(-1.0, 6.0, 1.2)


def test_power_at_design_point(table_aero):
    v = 6.0
    omega = 5.75 * v / 1.2
    expect = 0.5 * 1.204 * math.pi * 1.2**2 * v**3 * 0.33
    assert aero_power(v, omega, table_aero) == pytest.approx(expect, rel=1e-9)
    assert expect == pytest.approx(194.1228, rel=1e-4)


def test_blade_torque_speed_floor(table_aero):
    # below the floor the torque conversion divides by EPS_OMEGA, not omega
    pw = aero_power(6.0, 0.05, table_aero)
    assert blade_torque(6.0, 0.05, table_aero) == pytest.approx(pw / EPS_OMEGA, rel=1e-12)
    pw2 = aero_power(6.0, 20.0, table_aero)
    assert blade_torque(6.0, 20.0, table_aero) == pytest.approx(pw2 / 20.0, rel=1e-12)


def test_rotor_derivative_balance(table_aero):
    # (tau_b + tau_g - b*omega) / J = (10 - 5 - 0.008*20) / 0.66
    got = rotor_derivative(20.0, 10.0, -5.0, table_aero)
    assert got == pytest.approx((10.0 - 5.0 - 0.16) / 0.66, rel=1e-12)
