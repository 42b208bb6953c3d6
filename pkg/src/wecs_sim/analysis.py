"""Closed-form robustness predictions and energy metrics.

These are the oracles the simulator gets checked against: the
steady-state frame misalignment caused by parameter offsets, the
resulting true current equilibrium, and the harvested-energy /
annual-production bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .aero import AeroParams
from .machine import MachineParams
from .wind import WindSeries

__all__ = [
    "MisalignmentPrediction",
    "EquilibriumCurrents",
    "EnergyReport",
    "misalignment",
    "equilibrium_currents",
    "optimal_energy",
    "energy_efficiency",
    "annual_energy_production",
    "dc_power",
    "HOURS_PER_YEAR",
]

HOURS_PER_YEAR = 8760.0


@dataclass
class MisalignmentPrediction:
    """BEMF-estimate decomposition x, y and the frame lag phi (rad)."""

    x: float
    y: float
    phi: float
    amplitude: float


@dataclass
class EquilibriumCurrents:
    i_d_star: float
    i_q_star: float


@dataclass
class EnergyReport:
    """Harvested energy W, ideal-capture energy W_opt (J) and their ratio."""

    W: float
    W_opt: float
    eta_E: float


def misalignment(i_dq_star, delta_R: float, delta_L: float, omega: float,
                 params: MachineParams) -> MisalignmentPrediction:
    """Steady-state lag between the true dq frame and the observer frame.

    x and y are the rotating/quadrature components of the BEMF estimate;
    the two-branch arctan keeps phi continuous through x <= 0.
    """
    i_d, i_q = i_dq_star
    pw = params.p * omega
    x = pw * (params.phi_f - i_d * delta_L) - delta_R * i_q
    y = -i_d * delta_R + i_q * pw * delta_L
    if x == 0.0 and y == 0.0:
        raise ValueError("zero BEMF estimate: misalignment phase undefined")
    if x > 0.0:
        phi = -math.atan(y / x)
    else:
        ratio = y / x if x != 0.0 else -math.copysign(math.inf, y)
        phi = -math.atan(ratio) + math.pi
    return MisalignmentPrediction(x=x, y=y, phi=phi,
                                  amplitude=math.hypot(x, y))


def equilibrium_currents(i_q_ref: float, delta_L: float,
                         params: MachineParams) -> EquilibriumCurrents:
    """True dq currents reached when the controller tracks in the
    misaligned frame.

    Valid in the small-lag regime; at delta_L = 0 the frame error
    vanishes structurally and the reference is returned unchanged.
    """
    if delta_L == 0.0:
        return EquilibriumCurrents(0.0, i_q_ref)
    phi_f = params.phi_f
    i_d = delta_L * i_q_ref * i_q_ref / phi_f
    inner = phi_f * math.sqrt(4.0 * delta_L * delta_L * i_q_ref * i_q_ref
                              + phi_f * phi_f) - phi_f * phi_f
    i_q = math.copysign(math.sqrt(inner / (2.0 * delta_L * delta_L)), i_q_ref) \
        if i_q_ref != 0.0 else 0.0
    return EquilibriumCurrents(i_d, i_q)


def optimal_energy(series: WindSeries, aero: AeroParams) -> float:
    """Ideal harvest over the record: trapezoid of 0.5*rho*A*v^3*cp_max."""
    p_opt = 0.5 * aero.rho_air * aero.area * series.samples ** 3 * aero.cp_max
    return float(np.trapezoid(p_opt, dx=series.dt))


def energy_efficiency(p_dc, dt: float, W_opt: float) -> EnergyReport:
    """Harvested energy from a sampled DC power trace, relative to W_opt."""
    if W_opt <= 0.0:
        raise ValueError("W_opt must be positive")
    W = float(np.trapezoid(np.asarray(p_dc, dtype=float), dx=dt))
    return EnergyReport(W=W, W_opt=W_opt, eta_E=W / W_opt)


def annual_energy_production(power_curve, v_mean: float,
                             v_cut: float) -> float:
    """Truncated AEP in kWh for a Rayleigh wind-speed distribution.

    power_curve: (v_w, P_dc) samples in m/s and W. Bins of 0.5 m/s up to
    v_cut, midpoint power, flat extension outside the sampled range.
    """
    curve = np.asarray(power_curve, dtype=float)
    if curve.size == 0:
        raise ValueError("empty power curve")
    if v_mean <= 0.0:
        raise ValueError("v_mean must be positive")
    v_grid, p_grid = curve[:, 0], curve[:, 1]
    edges = np.arange(0.0, v_cut + 1e-9, 0.5)
    if edges[-1] < v_cut:
        edges = np.append(edges, v_cut)
    # Rayleigh CDF parameterized by the mean speed
    cdf = 1.0 - np.exp(-(math.pi / 4.0) * (edges / v_mean) ** 2)
    mids = 0.5 * (edges[:-1] + edges[1:])
    p_mid = np.interp(mids, v_grid, p_grid)
    energy_w = float(np.sum(p_mid * np.diff(cdf)))
    return HOURS_PER_YEAR * energy_w / 1000.0


def dc_power(v_dq, i_dq) -> float:
    """DC-bus power of the lossless average-value converter.

    Positive when the machine generates (power flows to the bus);
    amplitude-invariant frames carry the 3/2 factor.
    """
    return -1.5 * (v_dq[0] * i_dq[0] + v_dq[1] * i_dq[1])
