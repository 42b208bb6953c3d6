"""Sliding-mode current observer, BEMF/speed observer, equivalent Park frame.

Everything here runs on the assumed parameters R_o, L_o; the true R, L
of the plant never enter. The switching signal of the sliding observer
carries the BEMF once sliding occurs, the second observer smooths it
and adapts an electrical-speed estimate, and the normalized BEMF vector
gives the rotation used in place of an encoder-based Park transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .aero import AeroParams
from .machine import FrameVector2, MachineParams

__all__ = [
    "UncertaintyBounds",
    "ObserverParams",
    "ObserverState",
    "smo_step",
    "robust_l1_bound",
    "bemf_speed_step",
    "equivalent_park",
    "bemf_ceiling",
    "EPS_AMP",
]

# amplitude guard for the BEMF normalization
EPS_AMP = 1e-6


@dataclass
class UncertaintyBounds:
    """Box the true R and L are assumed to live in."""

    R_min: float = 0.2
    R_max: float = 0.8
    L_min: float = 0.5e-3
    L_max: float = 2.0e-3

    def __post_init__(self):
        if not 0.0 < self.R_min <= self.R_max:
            raise ValueError("need 0 < R_min <= R_max")
        if not 0.0 < self.L_min <= self.L_max:
            raise ValueError("need 0 < L_min <= L_max")

    @property
    def delta_R(self) -> float:
        return self.R_max - self.R_min

    @property
    def delta_L(self) -> float:
        return self.L_max - self.L_min


@dataclass
class ObserverParams:
    """Assumed electrical parameters and observer gains.

    sign_mode selects the switching nonlinearity: "boundary_layer"
    saturates over a band of half-width phi_bl (A); "pure" uses the
    discontinuous sign.
    """

    R_o: float
    L_o: float
    l1: float = 30.0
    l2: float = 100.0
    l3: float = 10.0
    bounds: UncertaintyBounds = field(default_factory=UncertaintyBounds)
    sign_mode: str = "boundary_layer"
    phi_bl: float = 0.05

    def __post_init__(self):
        for name in ("R_o", "L_o", "l1", "l2", "l3"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"ObserverParams.{name} must be positive")
        if self.sign_mode not in ("boundary_layer", "pure"):
            raise ValueError("sign_mode must be 'boundary_layer' or 'pure'")
        if self.sign_mode == "boundary_layer" and self.phi_bl <= 0.0:
            raise ValueError("phi_bl must be positive in boundary_layer mode")

    @property
    def bl_width(self) -> float:
        """Effective saturation half-width (0 in pure-sign mode)."""
        return self.phi_bl if self.sign_mode == "boundary_layer" else 0.0


@dataclass
class ObserverState:
    """Current/BEMF estimates, speed estimate and switching carrier."""

    i_hat_ab: FrameVector2 = FrameVector2(0.0, 0.0)
    e_hat_ab: FrameVector2 = FrameVector2(0.0, 0.0)
    omega_e_hat: float = 0.0
    z_ab: FrameVector2 = FrameVector2(0.0, 0.0)


def _sgn_b(s: float, half_width: float) -> float:
    if half_width > 0.0 and abs(s) < half_width:
        return s / half_width
    return math.copysign(1.0, s) if s != 0.0 else 0.0


def smo_step(state: ObserverState, i_ab_meas, v_ab, obs: ObserverParams,
             dt: float) -> Tuple[FrameVector2, FrameVector2]:
    """One forward-Euler step of the sliding current observer.

    Returns the advanced current estimate and the switching signal
    z = l1*sgn_b(i_hat - i_meas) applied during the step.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    hw = obs.bl_width
    out_i, out_z = [], []
    for axis in range(2):
        s = state.i_hat_ab[axis] - i_ab_meas[axis]
        z = obs.l1 * _sgn_b(s, hw)
        di = (v_ab[axis] - obs.R_o * state.i_hat_ab[axis] - z) / obs.L_o
        out_i.append(state.i_hat_ab[axis] + dt * di)
        out_z.append(z)
    return FrameVector2(*out_i), FrameVector2(*out_z)


def robust_l1_bound(bounds: UncertaintyBounds, L_o: float, E_max: float,
                    V_max: float, I_max: float) -> float:
    """Minimal sliding gain that keeps s*ds/dt < 0 under the bounds."""
    if min(E_max, V_max, I_max) < 0.0:
        raise ValueError("extreme amplitudes must be non-negative")
    return ((L_o / bounds.L_min) * E_max
            + (bounds.R_max * bounds.delta_L / bounds.L_min
               + bounds.delta_R) * I_max
            + (bounds.delta_L / bounds.L_min) * V_max)


def bemf_speed_step(state: ObserverState, z_ab, l2: float, l3: float,
                    dt: float) -> Tuple[FrameVector2, float]:
    """One forward-Euler step of the BEMF filter and speed adaptation."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    ea, eb = state.e_hat_ab
    we = state.omega_e_hat
    ra = ea - z_ab[0]
    rb = eb - z_ab[1]
    ea_new = ea + dt * (-we * eb - l2 * ra)
    eb_new = eb + dt * (we * ea - l2 * rb)
    we_new = we + dt * l3 * (ra * eb - rb * ea)
    return FrameVector2(ea_new, eb_new), we_new


def equivalent_park(e_hat_ab, eps_amp: float = EPS_AMP):
    """Rotation built from the normalized BEMF estimate.

    Returns (2x2 matrix, degenerate flag); the flag marks an amplitude
    below eps_amp, where the normalization guard binds and the matrix is
    no longer orthonormal.
    """
    ea, eb = e_hat_ab
    amp = math.hypot(ea, eb)
    degenerate = amp < eps_amp
    scale = 1.0 / max(amp, eps_amp)
    mat = np.array([[eb * scale, -ea * scale],
                    [ea * scale, eb * scale]])
    return mat, degenerate


def bemf_ceiling(machine: MachineParams, aero: AeroParams,
                 v_w_max: float) -> float:
    """Largest BEMF amplitude over the operating envelope.

    Evaluated at the optimal tip-speed ratio for the highest wind speed
    the scenarios may reach: E_max = p*phi_f*lambda_opt*v_w_max/R_r.
    """
    omega_max = aero.lambda_opt * v_w_max / aero.R_r
    return machine.p * machine.phi_f * omega_max
