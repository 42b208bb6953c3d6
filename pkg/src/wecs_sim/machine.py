"""Surface-mount PMSG electrical model and reference-frame transforms.

Amplitude-invariant Clarke convention, rotation matrix P(theta) =
[[cos, sin], [-sin, cos]] for the alphabeta -> dq step. All machine
quantities are peak-valued phase quantities. This is the truth plant:
it always uses the true R, L, never the assumed observer values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

__all__ = [
    "MachineParams",
    "FrameVector2",
    "ElectricalState",
    "clarke",
    "park",
    "inverse_park",
    "bemf_ab",
    "electromagnetic_torque",
    "current_derivatives",
]

TWO_PI = 2.0 * math.pi


class FrameVector2(NamedTuple):
    """Two-axis vector in either the alphabeta or the dq frame."""

    first: float
    second: float

    @property
    def norm(self) -> float:
        return math.hypot(self.first, self.second)


@dataclass
class MachineParams:
    """Electrical parameters of a non-salient PMSG plus converter limits.

    R: stator resistance (ohm), L: synchronous inductance (H),
    phi_f: PM flux linkage (Wb), p: pole pairs,
    V_dc: DC-link voltage (V), I_max: phase current limit (A, peak).
    """

    R: float
    L: float
    phi_f: float
    p: int
    V_dc: float
    I_max: float

    def __post_init__(self):
        for name in ("R", "L", "phi_f", "V_dc", "I_max"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"MachineParams.{name} must be positive")
        if self.p < 1:
            raise ValueError("MachineParams.p must be a positive integer")

    @property
    def v_limit(self) -> float:
        """Peak phase voltage available in linear modulation, V_dc/sqrt(3)."""
        return self.V_dc / math.sqrt(3.0)


@dataclass
class ElectricalState:
    """Stator currents in the stationary frame plus the electrical angle.

    theta_e is kept wrapped to [0, 2*pi) so trig arguments stay
    well-conditioned over arbitrarily long runs.
    """

    i_ab: FrameVector2 = field(default_factory=lambda: FrameVector2(0.0, 0.0))
    theta_e: float = 0.0

    def __post_init__(self):
        if not isinstance(self.i_ab, FrameVector2):
            self.i_ab = FrameVector2(*self.i_ab)
        self.theta_e = self.theta_e % TWO_PI


def clarke(i_abc) -> FrameVector2:
    """abc -> alphabeta, amplitude invariant (2/3 scaling).

    A balanced triple of peak I maps to a vector of norm I; the
    zero-sequence component is discarded.
    """
    a, b, c = i_abc
    alpha = (2.0 * a - b - c) / 3.0
    beta = (b - c) / math.sqrt(3.0)
    return FrameVector2(alpha, beta)


def park(theta: float, x_ab) -> FrameVector2:
    """Rotate a stationary-frame vector into the frame at angle theta."""
    ct, st = math.cos(theta), math.sin(theta)
    return FrameVector2(ct * x_ab[0] + st * x_ab[1], -st * x_ab[0] + ct * x_ab[1])


def inverse_park(theta: float, x_dq) -> FrameVector2:
    """Rotate a dq vector back to the stationary frame."""
    ct, st = math.cos(theta), math.sin(theta)
    return FrameVector2(ct * x_dq[0] - st * x_dq[1], st * x_dq[0] + ct * x_dq[1])


def bemf_ab(theta_e: float, omega: float, params: MachineParams) -> FrameVector2:
    """Back-EMF vector in alphabeta at mechanical speed omega (rad/s)."""
    amp = params.p * params.phi_f * omega
    return FrameVector2(-amp * math.sin(theta_e), amp * math.cos(theta_e))


def electromagnetic_torque(i_q: float, params: MachineParams) -> float:
    """Air-gap torque of the non-salient machine, 1.5*p*phi_f*i_q.

    Negative i_q means generation (power extraction) in the motor sign
    convention used throughout.
    """
    return 1.5 * params.p * params.phi_f * i_q


def current_derivatives(state: ElectricalState, v_ab, omega: float,
                        params: MachineParams) -> FrameVector2:
    """di/dt in alphabeta: (v - R*i - e)/L per axis, with e from bemf_ab."""
    e_ab = bemf_ab(state.theta_e, omega, params)
    dia = (v_ab[0] - params.R * state.i_ab[0] - e_ab[0]) / params.L
    dib = (v_ab[1] - params.R * state.i_ab[1] - e_ab[1]) / params.L
    return FrameVector2(dia, dib)
