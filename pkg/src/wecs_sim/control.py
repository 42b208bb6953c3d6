"""Torque-optimal reference generation and the stator current controller.

The current loop is a state feedback with integral action:
v = -k_p*i - k_i*x with x integrating the tracking error, so the
unclamped closed loop matches the error dynamics used by the stability
analysis. The stability side provides the gain lower bound kp_min and a
numerical negative-definiteness certificate for the Lyapunov matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .aero import AeroParams
from .machine import FrameVector2, MachineParams
from .observer import UncertaintyBounds

__all__ = [
    "ControllerGains",
    "ControllerState",
    "StabilityReport",
    "optimal_torque_gain",
    "otc_reference",
    "current_control_step",
    "theorem1_kp_bound",
    "stability_certificate",
    "default_gains",
]

# integral time constant used by default_gains
TAU_I = 5e-3


@dataclass
class ControllerGains:
    """k_p: state-feedback gain, k_i: integral gain, K: torque gain."""

    k_p: float
    k_i: float
    K: float

    def __post_init__(self):
        if self.k_i <= 0.0:
            raise ValueError("ControllerGains.k_i must be positive")
        if self.K <= 0.0:
            raise ValueError("ControllerGains.K must be positive")
        if not math.isfinite(self.k_p):
            raise ValueError("ControllerGains.k_p must be finite")


@dataclass
class ControllerState:
    """Integral states, active current references and last voltage command."""

    x_id: float = 0.0
    x_iq: float = 0.0
    i_dq_ref: FrameVector2 = FrameVector2(0.0, 0.0)
    v_dq_cmd: FrameVector2 = FrameVector2(0.0, 0.0)


@dataclass
class StabilityReport:
    a_value: float
    kp_min: float
    certified: bool
    worst_eigenvalue: float


def optimal_torque_gain(aero: AeroParams) -> float:
    """K_opt = 0.5*rho*A*R_r^3*cp_max/lambda_opt^3."""
    return (0.5 * aero.rho_air * aero.area * aero.R_r ** 3 *
            aero.cp_max / aero.lambda_opt ** 3)


def otc_reference(omega_hat: float, K: float,
                  params: MachineParams) -> FrameVector2:
    """Current set points (0, -2*K*w^2/(3*p*phi_f)), q clamped to I_max."""
    i_q = -2.0 * K * omega_hat * omega_hat / (3.0 * params.p * params.phi_f)
    if i_q < -params.I_max:
        i_q = -params.I_max
    return FrameVector2(0.0, i_q)


def current_control_step(i_dq_meas, state: ControllerState,
                         gains: ControllerGains, dt: float,
                         params: MachineParams):
    """One control period: voltage command plus advanced integral states.

    The command is clamped to the linear-modulation circle V_dc/sqrt(3)
    preserving direction; both integrators freeze while the clamp is
    active (conditional integration anti-windup).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    i_d, i_q = i_dq_meas
    v_d = -gains.k_p * i_d - gains.k_i * state.x_id
    v_q = -gains.k_p * i_q - gains.k_i * state.x_iq
    v_max = params.v_limit
    norm = math.hypot(v_d, v_q)
    if norm > v_max:
        scale = v_max / norm
        v_d *= scale
        v_q *= scale
        x_id, x_iq = state.x_id, state.x_iq
    else:
        x_id = state.x_id + (i_d - state.i_dq_ref[0]) * dt
        x_iq = state.x_iq + (i_q - state.i_dq_ref[1]) * dt
    cmd = FrameVector2(v_d, v_q)
    return cmd, ControllerState(x_id, x_iq, state.i_dq_ref, cmd)


def theorem1_kp_bound(params: MachineParams, b: float, i_dq_ref):
    """Gain threshold a and the bound kp_min = a - R.

    Uses the shortened expression when i_d_ref is exactly zero; the two
    forms agree to machine precision there.
    """
    if b <= 0.0:
        raise ValueError("damping b must be positive")
    id_ref, iq_ref = i_dq_ref
    p, L, phi_f = params.p, params.L, params.phi_f
    pf = p * phi_f
    if id_ref == 0.0:
        a = 3.0 * pf * (p * math.sqrt(L * L * iq_ref * iq_ref
                                      + phi_f * phi_f) - pf) / (4.0 * b)
    else:
        chi = phi_f + L * id_ref
        root = math.sqrt(p * p * chi * chi + (L * iq_ref * p) ** 2)
        a = (3.0 * pf * root - 3.0 * p * p * phi_f * chi) / (4.0 * b)
    return a, a - params.R


def _lyapunov_matrix(a: float, b: float, J: float, c: float, d: float,
                     e: float, beta: float) -> np.ndarray:
    return np.array([
        [-a * beta, 0.0, beta * d],
        [0.0, -a * beta, e - beta * c],
        [beta * d, e - beta * c, -b / J],
    ])


def stability_certificate(params: MachineParams, b: float, J: float,
                          gains: ControllerGains, i_dq_ref,
                          n_beta: int = 240) -> StabilityReport:
    """Numerical negative-definiteness sweep of the Lyapunov matrix.

    The candidate scaling beta is swept on a log grid that pins the
    analytic optimum beta_max = (2Jce + ab)/(2J(c^2 + d^2)); certified
    means some beta makes all three eigenvalues strictly negative.
    """
    id_ref, iq_ref = i_dq_ref
    a_thr, kp_min = theorem1_kp_bound(params, b, i_dq_ref)
    a = gains.k_p + params.R
    c = params.p * (params.phi_f + params.L * id_ref) / 2.0
    d = 0.5 * params.p * params.L * iq_ref
    e = 0.75 * params.p * params.phi_f / J
    denom = 2.0 * J * (c * c + d * d)
    beta_max = (2.0 * J * c * e + a * b) / denom if denom > 0.0 else 0.0
    anchor = beta_max if beta_max > 0.0 else 1.0
    betas = list(np.geomspace(anchor * 1e-4, anchor * 10.0, n_beta))
    if beta_max > 0.0:
        betas.append(beta_max)
    worst = math.inf
    for beta in betas:
        top = float(np.linalg.eigvalsh(
            _lyapunov_matrix(a, b, J, c, d, e, beta))[-1])
        worst = min(worst, top)
    return StabilityReport(a_value=a_thr, kp_min=kp_min,
                           certified=worst < 0.0, worst_eigenvalue=worst)


def default_gains(machine: MachineParams, aero: AeroParams,
                  bounds: UncertaintyBounds | None = None,
                  K: float | None = None) -> ControllerGains:
    """Operating gains: twice the worst-case kp_min (floored at 0.5).

    The bound is evaluated at full negative q current with R_min and
    L_max, the conservative corner for the threshold; k_i follows from
    a 5 ms integral time constant.
    """
    if bounds is None:
        bounds = UncertaintyBounds()
    worst = replace(machine, R=bounds.R_min, L=bounds.L_max)
    _, kp_min = theorem1_kp_bound(worst, aero.b,
                                  FrameVector2(0.0, -machine.I_max))
    k_p = 2.0 * max(kp_min, 0.5)
    return ControllerGains(k_p=k_p, k_i=k_p / TAU_I,
                           K=optimal_torque_gain(aero) if K is None else K)
