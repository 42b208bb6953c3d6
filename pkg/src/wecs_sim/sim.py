"""Scenario orchestration: fixed-step co-simulation and sweeps.

The continuous plant (rotor speed, electrical angle, alphabeta
currents) is integrated with RK4 at dt_plant; controller and observers
tick at dt_ctrl with the voltage command held in between; the log is
decimated to dt_log. The heavy loop lives in _kernel so scenarios run
at compiled speed and bit-identically for a fixed config.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernel, analysis
from .aero import AeroParams
from .control import ControllerGains, default_gains
from .machine import MachineParams
from .observer import ObserverParams
from .wind import WindSeries

__all__ = ["ScenarioConfig", "Trace", "simulate", "measure_phi",
           "summarize", "sweep", "TRACE_COLUMNS"]

TRACE_COLUMNS = (
    "t", "v_w", "omega", "omega_hat", "theta_e", "lambda", "id", "iq",
    "id_hat", "iq_hat", "id_ref", "iq_ref", "vd", "vq", "tau_b", "tau_g",
    "p_dc", "s_a", "s_b", "e_hat_a", "e_hat_b", "phi_meas",
)

_DIVERGENCE_REASONS = {1: "overcurrent", 2: "overspeed"}


def _is_multiple(big: float, small: float) -> bool:
    k = round(big / small)
    return k >= 1 and abs(big - k * small) <= 1e-9 * max(1.0, abs(big))


@dataclass
class ScenarioConfig:
    """Everything one closed-loop experiment needs, validated up front."""

    machine: MachineParams
    aero: AeroParams
    wind: WindSeries
    mode: str = "sensorless"
    delta_L: float = 0.0
    delta_R: float = 0.0
    gains: Optional[ControllerGains] = None
    observer: Optional[ObserverParams] = None
    t_end: float = 120.0
    dt_plant: float = 20e-6
    dt_ctrl: float = 100e-6
    dt_log: float = 1e-3
    seed: int = 0
    omega0: float = 5.0
    theta0: float = 0.0

    def __post_init__(self):
        if self.mode not in ("encoder", "sensorless"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.t_end <= 0.0:
            raise ValueError("t_end must be positive")
        if self.omega0 < 0.0:
            raise ValueError("omega0 must be non-negative")
        if self.mode == "sensorless" and self.omega0 == 0.0:
            raise ValueError(
                "sensorless mode cannot start at standstill (omega0 = 0): "
                "the BEMF observer is unobservable there")
        for name in ("dt_plant", "dt_ctrl", "dt_log"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if not _is_multiple(self.dt_ctrl, self.dt_plant):
            raise ValueError("dt_ctrl must be an integer multiple of dt_plant")
        if not _is_multiple(self.dt_log, self.dt_plant):
            raise ValueError("dt_log must be an integer multiple of dt_plant")
        if not _is_multiple(self.t_end, self.dt_log):
            raise ValueError("t_end must be an integer multiple of dt_log")
        if float(np.min(self.wind.samples)) <= 0.0:
            raise ValueError("wind record must stay strictly positive")
        if self.t_end > self.wind.duration + 1e-9:
            raise ValueError("t_end exceeds the wind record duration")
        if self.machine.L + self.delta_L <= 0.0:
            raise ValueError("delta_L would make the assumed inductance <= 0")
        if self.machine.R + self.delta_R <= 0.0:
            raise ValueError("delta_R would make the assumed resistance <= 0")
        if self.gains is None:
            self.gains = default_gains(self.machine, self.aero)
        if self.observer is None:
            self.observer = ObserverParams(
                R_o=self.machine.R + self.delta_R,
                L_o=self.machine.L + self.delta_L)
        else:
            r_o = self.machine.R + self.delta_R
            l_o = self.machine.L + self.delta_L
            if (abs(self.observer.R_o - r_o) > 1e-12
                    or abs(self.observer.L_o - l_o) > 1e-12):
                raise ValueError(
                    "observer params disagree with machine + deltas: "
                    f"expected R_o={r_o}, L_o={l_o}")


@dataclass
class Trace:
    """Uniformly logged run records plus the divergence verdict."""

    data: np.ndarray
    dt_log: float
    diverged: bool = False
    reason: Optional[str] = None
    t_stop: float = 0.0
    columns: tuple = TRACE_COLUMNS

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    @property
    def t(self) -> np.ndarray:
        return self.data[:, 0]

    def window(self, t0: float, t1: float) -> np.ndarray:
        m = (self.t >= t0 - 1e-12) & (self.t <= t1 + 1e-12)
        return self.data[m]

    def to_csv(self, path):
        np.savetxt(path, self.data, delimiter=",", fmt="%.10g",
                   header=",".join(self.columns), comments="")


def simulate(config: ScenarioConfig) -> Trace:
    """Run one scenario; deterministic for a fixed config."""
    mac, aero, obs, gains = (config.machine, config.aero,
                             config.observer, config.gains)
    n_sub = round(config.dt_ctrl / config.dt_plant)
    n_log = round(config.dt_log / config.dt_plant)
    n_steps = round(config.t_end / config.dt_plant)
    _, cp_tab = aero.cp_curve.sample_grid()
    rows = n_steps // n_log + 1
    log = np.zeros((rows, _kernel.N_COLS))
    filled, flag, t_stop = _kernel.run_closed_loop(
        1 if config.mode == "sensorless" else 0,
        mac.R, mac.L, mac.phi_f, float(mac.p), mac.V_dc, mac.I_max,
        aero.rho_air, aero.R_r, aero.J, aero.b,
        aero.cp_curve.lam_cut, np.ascontiguousarray(cp_tab),
        obs.R_o, obs.L_o, obs.l1, obs.l2, obs.l3, obs.bl_width,
        gains.k_p, gains.k_i, gains.K,
        np.ascontiguousarray(config.wind.samples), config.wind.dt,
        config.dt_plant, n_sub, n_log, n_steps,
        config.omega0, config.theta0,
        log)
    return Trace(data=log[:filled], dt_log=config.dt_log,
                 diverged=flag != 0,
                 reason=_DIVERGENCE_REASONS.get(flag),
                 t_stop=t_stop)


def measure_phi(trace: Trace, t0: float, t1: float) -> float:
    """Circular mean of the frame-misalignment angle over [t0, t1].

    The window must be quasi-steady: rotor speed excursion below 2% of
    its window mean, otherwise the lag is not an equilibrium quantity.
    """
    win = trace.window(t0, t1)
    if win.shape[0] < 2:
        raise ValueError("empty measurement window")
    omega = win[:, TRACE_COLUMNS.index("omega")]
    w_mean = float(np.mean(omega))
    if w_mean <= 0.0 or float(np.ptp(omega)) > 0.02 * w_mean:
        raise ValueError("window is not quasi-steady (speed varies > 2%)")
    phi = win[:, TRACE_COLUMNS.index("phi_meas")]
    ang = math.atan2(float(np.mean(np.sin(phi))), float(np.mean(np.cos(phi))))
    # wrap to (-pi, pi]
    return ang if ang > -math.pi else math.pi


def summarize(config: ScenarioConfig, trace: Trace) -> dict:
    """One results row: energy, tracking and estimation quality."""
    n = trace.data.shape[0]
    k_end = min(int(round(trace.t_stop / config.wind.dt)) + 1,
                config.wind.samples.size)
    series_part = config.wind.samples[:max(k_end, 2)]
    w_opt = float(np.trapezoid(
        0.5 * config.aero.rho_air * config.aero.area
        * series_part ** 3 * config.aero.cp_max, dx=config.wind.dt))
    report = analysis.energy_efficiency(trace["p_dc"], trace.dt_log, w_opt)
    eps_d = trace["id_ref"] - trace["id"]
    eps_q = trace["iq_ref"] - trace["iq"]
    omega = trace["omega"]
    w_err = np.abs(trace["omega_hat"] - omega) / np.maximum(omega, 0.1)
    return {
        "mode": config.mode,
        "delta_L": config.delta_L,
        "delta_R": config.delta_R,
        "seed": config.seed,
        "W_J": report.W,
        "eta_E": report.eta_E,
        "mean_abs_eps_d": float(np.mean(np.abs(eps_d))) if n else math.nan,
        "mean_abs_eps_q": float(np.mean(np.abs(eps_q))) if n else math.nan,
        "mean_lambda": float(np.mean(trace["lambda"])) if n else math.nan,
        "max_speed_err": float(np.max(w_err)) if n else math.nan,
        "diverged": trace.diverged,
        "t_stop": trace.t_stop,
    }


def _run_one(config: ScenarioConfig) -> dict:
    return summarize(config, simulate(config))


def sweep(configs, jobs: Optional[int] = None) -> list:
    """Run many scenarios, rows in input order.

    jobs > 1 fans out over processes; each scenario is self-contained so
    the rows are identical either way.
    """
    configs = list(configs)
    if not configs:
        raise ValueError("empty scenario list")
    if jobs is None:
        jobs = min(len(configs), os.cpu_count() or 1)
    if jobs <= 1 or len(configs) == 1:
        return [_run_one(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, configs))
