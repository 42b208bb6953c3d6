"""Flat key-value run configuration.

Format: one `section.key_unit = value` per line, `#` comments, blank
lines ignored. Units ride in the key names so files stay self
describing and diffable. Unknown keys are rejected with the offending
line number; so are malformed values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .aero import AeroParams, CpCurve
from .control import ControllerGains, default_gains, optimal_torque_gain
from .machine import MachineParams
from .observer import ObserverParams, UncertaintyBounds
from .sim import ScenarioConfig
from .wind import WindSeries, load_series, synth_turbulence

__all__ = ["ConfigError", "RunConfig", "load_config", "DEFAULT_MATRIX"]

# the uncertainty matrix of the reference experiments: encoder baseline
# plus six sensorless (delta_L, delta_R) combinations
DEFAULT_MATRIX = ("encoder | sensorless:0:0 | sensorless:0:R | "
                  "sensorless:L:R | sensorless:L:0 | sensorless:L:-0.8R | "
                  "sensorless:-0.8L:R")

_KNOWN_KEYS = {
    "machine.R_ohm", "machine.L_H", "machine.phi_f_Wb", "machine.p",
    "machine.V_dc_V", "machine.I_max_A",
    "aero.rho_air_kgm3", "aero.R_r_m", "aero.J_kgm2", "aero.b_Nms",
    "aero.cp_max", "aero.lambda_opt", "aero.cp_table",
    "wind.source", "wind.file", "wind.mean_mps", "wind.intensity",
    "wind.duration_s", "wind.dt_s",
    "sim.mode", "sim.delta_L_H", "sim.delta_R_ohm", "sim.t_end_s",
    "sim.dt_plant_s", "sim.dt_ctrl_s", "sim.dt_log_s", "sim.seed",
    "sim.omega0_rad_s",
    "control.k_p", "control.k_i", "control.K",
    "observer.l1_V", "observer.l2", "observer.l3", "observer.sign_mode",
    "observer.phi_bl_A", "observer.v_w_max_mps",
    "bounds.R_min_ohm", "bounds.R_max_ohm", "bounds.L_min_H",
    "bounds.L_max_H",
    "sweep.matrix",
    "aep.v_mean_mps", "aep.v_cut_mps", "aep.bin_run_s", "aep.avg_window_s",
}


class ConfigError(ValueError):
    """Configuration problem with a file/line anchor where available."""

    def __init__(self, message: str, path=None, line: Optional[int] = None):
        where = ""
        if path is not None:
            where = f"{path}:" + (f"{line}: " if line else " ")
        super().__init__(where + message)
        self.path = path
        self.line = line


def _parse_file(path) -> dict:
    entries = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(str(exc), path=path) from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", path, lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r}", path, lineno)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r}", path, lineno)
        entries[key] = (value, lineno)
    return entries


@dataclass
class RunConfig:
    """Parsed configuration plus the pieces built from it."""

    path: str
    machine: MachineParams
    aero: AeroParams
    bounds: UncertaintyBounds
    wind: WindSeries
    gains: ControllerGains
    mode: str
    delta_L: float
    delta_R: float
    t_end: float
    dt_plant: float
    dt_ctrl: float
    dt_log: float
    seed: int
    omega0: float
    observer_extra: dict = field(default_factory=dict)
    matrix: tuple = ()
    v_w_max: float = 10.0
    aep_v_mean: float = 5.0
    aep_v_cut: float = 10.0
    aep_bin_run: float = 40.0
    aep_avg_window: float = 30.0

    def scenario(self, mode: Optional[str] = None,
                 delta_L: Optional[float] = None,
                 delta_R: Optional[float] = None,
                 wind: Optional[WindSeries] = None,
                 t_end: Optional[float] = None,
                 omega0: Optional[float] = None) -> ScenarioConfig:
        d_l = self.delta_L if delta_L is None else delta_L
        d_r = self.delta_R if delta_R is None else delta_R
        observer = ObserverParams(
            R_o=self.machine.R + d_r, L_o=self.machine.L + d_l,
            bounds=self.bounds, **self.observer_extra)
        try:
            return ScenarioConfig(
                machine=self.machine, aero=self.aero,
                wind=self.wind if wind is None else wind,
                mode=self.mode if mode is None else mode,
                delta_L=d_l, delta_R=d_r,
                gains=self.gains, observer=observer,
                t_end=self.t_end if t_end is None else t_end,
                dt_plant=self.dt_plant, dt_ctrl=self.dt_ctrl,
                dt_log=self.dt_log, seed=self.seed,
                omega0=self.omega0 if omega0 is None else omega0)
        except ValueError as exc:
            raise ConfigError(str(exc), path=self.path) from None

    def matrix_scenarios(self, wind: Optional[WindSeries] = None) -> list:
        return [self.scenario(mode=m, delta_L=dl, delta_R=dr, wind=wind)
                for (m, dl, dr) in self.matrix]


def _get(entries, key, cast, default, path):
    if key not in entries:
        if default is None:
            raise ConfigError(f"missing required key {key!r}", path)
        return default
    value, lineno = entries[key]
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {value!r}", path,
                          lineno) from None


def _parse_delta(token: str, base: float, unit_letter: str) -> float:
    """'0', '-0.8L', 'L', 'R' or a plain number in SI units."""
    token = token.strip()
    if token.upper().endswith(unit_letter):
        mult = token[:-1].strip()
        if mult in ("", "+"):
            return base
        if mult == "-":
            return -base
        return float(mult) * base
    return float(token)


def _parse_matrix(text: str, machine: MachineParams, path, lineno) -> tuple:
    out = []
    for token in (t.strip() for t in text.split("|")):
        if not token:
            continue
        parts = token.split(":")
        mode = parts[0].strip()
        if mode == "encoder" and len(parts) == 1:
            out.append(("encoder", 0.0, 0.0))
            continue
        if mode not in ("encoder", "sensorless") or len(parts) != 3:
            raise ConfigError(
                f"bad matrix token {token!r} (want mode:delta_L:delta_R)",
                path, lineno)
        try:
            d_l = _parse_delta(parts[1], machine.L, "L")
            d_r = _parse_delta(parts[2], machine.R, "R")
        except ValueError:
            raise ConfigError(f"bad delta in matrix token {token!r}",
                              path, lineno) from None
        out.append((mode, d_l, d_r))
    if not out:
        raise ConfigError("empty scenario matrix", path, lineno)
    return tuple(out)


def load_config(path, seed_override: Optional[int] = None) -> RunConfig:
    """Parse and cross-validate a config file into ready-to-run pieces."""
    entries = _parse_file(path)

    def get(key, cast=float, default=None):
        return _get(entries, key, cast, default, path)

    try:
        machine = MachineParams(
            R=get("machine.R_ohm", default=0.42),
            L=get("machine.L_H", default=1e-3),
            phi_f=get("machine.phi_f_Wb", default=0.11),
            p=get("machine.p", int, default=8),
            V_dc=get("machine.V_dc_V", default=50.0),
            I_max=get("machine.I_max_A", default=20.0))
        lambda_opt = get("aero.lambda_opt", default=5.75)
        cp_max = get("aero.cp_max", default=0.33)
        if "aero.cp_table" in entries:
            curve = CpCurve.from_table(entries["aero.cp_table"][0])
        else:
            curve = CpCurve.calibrated(lambda_opt, cp_max)
        aero = AeroParams(
            rho_air=get("aero.rho_air_kgm3", default=1.204),
            R_r=get("aero.R_r_m", default=1.2),
            J=get("aero.J_kgm2", default=0.66),
            b=get("aero.b_Nms", default=0.008),
            cp_max=cp_max, lambda_opt=lambda_opt, cp_curve=curve)
        bounds = UncertaintyBounds(
            R_min=get("bounds.R_min_ohm", default=0.2),
            R_max=get("bounds.R_max_ohm", default=0.8),
            L_min=get("bounds.L_min_H", default=0.5e-3),
            L_max=get("bounds.L_max_H", default=2.0e-3))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), path=path) from None

    seed = get("sim.seed", int, default=0)
    if seed_override is not None:
        seed = seed_override
    source = get("wind.source", str, default="synth")
    try:
        if source == "file":
            wind = load_series(get("wind.file", str))
        elif source == "synth":
            wind = synth_turbulence(
                mean=get("wind.mean_mps", default=6.0),
                intensity=get("wind.intensity", default=0.15),
                duration=get("wind.duration_s", default=600.0),
                dt=get("wind.dt_s", default=0.05),
                seed=seed)
        else:
            raise ConfigError(f"wind.source must be synth or file, got "
                              f"{source!r}", path,
                              entries["wind.source"][1])
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), path=path) from None

    try:
        if "control.k_p" in entries or "control.k_i" in entries:
            k_p = get("control.k_p")
            k_i = get("control.k_i", default=k_p / 5e-3)
            k_def = optimal_torque_gain(aero)
            gains = ControllerGains(k_p=k_p, k_i=k_i,
                                    K=get("control.K", default=k_def))
        else:
            gains = default_gains(machine, aero, bounds=bounds,
                                  K=get("control.K", default=None)
                                  if "control.K" in entries else None)
        observer_extra = {
            "l1": get("observer.l1_V", default=30.0),
            "l2": get("observer.l2", default=100.0),
            "l3": get("observer.l3", default=10.0),
            "sign_mode": get("observer.sign_mode", str,
                             default="boundary_layer"),
            "phi_bl": get("observer.phi_bl_A", default=0.05),
        }
        matrix_text = get("sweep.matrix", str, default=DEFAULT_MATRIX)
        matrix_line = entries.get("sweep.matrix", (None, None))[1]
        cfg = RunConfig(
            path=str(path), machine=machine, aero=aero, bounds=bounds,
            wind=wind, gains=gains,
            mode=get("sim.mode", str, default="sensorless"),
            delta_L=get("sim.delta_L_H", default=0.0),
            delta_R=get("sim.delta_R_ohm", default=0.0),
            t_end=get("sim.t_end_s", default=120.0),
            dt_plant=get("sim.dt_plant_s", default=20e-6),
            dt_ctrl=get("sim.dt_ctrl_s", default=100e-6),
            dt_log=get("sim.dt_log_s", default=1e-3),
            seed=seed,
            omega0=get("sim.omega0_rad_s", default=5.0),
            observer_extra=observer_extra,
            matrix=_parse_matrix(matrix_text, machine, path, matrix_line),
            v_w_max=get("observer.v_w_max_mps", default=10.0),
            aep_v_mean=get("aep.v_mean_mps", default=5.0),
            aep_v_cut=get("aep.v_cut_mps", default=10.0),
            aep_bin_run=get("aep.bin_run_s", default=40.0),
            aep_avg_window=get("aep.avg_window_s", default=30.0))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), path=path) from None
    if cfg.mode not in ("encoder", "sensorless"):
        raise ConfigError(f"sim.mode must be encoder or sensorless, got "
                          f"{cfg.mode!r}", path, entries["sim.mode"][1])
    if cfg.aep_v_mean <= 0.0:
        raise ConfigError("aep.v_mean_mps must be positive", path,
                          entries.get("aep.v_mean_mps", (None, None))[1])
    # fail fast on inconsistent rates/deltas before any long run
    cfg.scenario()
    return cfg
