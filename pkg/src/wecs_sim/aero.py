"""Rotor aerodynamics: Cp curve, tip-speed ratio, power and torque.

The default power-coefficient curve is the analytic family
cp(lam) = c1*(c2*u - c4)*exp(-c5*u) with u = 1/lam - c6, clamped at
zero. c1 and c2 are solved in closed form so the single maximum sits
exactly at (lambda_opt, cp_max); c4, c5, c6 shape the tails and were
picked so a rotor at low tip-speed ratio still produces enough torque
to spin up from rest-ish speeds.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CpCurve",
    "AeroParams",
    "BETZ_LIMIT",
    "EPS_OMEGA",
    "cp",
    "tsr",
    "aero_power",
    "blade_torque",
    "rotor_derivative",
]

BETZ_LIMIT = 16.0 / 27.0
# speed floor used when converting power to torque near standstill
EPS_OMEGA = 0.1


class CpCurve:
    """Power coefficient as a function of tip-speed ratio.

    Analytic by default (see module docstring); `from_table` builds a
    monotone-cubic interpolant from measured (lambda, cp) pairs instead.
    """

    def __init__(self, c1, c2, c4, c5, c6):
        self.c1, self.c2, self.c4, self.c5, self.c6 = c1, c2, c4, c5, c6
        # support ends where the bracket crosses zero past the peak
        self.lam_cut = 1.0 / (c4 / c2 + c6)
        self._table = None

    @classmethod
    def calibrated(cls, lambda_opt: float, cp_max: float,
                   c4: float = 5.0, c5: float = 8.0, c6: float = 0.02):
        """Solve c1, c2 so the curve peaks exactly at (lambda_opt, cp_max)."""
        if lambda_opt <= 0 or not 0 < cp_max < BETZ_LIMIT:
            raise ValueError("need lambda_opt > 0 and 0 < cp_max < Betz limit")
        u = 1.0 / lambda_opt - c6
        if c5 * u <= 1.0:
            raise ValueError("c5*(1/lambda_opt - c6) must exceed 1")
        c2 = c4 * c5 / (c5 * u - 1.0)
        c1 = cp_max / ((c2 * u - c4) * math.exp(-c5 * u))
        return cls(c1, c2, c4, c5, c6)

    @classmethod
    def from_table(cls, path):
        """Load a measured curve from a two-column CSV with a header row.

        The lambda grid must be strictly increasing and cp within
        [0, Betz). Interpolation is monotone cubic, so no overshoot
        between samples.
        """
        from scipy.interpolate import PchipInterpolator

        with open(path, newline="") as f:
            rows = [r for r in csv.reader(f) if r and r[0].strip()]
        if not rows:
            raise ValueError(f"{path}: empty cp table")
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]  # header consumed
        else:
            raise ValueError(f"{path}: cp table must start with a header row")
        try:
            lam = np.array([float(r[0]) for r in rows])
            cp_vals = np.array([float(r[1]) for r in rows])
        except (ValueError, IndexError) as exc:
            raise ValueError(f"{path}: malformed cp table row: {exc}") from None
        if lam.size < 4:
            raise ValueError("cp table needs at least 4 rows")
        if np.any(np.diff(lam) <= 0):
            raise ValueError("cp table lambda grid must be strictly increasing")
        if np.any(cp_vals < 0) or np.any(cp_vals >= BETZ_LIMIT):
            raise ValueError("cp values must lie in [0, Betz limit)")
        self = cls.__new__(cls)
        self.c1 = self.c2 = self.c4 = self.c5 = self.c6 = None
        self.lam_cut = float(lam[-1])
        self._table = (lam, cp_vals, PchipInterpolator(lam, cp_vals, extrapolate=False))
        return self

    def __call__(self, lam):
        """Evaluate cp; accepts scalars or arrays, zero outside support."""
        arr = np.asarray(lam, dtype=float)
        scalar = arr.ndim == 0
        arr = np.atleast_1d(arr)
        if np.any(arr < 0):
            raise ValueError("tip-speed ratio must be non-negative")
        out = np.zeros_like(arr)
        if self._table is not None:
            vals = self._table[2](arr)
            out = np.where(np.isnan(vals), 0.0, vals)
        else:
            m = arr > 1e-9
            u = 1.0 / arr[m] - self.c6
            out[m] = np.maximum(
                self.c1 * (self.c2 * u - self.c4) * np.exp(-self.c5 * u), 0.0)
        return float(out[0]) if scalar else out

    def sample_grid(self, n: int = 2048):
        """Uniform (lam, cp) sampling on [0, lam_cut] for fast kernels."""
        lam = np.linspace(0.0, self.lam_cut, n)
        return lam, self(lam)


def _default_curve():
    return CpCurve.calibrated(5.75, 0.33)


@dataclass
class AeroParams:
    """Rotor and drivetrain constants.

    rho_air (kg/m^3), R_r: rotor radius (m), J: total inertia (kg m^2),
    b: viscous friction (N m s/rad); cp_max and lambda_opt pin the curve
    peak used by the torque-gain formula and the energy reference.
    """

    rho_air: float = 1.204
    R_r: float = 1.2
    J: float = 0.66
    b: float = 0.008
    cp_max: float = 0.33
    lambda_opt: float = 5.75
    cp_curve: CpCurve = field(default_factory=_default_curve)

    def __post_init__(self):
        for name in ("rho_air", "R_r", "J", "b", "cp_max", "lambda_opt"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"AeroParams.{name} must be positive")
        if self.cp_max >= BETZ_LIMIT:
            raise ValueError("cp_max cannot reach the Betz limit")
        if abs(self.cp_curve(self.lambda_opt) - self.cp_max) > 1e-3:
            raise ValueError(
                "cp_curve does not attain cp_max at lambda_opt (1e-3 tolerance)")

    @property
    def area(self) -> float:
        return math.pi * self.R_r ** 2


def cp(curve: CpCurve, lam):
    """Power coefficient at tip-speed ratio lam (scalar or array)."""
    return curve(lam)


def tsr(omega: float, v_w: float, R_r: float) -> float:
    """lambda = omega*R_r/v_w. Wind must be positive, speed non-negative."""
    if v_w <= 0.0:
        raise ValueError("wind speed must be positive")
    if omega < 0.0:
        raise ValueError("rotor speed must be non-negative")
    return omega * R_r / v_w


def aero_power(v_w: float, omega: float, params: AeroParams) -> float:
    """Captured wind power 0.5*rho*A*v^3*cp(lambda) in W."""
    lam = tsr(omega, v_w, params.R_r)
    return 0.5 * params.rho_air * params.area * v_w ** 3 * params.cp_curve(lam)


def blade_torque(v_w: float, omega: float, params: AeroParams) -> float:
    """Aerodynamic torque, power over speed with a floor near standstill."""
    return aero_power(v_w, omega, params) / max(omega, EPS_OMEGA)


def rotor_derivative(omega: float, tau_b: float, tau_g: float,
                     params: AeroParams) -> float:
    """domega/dt from the single-mass drivetrain balance."""
    return (tau_b + tau_g - params.b * omega) / params.J
