"""Wind-speed time series: CSV ingestion, synthesis, zero-order-hold sampling.

The synthetic generator is a discrete Ornstein-Uhlenbeck process
(first-order low-pass-filtered Gaussian noise, correlation time 10 s)
re-standardized to hit the requested mean and standard deviation, then
clamped at a 0.5 m/s floor. It stands in for measured turbulence files,
which can be ingested with load_series instead.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["WindSeries", "load_series", "synth_turbulence", "sample",
           "WIND_FLOOR", "TAU_CORR"]

WIND_FLOOR = 0.5
TAU_CORR = 10.0  # turbulence correlation time, s


@dataclass
class WindSeries:
    """Uniformly sampled wind record. mean is the nominal average level."""

    dt: float
    samples: np.ndarray
    mean: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.dt <= 0.0:
            raise ValueError("WindSeries.dt must be positive")
        if self.samples.ndim != 1 or self.samples.size < 2:
            raise ValueError("WindSeries needs at least 2 samples")
        if np.any(self.samples < 0.0) or not np.all(np.isfinite(self.samples)):
            raise ValueError("wind samples must be finite and non-negative")

    @property
    def duration(self) -> float:
        return (self.samples.size - 1) * self.dt


def load_series(path) -> WindSeries:
    """Read a two-column CSV (header `time_s,wind_mps`) on a uniform grid."""
    with open(path, newline="") as f:
        rows = [r for r in csv.reader(f) if r and r[0].strip()]
    if not rows:
        raise ValueError(f"{path}: empty wind file")
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]  # header consumed
    try:
        t = np.array([float(r[0]) for r in rows])
        v = np.array([float(r[1]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{path}: malformed wind row: {exc}") from None
    if t.size < 2:
        raise ValueError(f"{path}: need at least 2 samples")
    steps = np.diff(t)
    dt = float(steps[0])
    if dt <= 0.0 or np.any(np.abs(steps - dt) > 1e-6):
        raise ValueError(f"{path}: time grid is not uniform")
    if np.any(v < 0.0):
        raise ValueError(f"{path}: negative wind speed")
    return WindSeries(dt=dt, samples=v, mean=float(v.mean()))


def synth_turbulence(mean: float, intensity: float, duration: float,
                     dt: float, seed: int) -> WindSeries:
    """Deterministic turbulent series with given mean and intensity.

    Sample mean lands within 2% of `mean` and sample std within 10% of
    intensity*mean (exact before the floor clamp, which rarely binds at
    moderate intensity).
    """
    if mean <= 0.0:
        raise ValueError("mean wind speed must be positive")
    if not 0.0 <= intensity < 1.0:
        raise ValueError("intensity must be in [0, 1)")
    if dt <= 0.0 or duration < 10.0 * dt:
        raise ValueError("duration must cover at least 10 samples")
    n = int(round(duration / dt)) + 1
    if intensity == 0.0:
        return WindSeries(dt=dt, samples=np.full(n, mean), mean=mean)
    rng = np.random.default_rng(seed)
    a = math.exp(-dt / TAU_CORR)
    drive = math.sqrt(1.0 - a * a)
    g = np.empty(n)
    g[0] = rng.standard_normal()
    noise = rng.standard_normal(n - 1)
    for k in range(1, n):
        g[k] = a * g[k - 1] + drive * noise[k - 1]
    # re-standardize so the finite record hits the moments exactly
    g = (g - g.mean()) / max(g.std(), 1e-12)
    v = np.maximum(mean + intensity * mean * g, WIND_FLOOR)
    return WindSeries(dt=dt, samples=v, mean=mean)


def sample(series: WindSeries, t: float) -> float:
    """Zero-order hold; the boundary instant belongs to the later sample."""
    if t < 0.0 or t > series.duration:
        raise ValueError(f"t={t} outside wind record [0, {series.duration}]")
    # small nudge so exact boundaries are not lost to float representation
    idx = min(int(t / series.dt + 1e-9), series.samples.size - 1)
    return float(series.samples[idx])
