"""Sensorless wind-turbine rectifier simulator and analysis toolkit.

Simulates a small PMSG wind turbine under field-oriented current
control with an optimal-torque MPPT law, either with an ideal position
encoder or fully sensorless (sliding-mode current observer feeding a
back-EMF tracker). Companion analysis tools cover the stability
certificate for the speed/current loop, closed-form effects of R/L
model error, energy efficiency, and annual yield.
"""

__version__ = "0.1.0"

from .machine import (FrameVector2, MachineParams, ElectricalState, clarke,
                      park, inverse_park, bemf_ab, electromagnetic_torque,
                      current_derivatives)
from .aero import (CpCurve, AeroParams, BETZ_LIMIT, cp, tsr, aero_power,
                   blade_torque, rotor_derivative)
from .wind import WindSeries, load_series, synth_turbulence, sample
from .control import (ControllerGains, ControllerState, StabilityReport,
                      optimal_torque_gain, otc_reference,
                      current_control_step, theorem1_kp_bound,
                      stability_certificate, default_gains)
from .observer import (UncertaintyBounds, ObserverParams, ObserverState,
                       smo_step, robust_l1_bound, bemf_speed_step,
                       equivalent_park, bemf_ceiling)
from .analysis import (MisalignmentPrediction, EquilibriumCurrents,
                       EnergyReport, misalignment, equilibrium_currents,
                       optimal_energy, energy_efficiency,
                       annual_energy_production, dc_power)
from .sim import (ScenarioConfig, Trace, TRACE_COLUMNS, simulate,
                  measure_phi, summarize, sweep)
from .config import ConfigError, RunConfig, load_config

__all__ = [
    "__version__",
    "FrameVector2", "MachineParams", "ElectricalState", "clarke", "park",
    "inverse_park", "bemf_ab", "electromagnetic_torque",
    "current_derivatives",
    "CpCurve", "AeroParams", "BETZ_LIMIT", "cp", "tsr", "aero_power",
    "blade_torque", "rotor_derivative",
    "WindSeries", "load_series", "synth_turbulence", "sample",
    "ControllerGains", "ControllerState", "StabilityReport",
    "optimal_torque_gain", "otc_reference", "current_control_step",
    "theorem1_kp_bound", "stability_certificate", "default_gains",
    "UncertaintyBounds", "ObserverParams", "ObserverState", "smo_step",
    "robust_l1_bound", "bemf_speed_step", "equivalent_park", "bemf_ceiling",
    "MisalignmentPrediction", "EquilibriumCurrents", "EnergyReport",
    "misalignment", "equilibrium_currents", "optimal_energy",
    "energy_efficiency", "annual_energy_production", "dc_power",
    "ScenarioConfig", "Trace", "TRACE_COLUMNS", "simulate", "measure_phi",
    "summarize", "sweep",
    "ConfigError", "RunConfig", "load_config",
]
