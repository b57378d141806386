"""Simulation of a multi-level EIT quantum memory on the cesium D2 line."""

__version__ = "0.1.0"

from .atomic import LevelScheme, build_cesium_d2, clebsch_gordan, wigner_3j, wigner_6j
from .bloch import (FieldConfig, MediumConfig, equal_populations, single_sublevel,
                    solve_coherences, susceptibility)
from .decoherence import (DephasingParams, collective_overlap_efficiency, lifetime_curve,
                          motional_dephasing_time, transit_time)
from .errors import BracketError, ConfigError, EitmemError, GridError, NumericalError
from .propagation import (PulseSpec, efficiency_vs_od, propagate_pulse,
                          storage_retrieval_efficiency, transmission_spectrum, tune_control)
from .qubit import (DualRailChannel, PolarizationState, classical_benchmark, fidelity,
                    qubit_experiment, reconstruct, simulate_counts)

__all__ = [
    "BracketError", "ConfigError", "DephasingParams", "DualRailChannel", "EitmemError",
    "FieldConfig", "GridError", "LevelScheme", "MediumConfig", "NumericalError",
    "PolarizationState", "PulseSpec", "build_cesium_d2", "classical_benchmark",
    "clebsch_gordan", "collective_overlap_efficiency", "efficiency_vs_od",
    "equal_populations", "fidelity", "lifetime_curve", "motional_dephasing_time",
    "propagate_pulse", "qubit_experiment", "reconstruct", "simulate_counts",
    "single_sublevel", "solve_coherences", "storage_retrieval_efficiency",
    "susceptibility", "transit_time", "transmission_spectrum", "tune_control",
    "wigner_3j", "wigner_6j",
]
