"""Exact sector-resolved dynamics of driven qubits coupled to a spin bath."""
from .core import (BathConfig, BellState, CapacityError, Explicit, FieldConfig, GaussianProfile,
                   QubitState, TwoQubitState, Uniform, ValidationError, bell_state, make_bath)
from .sectors import (SectorSpectrum, binned_spectrum, collapse_uniform, enumerate_sectors,
                      spectrum_for)

__all__ = [
    "BathConfig", "BellState", "CapacityError", "Explicit", "FieldConfig", "GaussianProfile",
    "QubitState", "TwoQubitState", "Uniform", "ValidationError", "bell_state", "make_bath",
    "SectorSpectrum", "binned_spectrum", "collapse_uniform", "enumerate_sectors", "spectrum_for",
]
