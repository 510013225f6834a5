"""Numerical laboratory for a Kerr-cat qubit stabilized by two-photon driving."""

__version__ = "0.1.0"

from .errors import (AdiabaticityWarning, ConfigError, ContractError, FitError,
                     InvalidDimensionError, KerrCatError, SearchBracketError, StiffnessError,
                     TruncationError)
from .model import CatBasis, DeviceParams, Generator, NoiseConfig, cat_basis, h_cat, h_effective
from .dynamics import CollapseChannel, Trajectory, evolve, propagate
from .schedule import PulseSchedule, cardinal_init, x_gate, z_gate
from .spectrum import diagonalize, tuneup_detuning
from .tomography import PTM, ExpectationSet, measure_cardinals, ptm_fidelity, ptm_from_expectations

__all__ = [
    "AdiabaticityWarning", "CatBasis", "CollapseChannel", "ConfigError", "ContractError",
    "DeviceParams", "ExpectationSet", "FitError", "Generator", "InvalidDimensionError",
    "KerrCatError", "NoiseConfig", "PTM", "PulseSchedule", "SearchBracketError", "StiffnessError",
    "Trajectory", "TruncationError", "cardinal_init", "cat_basis", "diagonalize", "evolve",
    "h_cat", "h_effective", "measure_cardinals", "propagate", "ptm_fidelity",
    "ptm_from_expectations", "tuneup_detuning", "x_gate", "z_gate",
]
