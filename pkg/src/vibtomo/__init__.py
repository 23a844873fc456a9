"""Wigner-function-matrix toolkit for entangled vibronic states of a trapped atom.

Exact evaluation, series reconstruction from displaced number statistics,
probe-cycle tomography protocols and their stochastic emulation.
"""

from . import dynamics, fileio, fock, montecarlo, states, tomography, wigner
from .dynamics import DriveConfig
from .montecarlo import SamplerConfig, TomographyConfig
from .states import VibronicDensity, make_cat_state, make_product_state
from .tomography import CycleSchedule, EstimationRecord
from .wigner import PhaseSpaceGrid, WignerMatrixField, WignerMatrixSample

__version__ = "0.1.0"

__all__ = [
    "dynamics", "fileio", "fock", "montecarlo", "states", "tomography", "wigner",
    "DriveConfig", "SamplerConfig", "TomographyConfig",
    "VibronicDensity", "make_cat_state", "make_product_state",
    "CycleSchedule", "EstimationRecord",
    "PhaseSpaceGrid", "WignerMatrixField", "WignerMatrixSample",
    "__version__",
]
