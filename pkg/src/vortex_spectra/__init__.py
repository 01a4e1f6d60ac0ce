"""Distorted Fourier basis and spectral propagation for columnar vortices."""

from .profiles import (AssumptionReport, ProfileKind, VortexProfile, Q,
                       check_assumptions, load_tabulated, make_profile,
                       turning_point)

__version__ = "0.1.0"
SCHEMA = "vortex-spectra/1"
