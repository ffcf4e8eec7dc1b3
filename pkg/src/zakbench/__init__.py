"""Pseudospectral simulation and diagnostics workbench for the 3D
Zakharov system: half-wave and profile reformulations, bilinear phases
and their resonant sets, two cross-validating integrators, and the full
set of weighted-norm and decay diagnostics."""

from ._version import __version__
from .errors import ZakError
from .fields import Field, Space, physical_field, spectral_field, zero_field
from .grid import Grid
from .model import HalfWave, Parameters, ProfilePair, State

__all__ = [
    "__version__",
    "ZakError",
    "Grid",
    "Field",
    "Space",
    "physical_field",
    "spectral_field",
    "zero_field",
    "State",
    "HalfWave",
    "ProfilePair",
    "Parameters",
]
