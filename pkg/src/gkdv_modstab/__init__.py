"""Modulational stability of periodic waves of u_t = u_xxx + f(u)_x."""
from .errors import (
    DegenerateIndex,
    DegenerateOrbit,
    FitUnstable,
    GradientUnresolved,
    IntegrationFailure,
    ModStabError,
    NoPeriodicOrbit,
    ProfileResolutionTooCoarse,
    QuadratureFailure,
    RootLost,
    SingularC,
)
from .nonlinearity import Nonlinearity, from_tag, make_kdv, make_mkdv, make_power_law
from .wave import WaveParams, WaveProfile, effective_potential, find_turning_points, make_wave, period, sample_profile

__version__ = "0.1.0"

__all__ = [
    "DegenerateIndex",
    "DegenerateOrbit",
    "FitUnstable",
    "GradientUnresolved",
    "IntegrationFailure",
    "ModStabError",
    "NoPeriodicOrbit",
    "ProfileResolutionTooCoarse",
    "QuadratureFailure",
    "RootLost",
    "SingularC",
    "Nonlinearity",
    "from_tag",
    "make_kdv",
    "make_mkdv",
    "make_power_law",
    "WaveParams",
    "WaveProfile",
    "effective_potential",
    "find_turning_points",
    "make_wave",
    "period",
    "sample_profile",
]
