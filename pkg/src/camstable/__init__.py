"""Simulation and stochastic-averaging reduction of fast-slow systems driven by CAM noise.

Modules
-------
stable      alpha-stable laws: characteristic function, sampling, densities
cam         the CAM SDE: stationary law, derived stable parameters, integrator
oulp        Ornstein-Uhlenbeck-Levy processes and matching to CAM noise
stats       empirical characteristic functions, codifferences, histograms, tails
sigma_est   estimation of the effective stable scale Sigma
averaging   full and reduced slow systems, Marcus increments
"""

from . import averaging, cam, experiments, oulp, sigma_est, stable, stats
from .averaging import SlowSystem, ReducedSystem, marcus_increment, reduce, transform
from .cam import CamDerived, CamParams, derive
from .errors import (
    CamStableError,
    ConditionError,
    DomainError,
    InsufficientDataError,
    MarcusDomainError,
    NumericalError,
    RegimeError,
)
from .oulp import OulpParams, match_from_cam
from .sigma_est import SigmaEstimate, estimate_sigma, fit_scale
from .stable import StableParams, characteristic_function
from .trajectory import Trajectory, stream

__version__ = "0.1.0"

__all__ = [
    "averaging",
    "cam",
    "experiments",
    "oulp",
    "sigma_est",
    "stable",
    "stats",
    "SlowSystem",
    "ReducedSystem",
    "marcus_increment",
    "reduce",
    "transform",
    "CamDerived",
    "CamParams",
    "derive",
    "CamStableError",
    "ConditionError",
    "DomainError",
    "InsufficientDataError",
    "MarcusDomainError",
    "NumericalError",
    "RegimeError",
    "OulpParams",
    "match_from_cam",
    "SigmaEstimate",
    "estimate_sigma",
    "fit_scale",
    "StableParams",
    "characteristic_function",
    "Trajectory",
    "stream",
]
