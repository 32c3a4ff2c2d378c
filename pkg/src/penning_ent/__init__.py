"""Environment-assisted entanglement of Penning-trap modes.

Covariance-matrix dynamics of a trapped charged particle under a linear
Lindblad environment, with Monte-Carlo sampling of the unknown constants and
the Gaussian PPT test for radial/axial separability.
"""

from .environment import EnvironmentConstants, Verdict, build_diffusion, build_lambda
from .gaussian import separability_epsilon
from .mc import SamplerConfig, TimeGrid, run_ensemble, run_trajectory
from .trap import TrapParameters, UnitSystem, initial_covariance, temperature_to_dimensionless

__version__ = "0.1.0"
