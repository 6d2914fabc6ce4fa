"""Multi-bubble toolkit for the poly-harmonic critical equation."""

from ._kernels import BACKEND
from .config import ProblemConfig, default_coefficients
from .errors import AlgebraError, ConfigError, ConvergenceError, IdentityFailure
from .lattice import Lattice, generate as generate_lattice
from .pohozaev import build_f, build_g, roundtrip_pair
from .quadrature import constants_table
from .radial import RadialSum, bubble_profile, polyharmonic_constant, verify_bubble_pde
from .reduced import solve_heights, uniqueness_stress

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ProblemConfig", "default_coefficients", "AlgebraError", "ConfigError",
    "ConvergenceError", "IdentityFailure", "Lattice", "generate_lattice", "build_f", "build_g",
    "roundtrip_pair", "constants_table", "RadialSum", "bubble_profile", "polyharmonic_constant",
    "verify_bubble_pde", "solve_heights", "uniqueness_stress", "__version__",
]
