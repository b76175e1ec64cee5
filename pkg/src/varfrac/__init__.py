"""Variable-order spectral fractional Laplacian via the weighted extension problem."""

__version__ = "0.1.0"

from .assembly import ExtensionSystem, assemble, load_from_base_function
from .config import ConfigError, RunConfig, load_config
from .functionals import (InequalityResult, SeminormConfig, hardy_classical_check, hardy_weighted_check,
                          improved_trace_check, phi_weights, seminorm_A, sobolev_norm, trace_inequality_check,
                          trace_norm)
from .mesh import CylinderMesh, build_mesh, default_gamma, default_tau
from .order_field import GsVariant, OrderField, WeightSpec, check_H5
from .solver import (apply_operator, harmonic_extension, penalty_extension, poincare_constant,
                     solve_poisson)
from .sparse import NonConvergence, cg_solve, smallest_generalized_eig
from .spectral import SpectralField, analyze, mode_dtn_1d

__all__ = [
    "__version__", "ExtensionSystem", "assemble", "load_from_base_function", "ConfigError", "RunConfig",
    "load_config", "InequalityResult", "SeminormConfig", "hardy_classical_check", "hardy_weighted_check",
    "improved_trace_check", "phi_weights", "seminorm_A", "sobolev_norm", "trace_inequality_check",
    "trace_norm", "CylinderMesh", "build_mesh", "default_gamma", "default_tau", "GsVariant", "OrderField",
    "WeightSpec", "check_H5", "apply_operator", "harmonic_extension", "penalty_extension",
    "poincare_constant", "solve_poisson", "NonConvergence", "cg_solve", "smallest_generalized_eig",
    "SpectralField", "analyze", "mode_dtn_1d",
]
