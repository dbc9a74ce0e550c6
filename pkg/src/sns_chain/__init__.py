"""Stationary states of a harmonic chain between two heat baths, with a quartic perturbation."""
from .chain import (ChainParams, ChainState, DerivedScalars, StructMatrices, build_struct_matrices,
                    check_drift_stability, derive_scalars, drift_field, hamiltonian)
from .harmonic import (CovarianceBlocks, ExtendedPhi, assemble_phi0, g_vector, green_kappa, heat_current,
                       phi_vector, temperature_profile)
from .lyapunov import (SymmetryTag, classify_symmetry, cross_transpose, integral_form,
                       linear_malliavin_expectation, solve_lyapunov, solve_lyapunov_kron)
from .perturbation import (build_inhomogeneity, current_pipeline, profile_pipeline, solve_first_order_dense,
                           temperature_correction, y1_profile, y2_profile)
from .montecarlo import (SimConfig, SimEstimate, estimate_first_order_fd, estimate_stationary_covariance,
                         propagate_linearized_flow, validate_covariance_formula)

__version__ = "0.1.0"
