"""Reflection-positivity checks for lattice scalar and Dirac covariances."""
from .boundary import (
    BoundaryCovariances,
    HalfRegion,
    dn_monotonicity,
    half_difference_residual,
    half_region,
    image_covariances,
    quotient_covariances,
)
from .clifford import CliffordRep, a_matrix, clifford_residual, gamma_matrices
from .dirac import (
    assemble_dirac,
    boundary_term_check,
    build_momentum_grid,
    contour_kernel,
    dirac_gram_lattice,
    dirac_gram_momentum,
    square_form_value,
    theta_map,
)
from .geometry import (
    LatticeSpec,
    StaticMetric,
    build_lattice,
    build_reflection,
    measure_weights,
    partition_regions,
)
from .linalg import GramReport, NonConvergenceError, SolverConfig
from .quantization import HilbertReport, ReflectionPositivityError, one_particle_norm, os_quotient
from .scalar import PotentialField, action_identity_residual, assemble_operator, covariance_apply, rp_gram

__version__ = "0.1.0"
