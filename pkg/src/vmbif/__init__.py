"""Bifurcation analysis of planar two-potential plasma equilibria.

The library detects and traces symmetry-breaking solution branches of a
two-component semilinear elliptic system on a rectangle.  The zero-order
densities come from a distribution ansatz evaluated on linear combinations
of the two potentials; the trivial (spatially constant) solution family is
parametrized by a scalar curve, and branches bifurcate where a criticality
function built from the linearized system crosses zero at a Dirichlet
eigenvalue of the domain.
"""

from .ansatz import AnsatzFamily, EXPONENTIAL, SpeciesParams, SpeciesSpec, \
    beta_of, build_species, custom_family, moments, validate_condition_A, \
    verify_flatness
from .bifurcate import BifurcationPoint, BranchingEstimate, \
    Identity22Report, branching_estimate, criticality, identity22_check, \
    scan_roots
from .config import RunConfig, load_config, parse_config
from .errors import ConditioningError, ConfigError, ConstraintError, \
    DivergenceError, DomainError, NumericalError, OrderAmbiguityError, \
    SingularityError, SpectrumLookupError, VmbifError
from .fields import FieldSolution, MaxwellReport, boundary_density_check, \
    maxwell_residuals, reconstruct, subspace_check
from .grid import DomainSpec, inner, laplacian_apply, neg_laplacian, \
    norm_l2, norm_sup, pack, unpack
from .linearize import LinearizationData, assemble, check_conditions, \
    eigen_asymptotic, eigenvectors, theta_matrix
from .omega import DirectionCurve, check_condition_C, eval_direction, \
    omega_residual, project_curve, project_to_omega
from .output import read_field_dump, read_summary, write_field_dump
from .pde import BranchResult, ContinuationConfig, GridField, SolverConfig, \
    continue_branch, make_state, newton_solve, residual, trivial_state, \
    verify_trivial
from .spectral import EigenPair, analytic_rectangle_spectrum, cluster_of, \
    discrete_spectrum, multiplicity_of

__version__ = "0.1.0"

__all__ = [
    "AnsatzFamily", "EXPONENTIAL", "SpeciesParams", "SpeciesSpec",
    "beta_of", "build_species", "custom_family", "moments",
    "validate_condition_A", "verify_flatness",
    "BifurcationPoint", "BranchingEstimate", "Identity22Report",
    "branching_estimate", "criticality", "identity22_check", "scan_roots",
    "RunConfig", "load_config", "parse_config",
    "ConditioningError", "ConfigError", "ConstraintError",
    "DivergenceError", "DomainError", "NumericalError",
    "OrderAmbiguityError", "SingularityError", "SpectrumLookupError",
    "VmbifError",
    "FieldSolution", "MaxwellReport", "boundary_density_check",
    "maxwell_residuals", "reconstruct", "subspace_check",
    "DomainSpec", "inner", "laplacian_apply", "neg_laplacian", "norm_l2",
    "norm_sup", "pack", "unpack",
    "LinearizationData", "assemble", "check_conditions",
    "eigen_asymptotic", "eigenvectors", "theta_matrix",
    "DirectionCurve", "check_condition_C", "eval_direction",
    "omega_residual", "project_curve", "project_to_omega",
    "read_field_dump", "read_summary", "write_field_dump",
    "BranchResult", "ContinuationConfig", "GridField", "SolverConfig",
    "continue_branch", "make_state", "newton_solve", "residual",
    "trivial_state", "verify_trivial",
    "EigenPair", "analytic_rectangle_spectrum", "cluster_of",
    "discrete_spectrum", "multiplicity_of",
    "__version__",
]
