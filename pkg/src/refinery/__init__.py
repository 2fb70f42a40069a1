"""Spectral structure of refinement masks on lattices.

The library takes a refinement mask on a lattice with an expansive
dilation, builds finite sections of its transfer operator, extracts their
Jordan structure, evaluates the refinable function on dilation-adic grids,
assembles local bases of homogeneous functions for the translates, and
determines the accuracy (polynomial reproduction order) of the resulting
shift-invariant space. The cli module exposes the same pipelines as the
`refinery` command.
"""

from . import errors
from .accuracy import (
    AccuracyReport,
    accuracy_constructive,
    accuracy_necessary,
    accuracy_report,
    inverse_lift_jordan,
    lift_matrix,
    monomial_exponents,
    monomial_values,
)
from .attractor import AttractorCloud, TileStats, attractor_cloud, tail_radius, \
    tile_multiplicity
from .grids import (
    GridFunction,
    boundary_flags,
    evaluate_grid,
    overlap_shifts,
    partition_residual,
    refinement_residual,
    value_window,
)
from .homogeneous import (
    BasisElement,
    ClassCheck,
    HomogeneousBasis,
    homogeneous_basis,
    local_dimension,
    propagate_shell,
    reassembly_residual,
    rebase_coefficients,
    value_rank,
    verify_basis,
    verify_class,
    zero_eigen_check,
)
from .lattice import (
    DigitSet,
    Dilation,
    Lattice,
    dilation_from_scalar,
    order_key,
    order_points,
    point_index,
    standard_lattice,
)
from .masks import Mask, parse_value
from .problem import (
    Options,
    Problem,
    load_problem,
    problem_from_dict,
    problem_to_dict,
    save_problem,
)
from .scale import ScaleMatrix, digit_matrices, scale_matrix
from .spectral import (
    EigenCluster,
    ExtendedChain,
    JordanChain,
    SpectralData,
    eigen_jordan,
    extend_chain,
    extension_residual,
    restrict_chain,
    right_vector_at_one,
)
from .verify import InvariantResult, model_checks, run_invariants
from .windows import WindowChain, grow_chain, lattice_points_in_attractor, \
    window_chain

__version__ = "0.1.0"

__all__ = [
    "AccuracyReport",
    "AttractorCloud",
    "BasisElement",
    "ClassCheck",
    "DigitSet",
    "Dilation",
    "EigenCluster",
    "ExtendedChain",
    "GridFunction",
    "HomogeneousBasis",
    "InvariantResult",
    "JordanChain",
    "Lattice",
    "Mask",
    "Options",
    "Problem",
    "ScaleMatrix",
    "SpectralData",
    "TileStats",
    "WindowChain",
    "accuracy_constructive",
    "accuracy_necessary",
    "accuracy_report",
    "attractor_cloud",
    "boundary_flags",
    "digit_matrices",
    "dilation_from_scalar",
    "eigen_jordan",
    "errors",
    "evaluate_grid",
    "extend_chain",
    "extension_residual",
    "grow_chain",
    "homogeneous_basis",
    "inverse_lift_jordan",
    "lattice_points_in_attractor",
    "lift_matrix",
    "load_problem",
    "local_dimension",
    "model_checks",
    "monomial_exponents",
    "monomial_values",
    "order_key",
    "order_points",
    "overlap_shifts",
    "parse_value",
    "partition_residual",
    "point_index",
    "problem_from_dict",
    "problem_to_dict",
    "propagate_shell",
    "reassembly_residual",
    "rebase_coefficients",
    "refinement_residual",
    "restrict_chain",
    "right_vector_at_one",
    "run_invariants",
    "save_problem",
    "scale_matrix",
    "standard_lattice",
    "tail_radius",
    "tile_multiplicity",
    "value_rank",
    "value_window",
    "verify_basis",
    "verify_class",
    "window_chain",
    "zero_eigen_check",
    "__version__",
]
