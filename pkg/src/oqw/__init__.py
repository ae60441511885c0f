"""Open quantum walks: exact density-block simulation and closed-form analysis on the line."""

from .analytic import (
    ComponentKind,
    ComponentSpec,
    DistributionProfile,
    analytic_distribution,
    binomial_row,
    classify_spectrum,
    component_stats,
    initial_projections,
    log_binomial_pmf,
)
from .errors import (
    CommutationError,
    DecompositionError,
    DimensionError,
    NonNormalError,
    OQWError,
    StateError,
    TransitionError,
)
from .line import LineCoin, LineState, diagonal_trap_coin, line_step, run_line
from .linalg import SpectralDecomposition, commutator_norm, is_normal, joint_eigendecomposition
from .walk import (
    TransitionSet,
    Violation,
    WalkState,
    apply_step,
    as_density_block,
    evolve,
    position_distribution,
    validate_transitions,
)

__version__ = "0.1.0"
