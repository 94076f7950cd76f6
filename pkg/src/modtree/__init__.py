"""p-modulus of descending-path families on rooted trees."""

from .analytic import (
    ModulusOutcome,
    mod_1_infinite,
    mod_2_infinite,
    mod_infty_infinite,
    mod_p_infinite,
    mod_p_truncated,
    optimal_density_infinite,
    sweep,
)
from .critical import (
    PcEstimate,
    classify_walk,
    construct_tree_with_pc,
    estimate_pc,
    mod_p_skip,
    pc_walk_rule,
    pc_weighted_equals_unweighted_check,
    skip_to_spec,
)
from .dual import UnitFlow, lower_bound, pairing, split_flow, uniform_flow, validate_unit_flow
from .errors import *  # noqa: F401,F403
from .series import SeriesClassification, classify
from .skips import CeilGeometricGap, ConstantGap, PrefixGap, SkipSequence
from .solver import (
    SolveOptions,
    SolveReport,
    energy,
    rho_length,
    series_parallel_modulus,
    solve_finite_modulus,
    symmetrize_check,
)
from .tree import (
    ConstantChildren,
    DescendingPath,
    FiniteTree,
    GeometricChildren,
    GeometricWeights,
    PeriodicChildren,
    PeriodicWeights,
    PowerLawWeights,
    PrefixChildren,
    PrefixWeights,
    RadialTreeSpec,
    SkipChildren,
    UnitWeights,
    enumerate_paths,
    shell_size,
    truncate,
    validate,
)
from .walk import WalkConfig, WalkStats, predicted_escape, simulate_escape

__version__ = "0.1.0"
