"""Exact-verification toolkit for geometric sampling notions.

Submodules: geometry (exact primitives and canonical ranges), sampling
(notion verifiers and random constructions), oracles (brute-force references),
datasets (input generators), spanning (low-crossing trees), halving
(discrepancy-based constructions), seq_approx (cascaded approximations for
counting), counting2d (approximate 2-D range counting), constants (frozen
tuning constants), cli (command-line entry points).
"""

from .constants import DEFAULTS, FrozenConstants  # noqa: F401
from .counting2d import (  # noqa: F401
    FastStructure,
    LevelCurve,
    LinearStructure,
    build_fast,
    build_levels,
    build_linear,
    level_band_complexity,
    query_fast,
    query_linear,
    simplify_level,
    summary_csv,
)
from .geometry import (  # noqa: F401
    GeneralPositionError,
    Halfplane,
    Halfspace,
    PointSet,
    canonical_halfplanes,
    canonical_halfspaces,
    read_points,
    write_points,
)
from .halving import (  # noqa: F401
    Coloring,
    HalvingChain,
    build_nu_alpha_sample,
    build_relative_approx,
    build_sensitive_improved,
    certified_coloring,
    halve,
    read_chain,
    write_chain,
)
from .sampling import (  # noqa: F401
    EPS_APPROX,
    EPS_NET,
    NOTIONS,
    NU_ALPHA,
    RELATIVE_APPROX,
    SENSITIVE_APPROX,
    SampleParams,
    SampleReport,
    d_nu,
    draw_random,
    halfplane_space,
    halfspace_space,
    measure,
    random_sample_size,
    verify,
)
from .seq_approx import (  # noqa: F401
    ApproxSequence,
    CountAnswer,
    build_sequence,
    query_count,
    read_sequence,
    write_sequence,
)
from .spanning import (  # noqa: F401
    Matching,
    Tree,
    crossing_stats,
    pocket_cover,
    relative_crossing_tree,
    shallow_tree,
    tree_to_matching,
    tukey_region,
    welzl_tree,
)

__version__ = "0.1.0"
