"""Data-driven synthesis and certification of positively invariant sets.

Given sampled state/successor pairs from an unmodeled discrete-time system
and a max-norm Lipschitz bound, the synthesizer partitions the constraint
set with a dyadic tree, over-approximates each cell's one-step image by a
box around the nearest sample's successor, and prunes until the surviving
union maps into itself.  The verifier re-certifies results independently,
and the bounds module quantifies how much data the procedure needs.
"""

__version__ = "0.1.0"

from .geometry import (  # noqa: E402
    Box,
    BoxList,
    CoverageClass,
    DimensionMismatchError,
    box_contains_point,
    box_intersect,
    box_subtract,
    box_volume,
    classify_coverage,
    rect_to_cubes,
    successor_box,
)
from .dataset import (  # noqa: E402
    Dataset,
    SamplePair,
    SystemOracle,
    gen_dyadic_grid,
    gen_uniform,
    get_system,
    linear2d,
    load_dataset,
    nearest,
    nonlinear2d,
    save_dataset,
)
from .tree import (  # noqa: E402
    Label,
    PartitionTree,
    candidate_set,
    divide_node,
    leaves_active,
    new_tree,
    set_label,
)
from .synthesis import (  # noqa: E402
    SynthConfig,
    SynthResult,
    Termination,
    UpdateMode,
    classify_leaf,
    sweep,
    synthesize,
)
from .bounds import (  # noqa: E402
    BoundForm,
    BoundQuery,
    FormulaSignWarning,
    PolytopeCSet,
    contraction_window,
    covering_lower_bound,
    gauge,
    gauge_unit_max,
    successor_gauge_bound,
    uniform_sample_bound,
    unit_max_ball,
)
from .verify import (  # noqa: E402
    Certificate,
    check_fixpoint,
    monte_carlo_invariance,
    raster_coverage,
)
from .results import (  # noqa: E402
    RunManifest,
    load_result,
    save_result,
)
