"""Evolving internal-external fuzzy granular clustering for data streams."""
from .bench import gen_stream, prequential_run, sweep
from .engine import (
    EngineConfig,
    FuzzyEIX,
    ModelState,
    StepEvent,
    balance,
    merge_convex_hull,
    merge_pass,
    merge_weighted_mean,
    predict,
    process,
    restore,
    select_granule,
    snapshot,
)
from .errors import ContractError, EIXError, RejectedInstanceError, SnapshotError
from .granule import (
    Bounds,
    Granule,
    UpdateParams,
    contains_inner,
    contains_outer,
    expand_on_outer,
    make_granule,
    membership,
    shrink_on_inner,
    slide,
    widths,
)
from .projection import (
    TrapezoidMF,
    Type2MF,
    eval_mf,
    export_rulebase,
    fou_area,
    project_type1,
    project_type2,
)

__version__ = "0.1.0"
