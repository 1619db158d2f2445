"""Sequential importance sampling of binary matrices with fixed margins."""

from .estimator import (
    AlphaPermanentRequest,
    EstimateSummary,
    LogBigNumber,
    alpha_permanent,
    cycle_count,
    estimate,
    log_importance_weight,
)
from .margins import (
    ConstraintSet,
    InfeasibleMarginsError,
    Margins,
    MarginsError,
    build_constraints,
    build_constraints_structural,
    conjugate,
    gale_ryser_feasible,
)
from .proposal import (
    ProblemSpec,
    SampleRecord,
    evaluate_matrix,
    sample_batch,
    sample_matrix,
)
from .weights import WeightMatrix, canonicalize, column_order, detect_banded

__all__ = [
    "AlphaPermanentRequest",
    "ConstraintSet",
    "EstimateSummary",
    "InfeasibleMarginsError",
    "LogBigNumber",
    "Margins",
    "MarginsError",
    "ProblemSpec",
    "SampleRecord",
    "WeightMatrix",
    "alpha_permanent",
    "build_constraints",
    "build_constraints_structural",
    "canonicalize",
    "column_order",
    "conjugate",
    "cycle_count",
    "detect_banded",
    "estimate",
    "evaluate_matrix",
    "gale_ryser_feasible",
    "log_importance_weight",
    "sample_batch",
    "sample_matrix",
]
