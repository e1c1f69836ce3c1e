"""Frequentist confidence measures for comparing point estimates.

The c-value of a comparison between a default and an alternative estimate is
the smallest confidence level at which a data-driven lower bound on the
difference in squared-error loss becomes non-positive; values near one
support adopting the alternative estimate.
"""

from .affine import (
    AffineComparison,
    BerryEsseenCorrection,
    QuadraticUInputs,
    affine_win_bound,
    berry_esseen_epsilon,
    sym_matrix_sqrt,
    u_quadratic,
)
from .core import (
    ComparisonProblem,
    ContingencyTable,
    CValueResult,
    LowerBoundEvaluator,
    c_value,
    contingency_table,
    two_stage_label,
    two_stage_select,
    win,
)
from .errors import CValuesError, NumericalError, ValidationError
from .normal_means import (
    NoncentralityInterval,
    SubspaceShrinkageSpec,
    noncentrality_upper_bound,
    subspace_bound,
    unknown_variance_bound,
)
from .special import ChiSqParams, ncchisq_cdf, ncchisq_quantile, normal_quantile

__all__ = [
    "AffineComparison",
    "BerryEsseenCorrection",
    "ChiSqParams",
    "ComparisonProblem",
    "ContingencyTable",
    "CValueResult",
    "CValuesError",
    "LowerBoundEvaluator",
    "NoncentralityInterval",
    "NumericalError",
    "QuadraticUInputs",
    "SubspaceShrinkageSpec",
    "ValidationError",
    "affine_win_bound",
    "berry_esseen_epsilon",
    "c_value",
    "contingency_table",
    "ncchisq_cdf",
    "ncchisq_quantile",
    "noncentrality_upper_bound",
    "normal_quantile",
    "subspace_bound",
    "sym_matrix_sqrt",
    "two_stage_label",
    "two_stage_select",
    "u_quadratic",
    "unknown_variance_bound",
    "win",
]

__version__ = "0.1.0"
