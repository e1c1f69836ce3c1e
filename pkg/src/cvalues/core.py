"""The win, lower-bound evaluators, the c-value, and the two-stage selector.

Terminology used throughout the package:

* default estimate  -- the familiar baseline (often the MLE),
* alternative estimate -- the candidate replacement,
* win W(theta, y) = ||default - theta||^2 - ||alternative - theta||^2,
  positive when the alternative is closer to the truth on this dataset,
* b(y, alpha) -- a data-driven quantity satisfying
  P[W >= b(y, alpha)] >= alpha for every theta,
* c-value c(y) = inf{alpha in [0, 1] : b(y, alpha) <= 0}.

Large c-values support replacing the default estimate: the event
{W <= 0 and c(y) > alpha} has probability at most 1 - alpha.  A c-value is
not a posterior probability that the alternative is better.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .validation import as_vector, check_probability, check_same_length

logger = logging.getLogger(__name__)

# Alpha grid used both for the monotonicity check and as bisection brackets.
ALPHA_GRID = np.linspace(0.0, 1.0 - 1e-9, 64)

DEFAULT_LABEL = "default"
ALTERNATIVE_LABEL = "alternative"


@dataclass(frozen=True)
class ComparisonProblem:
    """Observation plus the two point estimates under squared-error loss."""

    y: np.ndarray
    default_estimate: np.ndarray
    alternative_estimate: np.ndarray

    def __post_init__(self):
        y = as_vector(self.y, "y")
        d = as_vector(self.default_estimate, "default_estimate")
        a = as_vector(self.alternative_estimate, "alternative_estimate")
        check_same_length("y", y, "default_estimate", d)
        check_same_length("y", y, "alternative_estimate", a)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "default_estimate", d)
        object.__setattr__(self, "alternative_estimate", a)

    @property
    def n(self):
        return self.y.size


def win(theta, problem: ComparisonProblem):
    """Squared-error loss of the default minus that of the alternative."""
    theta = as_vector(theta, "theta")
    check_same_length("theta", theta, "y", problem.y)
    d = problem.default_estimate - theta
    a = problem.alternative_estimate - theta
    return float(d @ d - a @ a)


class LowerBoundEvaluator:
    """Wraps a map alpha -> b(y, alpha) for one fixed comparison.

    At construction the bound is sampled on a 64-point alpha grid and checked
    to be non-increasing (up to numerical slack).  Evaluation is pure, so
    instances are safe for concurrent use.
    """

    def __init__(self, fn, name=""):
        self._fn = fn
        self.name = name
        values = np.array([fn(a) for a in ALPHA_GRID])
        self.bound_samples = list(zip(ALPHA_GRID.tolist(), values.tolist()))
        scale = max(1.0, np.max(np.abs(values)))
        self.monotone = bool(np.all(np.diff(values) <= 1e-9 * scale))
        if not self.monotone:
            logger.warning(
                "lower bound %s is not non-increasing on the alpha grid; "
                "falling back to a conservative grid scan for the c-value",
                name or repr(fn),
            )

    def __call__(self, alpha):
        return float(self._fn(alpha))

    @property
    def grid_values(self):
        return np.array([b for _, b in self.bound_samples])


@dataclass(frozen=True)
class CValueResult:
    """A computed c-value together with the sampled bound curve."""

    c_value: float
    bound_samples: list = field(repr=False)
    tolerance: float = 1e-6
    degenerate_at_one: bool = False

    def __post_init__(self):
        if not 0.0 <= self.c_value <= 1.0:
            raise ValidationError(f"c-value {self.c_value} outside [0, 1]")


def c_value(bound: LowerBoundEvaluator, tolerance=1e-6) -> CValueResult:
    """inf{alpha : b(y, alpha) <= 0}, located by bisection between grid points.

    Returns 0 when b(y, 0) <= 0 and 1 (flagged) in the degenerate case where
    the bound is still positive at alpha = 1 - 1e-9.  If the bound failed its
    monotonicity check the smallest grid alpha with b <= 0 is returned
    instead of bisecting through numerical noise.
    """
    grid = np.array([a for a, _ in bound.bound_samples])
    values = bound.grid_values

    if not bound.monotone:
        hits = np.nonzero(values <= 0.0)[0]
        if hits.size == 0:
            return CValueResult(1.0, bound.bound_samples, tolerance, True)
        return CValueResult(float(grid[hits[0]]), bound.bound_samples, tolerance)

    if values[0] <= 0.0:
        return CValueResult(0.0, bound.bound_samples, tolerance)
    if values[-1] > 0.0:
        return CValueResult(1.0, bound.bound_samples, tolerance, True)

    idx = int(np.nonzero(values <= 0.0)[0][0])
    lo, hi = float(grid[idx - 1]), float(grid[idx])
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if bound(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    return CValueResult(hi, bound.bound_samples, tolerance)


def two_stage_label(c, alpha):
    """Which estimate the two-stage rule reports: alternative iff c > alpha."""
    c = check_probability(c, "c")
    alpha = check_probability(alpha, "alpha")
    return ALTERNATIVE_LABEL if c > alpha else DEFAULT_LABEL


def two_stage_select(c, alpha, problem: ComparisonProblem):
    """The two-stage estimate: the alternative iff c > alpha, else the default.

    The boundary c == alpha returns the default estimate.
    """
    if two_stage_label(c, alpha) == ALTERNATIVE_LABEL:
        return problem.alternative_estimate
    return problem.default_estimate


@dataclass(frozen=True)
class ContingencyTable:
    """2x2 outcome counts: rows = which estimate had lower loss, cols = reported.

    Rows: DLL (default lower loss, ties included), ALL (alternative lower
    loss).  Columns: DR (default reported), AR (alternative reported).
    """

    counts: np.ndarray

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def percentages(self):
        return 100.0 * self.counts / self.total

    def percent(self, row, col):
        i = {"DLL": 0, "ALL": 1}[row]
        j = {"DR": 0, "AR": 1}[col]
        return float(self.percentages[i, j])

    def as_dict(self):
        p = self.percentages
        return {
            "DLL_DR": p[0, 0], "DLL_AR": p[0, 1],
            "ALL_DR": p[1, 0], "ALL_AR": p[1, 1],
        }


def contingency_table(records) -> ContingencyTable:
    """Tabulate (win, reported_label) pairs; ties in win count toward DLL."""
    counts = np.zeros((2, 2), dtype=int)
    n = 0
    for w, reported in records:
        if reported not in (DEFAULT_LABEL, ALTERNATIVE_LABEL):
            raise ValidationError(f"unknown report label {reported!r}")
        row = 1 if w > 0 else 0
        col = 1 if reported == ALTERNATIVE_LABEL else 0
        counts[row, col] += 1
        n += 1
    if n == 0:
        raise ValidationError("contingency_table requires at least one record")
    return ContingencyTable(counts)
