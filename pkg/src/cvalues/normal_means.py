"""Exact chi-squared win bounds for subspace shrinkage vs. the MLE.

Setting: y = theta + eps with eps ~ N(0, sigma^2 I_N).  The default estimate
is the MLE (y itself) and the alternative shrinks y toward the column space
of a design X (or toward the origin when X has no columns):

    alt(y) = (y + tau^{-2} P_X y) / (1 + tau^{-2}),
    P_X    = X (X^T X)^{-1} X^T.

With s = ||P_X_perp y||^2 in unit-noise coordinates and df = N - D, the win
admits the alpha-confidence lower bound

    b(y, alpha) = inf over lam in [0, U] of
        (2/(1+tau^2)) F^{-1}_df(q; lam/4) - lam/(2(1+tau^2)) - s/(1+tau^2)^2,

where q = (1-alpha)/2, F^{-1}_df(q; nc) is the noncentral chi-squared
quantile, and U = U(y, q) is a high-confidence upper bound on
||P_X_perp theta||^2:

    U(y, q) = inf{delta >= 0 : s <= F^{-1}_df(q; delta)}.

The lam-infimum is empirically attained at the U endpoint; both the endpoint
and a golden-section sweep are evaluated and the smaller value is returned
if they ever disagree.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import NumericalError, ValidationError
from .special import (
    ChiSqParams,
    _cdf_fast,
    _quantile_fast,
    ncchisq_cdf,
    ncchisq_quantile,
)
from .validation import as_vector, check_full_column_rank, check_probability, check_positive

logger = logging.getLogger(__name__)

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SubspaceShrinkageSpec:
    """Data and shrinkage target for the exact normal-means bounds.

    X may be None (or have zero columns) to encode shrinkage toward the
    origin; a single all-ones column recovers shrinkage toward the grand
    mean.  tau is the prior scale of the shrinkage estimator; tau = 0 is the
    full-shrinkage limit and is accepted (it arises from plug-in variance
    estimates that are floored at zero).
    """

    y: np.ndarray
    X: np.ndarray | None
    tau: float
    sigma: float = 1.0

    def __post_init__(self):
        y = as_vector(self.y, "y")
        X = self.X
        if X is not None:
            X = np.asarray(X, dtype=float)
            if X.size == 0:
                X = None
        if X is not None:
            X = check_full_column_rank(X, "X")
            if X.shape[0] != y.size:
                raise ValidationError(
                    f"X has {X.shape[0]} rows but y has dimension {y.size}"
                )
            if y.size <= X.shape[1]:
                raise ValidationError("need N > D for the residual chi-squared")
        check_positive(self.tau, "tau", allow_zero=True)
        check_positive(self.sigma, "sigma")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

    @property
    def n(self):
        return self.y.size

    @property
    def d(self):
        return 0 if self.X is None else self.X.shape[1]

    @property
    def df(self):
        return self.n - self.d

    def residual(self):
        """P_X_perp y, the component of y orthogonal to the column space of X."""
        if self.X is None:
            return self.y.copy()
        q, _ = np.linalg.qr(self.X)
        return self.y - q @ (q.T @ self.y)

    def resid_norm_sq_unit(self):
        """||P_X_perp y||^2 in unit-noise coordinates (y scaled by 1/sigma)."""
        r = self.residual() / self.sigma
        return float(r @ r)


@dataclass(frozen=True)
class NoncentralityInterval:
    """One-sided interval [0, upper] for a noncentrality parameter."""

    upper: float
    level: float

    def __post_init__(self):
        if self.upper < 0:
            raise ValidationError("upper endpoint must be non-negative")


def noncentrality_upper_bound(spec: SubspaceShrinkageSpec, level) -> NoncentralityInterval:
    """Smallest delta with ||P_X_perp y||^2 <= F^{-1}_df(level; delta).

    Equivalently the root in delta of F_df(s; delta) = level, since the CDF
    is strictly decreasing in the noncentrality.  Returns 0 when the central
    quantile already covers s.  The miss probability of [0, upper] as an
    interval for ||P_X_perp theta||^2 is at most `level`.
    """
    level = check_probability(level, "level", open_interval=True)
    s = spec.resid_norm_sq_unit()
    df = spec.df
    if ncchisq_cdf(s, ChiSqParams(df, 0.0)) <= level:
        return NoncentralityInterval(0.0, level)

    def gap(delta):
        return _cdf_fast(s, df, delta) - level

    hi = max(s, 1.0)
    while gap(hi) > 0.0:
        hi *= 2.0
        if hi > 1e8:
            raise NumericalError("no bracket for the noncentrality upper bound")
    upper = float(optimize.brentq(gap, 0.0, hi, xtol=1e-9, rtol=8.9e-16))
    # confirm the defining equation through the public CDF
    if abs(ncchisq_cdf(s, ChiSqParams(df, upper)) - level) > 1e-7:
        raise NumericalError("noncentrality upper bound failed verification")
    return NoncentralityInterval(upper, level)


def _golden_min(fn, a, b, rtol=1e-8):
    """Golden-section minimum of fn on [a, b] to relative interval width rtol."""
    h = b - a
    c, d = b - _INVPHI * h, a + _INVPHI * h
    fc, fd = fn(c), fn(d)
    tol = rtol * max(abs(b), 1.0)
    while h > tol:
        h *= _INVPHI
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fn(d)
    return (c, fc) if fc < fd else (d, fd)


def subspace_bound(spec: SubspaceShrinkageSpec, alpha, miss_u=None, miss_q=None):
    """The exact win lower bound b(y, alpha) for subspace shrinkage vs. MLE.

    The two confidence budgets (noncentrality interval and quantile) each
    default to (1 - alpha)/2.  For sigma != 1 the computation runs in
    unit-noise coordinates (y/sigma, tau/sigma) and the resulting bound is
    scaled back by sigma^2.
    """
    alpha = check_probability(alpha, "alpha")
    if alpha >= 1.0:
        raise ValidationError("alpha must be below 1")
    if miss_u is None:
        miss_u = (1.0 - alpha) / 2.0
    if miss_q is None:
        miss_q = (1.0 - alpha) / 2.0
    if miss_u <= 0 or miss_q <= 0 or miss_u + miss_q > 1:
        raise ValidationError("invalid confidence split")

    df = spec.df
    s = spec.resid_norm_sq_unit()
    tau_unit = spec.tau / spec.sigma
    t2 = 1.0 + tau_unit * tau_unit
    upper = noncentrality_upper_bound(spec, miss_u).upper

    def g_fast(lam):
        return (2.0 / t2) * _quantile_fast(miss_q, df, lam / 4.0) \
            - lam / (2.0 * t2) - s / (t2 * t2)

    def g_exact(lam):
        q = ncchisq_quantile(miss_q, ChiSqParams(df, lam / 4.0))
        return (2.0 / t2) * q - lam / (2.0 * t2) - s / (t2 * t2)

    endpoint = g_exact(upper)
    if upper == 0.0:
        value = endpoint
    else:
        lam_sweep, _ = _golden_min(g_fast, 0.0, upper)
        sweep = g_exact(lam_sweep)
        origin = g_exact(0.0)
        value = min(endpoint, sweep, origin)
        tol = 1e-8 * max(1.0, abs(endpoint))
        if endpoint > value + tol:
            logger.warning(
                "lam-infimum not at the upper endpoint (endpoint %.6g vs interior %.6g); "
                "returning the smaller value", endpoint, value,
            )
    return float(spec.sigma ** 2 * value)


def unknown_variance_bound(spec: SubspaceShrinkageSpec, sigma_interval, alpha,
                           sigma_miss=None):
    """Win bound when the noise scale is only known to lie in an interval.

    `sigma_interval` is a (lo, hi) confidence interval for sigma whose miss
    probability `sigma_miss` is part of the total budget 1 - alpha; the
    remainder is split evenly between the two internal bounds.  By default
    the three parts each get (1 - alpha)/3 (a point interval spends zero).
    The bound is the infimum of the rescaled exact bound over sigma in the
    interval, located by a scan plus golden-section refinement.
    """
    alpha = check_probability(alpha, "alpha")
    lo, hi = (float(v) for v in sigma_interval)
    if not (0.0 < lo <= hi) or not np.isfinite(hi):
        raise ValidationError(f"degenerate sigma interval ({lo}, {hi})")
    if sigma_miss is None:
        sigma_miss = 0.0 if lo == hi else (1.0 - alpha) / 3.0
    if sigma_miss < 0 or sigma_miss >= 1.0 - alpha:
        raise ValidationError(
            "sigma interval miss probability must lie in [0, 1 - alpha)"
        )
    miss = (1.0 - alpha - sigma_miss) / 2.0

    def bound_at(sig2):
        scaled = SubspaceShrinkageSpec(spec.y, spec.X, spec.tau, float(np.sqrt(sig2)))
        return subspace_bound(scaled, alpha, miss_u=miss, miss_q=miss)

    if lo == hi:
        return bound_at(lo * lo)

    grid = np.linspace(lo * lo, hi * hi, 33)
    values = [bound_at(v) for v in grid]
    k = int(np.argmin(values))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, grid.size - 1)]
    _, refined = _golden_min(bound_at, a, b, rtol=1e-9)
    return float(min(min(values), refined))
