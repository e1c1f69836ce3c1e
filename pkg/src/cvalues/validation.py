"""Input validation helpers used by every public entry point."""

import numpy as np

from .errors import ValidationError


def as_vector(x, name="x"):
    """Coerce to a 1-D float array; reject empties, non-finite values, bad shapes."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValidationError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def as_matrix(x, name="X", square=False):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    if square and arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {arr.shape}")
    return arr


def check_same_length(name_a, a, name_b, b):
    if len(a) != len(b):
        raise ValidationError(
            f"{name_a} and {name_b} must share one dimension: {len(a)} vs {len(b)}"
        )


def check_probability(p, name="p", open_interval=False):
    """Validate a scalar probability; `open_interval` excludes the endpoints."""
    p = float(p)
    if not np.isfinite(p):
        raise ValidationError(f"{name} must be finite")
    if open_interval:
        if not 0.0 < p < 1.0:
            raise ValidationError(f"{name} must lie strictly inside (0, 1), got {p}")
    elif not 0.0 <= p <= 1.0:
        raise ValidationError(f"{name} must lie in [0, 1], got {p}")
    return p


def check_positive(x, name="value", allow_zero=False):
    x = float(x)
    if not np.isfinite(x):
        raise ValidationError(f"{name} must be finite")
    if allow_zero:
        if x < 0:
            raise ValidationError(f"{name} must be non-negative, got {x}")
    elif x <= 0:
        raise ValidationError(f"{name} must be positive, got {x}")
    return x


def check_full_column_rank(X, name="X"):
    """Raise unless X has full column rank (QR based check)."""
    X = as_matrix(X, name)
    n, d = X.shape
    if d == 0:
        return X
    if n < d:
        raise ValidationError(f"{name} has more columns than rows ({n}x{d})")
    r = np.linalg.qr(X, mode="r")
    diag = np.abs(np.diag(r))
    if diag.min() <= max(n, d) * np.finfo(float).eps * max(diag.max(), 1.0):
        raise ValidationError(f"{name} is rank deficient")
    return X
