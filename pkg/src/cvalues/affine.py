"""Approximate win bound for arbitrary affine estimates under correlated noise.

Setting: y = theta + eps, eps ~ N(0, Sigma), default = A y + k and
alternative = C y + l.  Writing G(y) = (A - C) y + (k - l), the win is

    W = 2 eps^T G(y) + (||default - y||^2 - ||alternative - y||^2),

and 2 eps^T G(y) is approximated by a normal with matched moments:

    E[eps^T G(y)]   = tr[(A - C) Sigma],
    Var[eps^T G(y)] = ||G(theta)||_Sigma^2
                      + 0.5 ||S^{1/2}(A + A^T - C - C^T) S^{1/2}||_F^2.

The unknown ||G(theta)||_Sigma^2 is replaced by an approximate upper
confidence bound U solving

    gamma = delta + eta sqrt(rho + nu delta),

whose closed form is the larger root of
x^2 - (2 gamma + eta^2 nu) x + (gamma^2 - eta^2 rho) = 0.  A Berry-Esseen
style correction quantifies the coverage error of the two normal
approximations in terms of condition numbers and 1/sqrt(N).
"""

import copy
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NumericalError, ValidationError
from .special import normal_quantile
from .validation import as_matrix, as_vector, check_probability

_EIG_CLAMP_REL = 1e-10
_BERRY_ESSEEN_C1 = 1.88
_CONDITION_WARN = 1e6


def sym_matrix_sqrt(sigma):
    """Symmetric S with S @ S = sigma, by eigendecomposition.

    Eigenvalues in [-1e-10 * max_eig, 0) are clamped to zero; anything more
    negative raises, since the input is then not a covariance matrix.
    """
    sigma = as_matrix(sigma, "sigma", square=True)
    if not np.allclose(sigma, sigma.T, rtol=0.0, atol=1e-8 * max(1.0, np.abs(sigma).max())):
        raise ValidationError("matrix square root requires a symmetric input")
    vals, vecs = np.linalg.eigh(0.5 * (sigma + sigma.T))
    top = max(vals.max(), 0.0)
    if vals.min() < -_EIG_CLAMP_REL * max(top, 1.0):
        raise NumericalError(
            f"matrix is not positive semidefinite (min eigenvalue {vals.min():.3e})"
        )
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


@dataclass(frozen=True)
class QuadraticUInputs:
    """Coefficients of the fixed-point equation gamma = delta + eta sqrt(rho + nu delta)."""

    gamma: float
    eta: float
    rho: float
    nu: float

    def __post_init__(self):
        for name in ("gamma", "eta", "rho", "nu"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.rho < 0 or self.nu < 0:
            raise ValidationError("rho and nu must be non-negative")


def u_quadratic(inputs: QuadraticUInputs):
    """Larger root of x^2 - (2 gamma + eta^2 nu) x + (gamma^2 - eta^2 rho), floored at 0."""
    g, e, r, n = inputs.gamma, inputs.eta, inputs.rho, inputs.nu
    b = 2.0 * g + e * e * n
    c = g * g - e * e * r
    disc = b * b - 4.0 * c
    if disc < 0.0:
        scale = max(b * b, abs(4.0 * c), 1.0)
        if disc < -1e-9 * scale:
            raise NumericalError(f"strongly negative discriminant {disc:.3e}")
        disc = 0.0
    return max(0.0, 0.5 * (b + np.sqrt(disc)))


class AffineComparison:
    """Precomputed matrix functionals for one affine-vs-affine comparison.

    All functionals (traces, Frobenius norms, the operator norm) come from
    dense decompositions; workspaces are per-instance, so evaluation is
    thread-safe.
    """

    def __init__(self, sigma, a, c, k, l, y):
        self.sigma = as_matrix(sigma, "sigma", square=True)
        self.a = as_matrix(a, "A", square=True)
        self.c = as_matrix(c, "C", square=True)
        self.k = as_vector(k, "k")
        self.l = as_vector(l, "l")
        self.y = as_vector(y, "y")
        n = self.y.size
        for name, m in (("sigma", self.sigma), ("A", self.a), ("C", self.c)):
            if m.shape != (n, n):
                raise ValidationError(f"{name} must be {n}x{n}, got {m.shape}")
        if self.k.size != n or self.l.size != n:
            raise ValidationError("offset vectors must match the dimension of y")
        self.n = n
        self.sqrt_sigma = sym_matrix_sqrt(self.sigma)

    @cached_property
    def _matrix_functionals(self):
        """Functionals of (Sigma, A, C) only; shared across observations."""
        delta = self.a - self.c
        s_half = self.sqrt_sigma
        m1 = s_half @ delta @ s_half
        m_sym = s_half @ (self.a + self.a.T - self.c - self.c.T) @ s_half
        frob_m1_sq = float(np.sum(m1 * m1))
        inner = s_half @ delta @ self.sigma @ delta.T @ s_half
        rho = 2.0 * float(np.sum(inner * inner))
        svals = np.linalg.svd(m1, compute_uv=False)
        op_sq = float(svals[0] ** 2) if svals.size else 0.0
        cond = float(svals[0] / svals[-1]) if svals.size and svals[-1] > 0 else np.inf
        return {
            "trace_term": 2.0 * float(np.trace(delta @ self.sigma)),
            "frob_m1_sq": frob_m1_sq,
            "rho": rho,
            "nu": 4.0 * op_sq,
            "var_quad": 0.5 * float(np.sum(m_sym * m_sym)),
            "cond_m1": cond,
        }

    @cached_property
    def _functionals(self):
        f = dict(self._matrix_functionals)
        delta = self.a - self.c
        g_y = delta @ self.y + (self.k - self.l)
        d_def = self.a @ self.y + self.k - self.y
        d_alt = self.c @ self.y + self.l - self.y
        f["gy_norm_sq"] = float(g_y @ self.sigma @ g_y)
        f["data_fit"] = float(d_def @ d_def - d_alt @ d_alt)
        return f

    def with_y(self, y):
        """A comparison of the same estimators on a new observation; the
        matrix decompositions are shared, so this is O(N^2)."""
        self._matrix_functionals  # materialize before copying so copies share it
        other = copy.copy(self)
        other.y = as_vector(y, "y")
        if other.y.size != self.n:
            raise ValidationError(f"y must have dimension {self.n}")
        other.__dict__.pop("_functionals", None)
        return other

    def condition_number(self):
        return self._matrix_functionals["cond_m1"]


def _upper_bound_u(f, miss):
    """Approximate upper confidence bound on ||G(theta)||_Sigma^2 at miss level."""
    gamma = f["gy_norm_sq"] - f["frob_m1_sq"]
    eta = normal_quantile(miss)
    # delta = 0 already satisfies the defining inequality when gamma <= eta sqrt(rho)
    if gamma <= eta * np.sqrt(f["rho"]):
        return 0.0
    return u_quadratic(QuadraticUInputs(gamma, eta, f["rho"], f["nu"]))


def affine_win_bound(cmp: AffineComparison, alpha, berry_esseen=False):
    """The approximate win lower bound b(y, alpha) for an affine comparison.

    With `berry_esseen=True` the coverage correction from
    `berry_esseen_epsilon` is spent first: the bound is evaluated at
    alpha + epsilon (or -inf when that exceeds 1, since the corrected
    guarantee is then vacuous).
    """
    alpha = check_probability(alpha, "alpha")
    if alpha >= 1.0:
        raise ValidationError("alpha must be below 1")
    if berry_esseen:
        eps = berry_esseen_epsilon(cmp).epsilon
        alpha = alpha + eps
        if alpha >= 1.0:
            return float("-inf")

    f = cmp._functionals
    degenerate = f["frob_m1_sq"] == 0.0 and f["gy_norm_sq"] == 0.0
    if not degenerate and f["frob_m1_sq"] > 0.0 and f["cond_m1"] > _CONDITION_WARN:
        warnings.warn(
            "condition number of Sigma^(1/2) (A - C) Sigma^(1/2) exceeds 1e6; "
            "the win bound may be very loose",
            RuntimeWarning,
            stacklevel=2,
        )
    miss = (1.0 - alpha) / 2.0
    u = _upper_bound_u(f, miss)
    z = normal_quantile(miss)
    return float(f["data_fit"] + f["trace_term"] + 2.0 * z * np.sqrt(u + f["var_quad"]))


@dataclass(frozen=True)
class BerryEsseenCorrection:
    """Coverage correction epsilon and the condition numbers behind it."""

    kappa: float
    c1: float
    n: int
    epsilon: float
    kappa_sym: float | None = None


def berry_esseen_epsilon(cmp: AffineComparison) -> BerryEsseenCorrection:
    """Coverage correction for the two normal approximations in the bound.

    Symmetric A and C:  epsilon = (10 sqrt(2) / sqrt(N)) * C1 * kappa^2 with
    kappa the condition number of Sigma^(1/2)(A - C)Sigma^(1/2).  Otherwise
    the general form (5 sqrt(2) / sqrt(N)) * C1 * (kappa^2 + kappa_sym)
    applies, where kappa_sym conditions the symmetrized difference.
    """
    f = cmp._matrix_functionals
    kappa = f["cond_m1"]
    if not np.isfinite(kappa):
        raise NumericalError(
            "condition number undefined: Sigma^(1/2) (A - C) Sigma^(1/2) is singular"
        )
    n = cmp.n
    atol = 1e-10 * max(1.0, np.abs(cmp.a).max(), np.abs(cmp.c).max())
    symmetric = np.allclose(cmp.a, cmp.a.T, rtol=0.0, atol=atol) and np.allclose(
        cmp.c, cmp.c.T, rtol=0.0, atol=atol
    )
    if symmetric:
        eps = (10.0 * np.sqrt(2.0) / np.sqrt(n)) * _BERRY_ESSEEN_C1 * kappa ** 2
        return BerryEsseenCorrection(kappa, _BERRY_ESSEEN_C1, n, float(eps))
    s_half = cmp.sqrt_sigma
    m_sym = s_half @ (cmp.a + cmp.a.T - cmp.c - cmp.c.T) @ s_half
    svals = np.linalg.svd(m_sym, compute_uv=False)
    if svals[-1] <= 0:
        raise NumericalError("condition number undefined for the symmetrized difference")
    kappa_sym = float(svals[0] / svals[-1])
    eps = (5.0 * np.sqrt(2.0) / np.sqrt(n)) * _BERRY_ESSEEN_C1 * (kappa ** 2 + kappa_sym)
    return BerryEsseenCorrection(kappa, _BERRY_ESSEEN_C1, n, float(eps), kappa_sym)
