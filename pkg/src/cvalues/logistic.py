"""Logistic regression estimates and the Laplace affine pathway.

Labels live in {+1, -1} and P[y = 1 | x] = 1 / (1 + exp(-x^T theta)).  The
default estimate is the MLE; the alternative is the MAP under a standard
normal prior (L2-regularized logistic regression).  For the win bound the
MAP is approximated by an affine transformation of the MLE,

    theta_tilde = [I + Sigma_tilde]^{-1} theta_hat,

with Sigma_tilde the inverse observed-information matrix at the MLE, and the
MLE itself plays the role of the "data" with covariance Sigma_tilde.
"""

from dataclasses import dataclass

import numpy as np

from .affine import AffineComparison
from .errors import NumericalError, ValidationError
from .validation import as_matrix, as_vector

_GRAD_TOL = 1e-10
_MAX_ITER = 100
_SEPARATION_NORM = 1e3


def _check_data(covariates, labels):
    x = as_matrix(covariates, "covariates")
    y = as_vector(labels, "labels")
    if x.shape[0] != y.size:
        raise ValidationError("one label per covariate row required")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValidationError("labels must be +1 or -1")
    return x, y


def _neg_log_lik(theta, x, y):
    margins = y * (x @ theta)
    return float(np.sum(np.logaddexp(0.0, -margins)))


def _newton(x, y, ridge):
    """Damped Newton on the (optionally ridge-penalized) negative log likelihood."""
    m, n = x.shape
    theta = np.zeros(n)
    obj = _neg_log_lik(theta, x, y) + 0.5 * ridge * float(theta @ theta)
    for _ in range(_MAX_ITER):
        margins = y * (x @ theta)
        p = 1.0 / (1.0 + np.exp(np.clip(margins, -500, 500)))
        grad = -(x.T @ (y * p)) + ridge * theta
        gnorm = float(np.linalg.norm(grad))
        if ridge == 0.0 and np.linalg.norm(theta) > _SEPARATION_NORM and gnorm > _GRAD_TOL:
            raise NumericalError(
                "MLE diverging: the data appear to be linearly separable"
            )
        if gnorm <= _GRAD_TOL:
            return theta
        weights = p * (1.0 - p)
        hess = (x.T * weights) @ x + ridge * np.eye(n)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular Hessian in Newton step") from exc
        # accept any non-increase up to float rounding of the objective,
        # otherwise halve; near the optimum the true decrease is below one ulp
        slack = 1e-12 * (1.0 + abs(obj))
        t = 1.0
        for _ in range(60):
            cand = theta - t * step
            cand_obj = _neg_log_lik(cand, x, y) + 0.5 * ridge * float(cand @ cand)
            if cand_obj <= obj + slack:
                break
            t *= 0.5
        theta, obj = cand, cand_obj
    margins = y * (x @ theta)
    p = 1.0 / (1.0 + np.exp(np.clip(margins, -500, 500)))
    grad = -(x.T @ (y * p)) + ridge * theta
    if float(np.linalg.norm(grad)) > _GRAD_TOL:
        raise NumericalError("Newton iteration cap reached before convergence")
    return theta


def logistic_mle(covariates, labels):
    """Maximum-likelihood coefficients; raises on (detected) separation."""
    x, y = _check_data(covariates, labels)
    if x.shape[0] < x.shape[1]:
        raise ValidationError("need at least as many observations as coefficients")
    return _newton(x, y, ridge=0.0)


def logistic_map(covariates, labels):
    """MAP coefficients under a standard normal prior (unit ridge penalty)."""
    x, y = _check_data(covariates, labels)
    return _newton(x, y, ridge=1.0)


def _likelihood_hessian(theta, x, y):
    margins = y * (x @ theta)
    p = 1.0 / (1.0 + np.exp(np.clip(margins, -500, 500)))
    weights = p * (1.0 - p)
    return (x.T * weights) @ x


@dataclass(frozen=True)
class LaplaceAffine:
    """The MLE, its Laplace covariance, and the affine MAP approximation."""

    theta_hat: np.ndarray
    sigma_tilde: np.ndarray
    c_matrix: np.ndarray
    theta_tilde: np.ndarray

    def comparison(self) -> AffineComparison:
        """Affine comparison of the MLE (default) vs the approximate MAP."""
        n = self.theta_hat.size
        return AffineComparison(
            sigma=self.sigma_tilde,
            a=np.eye(n),
            c=self.c_matrix,
            k=np.zeros(n),
            l=np.zeros(n),
            y=self.theta_hat,
        )


def logistic_laplace_affine(covariates, labels, theta_hat=None) -> LaplaceAffine:
    """Affine approximation of the MAP: theta_tilde = [I + H^{-1}]^{-1} theta_hat."""
    x, y = _check_data(covariates, labels)
    if theta_hat is None:
        theta_hat = logistic_mle(x, y)
    hess = _likelihood_hessian(theta_hat, x, y)
    try:
        sigma_tilde = np.linalg.inv(hess)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular Hessian at the MLE") from exc
    sigma_tilde = 0.5 * (sigma_tilde + sigma_tilde.T)
    n = theta_hat.size
    c_matrix = np.linalg.inv(np.eye(n) + sigma_tilde)
    c_matrix = 0.5 * (c_matrix + c_matrix.T)
    return LaplaceAffine(theta_hat, sigma_tilde, c_matrix, c_matrix @ theta_hat)
