"""Estimator zoo: point estimates of normal means and their affine forms.

Every estimator follows a small sklearn-flavored protocol:

    est = Kind(**hyperparams)
    est.fit(y)            # validates y, estimates any data-driven parameters
    est.predict(y)        # the point estimate of theta
    est.affine_map()      # AffineMap(matrix, offset) with estimate = M y + m
    est.get_params()      # constructor parameters, for config round trips

Estimators whose hyperparameters are fixed do no work in fit beyond
validation; empirical-Bayes estimators (James-Stein, the fitted Fay-Herriot)
estimate their prior parameters there, and the affine map then treats the
fitted values as if they were fixed.
"""

import inspect
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import NumericalError, ValidationError
from .validation import (
    as_matrix,
    as_vector,
    check_full_column_rank,
    check_positive,
    check_same_length,
)


@dataclass(frozen=True)
class AffineMap:
    """An affine transformation y -> matrix @ y + offset."""

    matrix: np.ndarray
    offset: np.ndarray

    def __call__(self, y):
        return self.matrix @ np.asarray(y, dtype=float) + self.offset

    @property
    def symmetric(self):
        m = self.matrix
        return bool(np.allclose(m, m.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(m).max())))


class Estimator:
    """Base class providing the fit/predict/get_params surface."""

    def fit(self, y):
        y = as_vector(y, "y")
        self._validate(y)
        self.n_ = y.size
        self._fit(y)
        return self

    def predict(self, y):
        y = as_vector(y, "y")
        if not hasattr(self, "n_"):
            self.fit(y)
        if y.size != self.n_:
            raise ValidationError(f"y has dimension {y.size}, expected {self.n_}")
        return self._predict(y)

    def fit_predict(self, y):
        return self.fit(y).predict(y)

    def affine_map(self) -> AffineMap:
        if not hasattr(self, "n_"):
            raise ValidationError("call fit before affine_map")
        return self._affine_map()

    def get_params(self):
        names = [
            p.name
            for p in inspect.signature(type(self).__init__).parameters.values()
            if p.name != "self" and p.kind != p.VAR_KEYWORD
        ]
        return {name: getattr(self, name) for name in names}

    # subclass hooks
    def _validate(self, y):
        pass

    def _fit(self, y):
        pass

    def _predict(self, y):
        return self.affine_map()(y)

    def _affine_map(self):
        raise NotImplementedError


class Mle(Estimator):
    """The identity estimate: the observation itself."""

    def _affine_map(self):
        return AffineMap(np.eye(self.n_), np.zeros(self.n_))


def _projection(X):
    q, _ = np.linalg.qr(X)
    return q @ q.T


class LindleySmith(Estimator):
    """Shrinks every coordinate toward the grand mean:
    (y + tau^{-2} ybar 1) / (1 + tau^{-2})."""

    def __init__(self, tau):
        self.tau = check_positive(tau, "tau")

    def _predict(self, y):
        w = self.tau ** -2
        return (y + w * y.mean()) / (1.0 + w)

    def _affine_map(self):
        n = self.n_
        p_perp = np.eye(n) - np.ones((n, n)) / n
        return AffineMap(np.eye(n) - p_perp / (1.0 + self.tau ** 2), np.zeros(n))


class MorrisShrinkage(Estimator):
    """Shrinks toward the column space of a design X:
    (y + tau^{-2} P_X y) / (1 + tau^{-2})."""

    def __init__(self, X, tau):
        self.X = check_full_column_rank(X, "X")
        self.tau = check_positive(tau, "tau")

    def _validate(self, y):
        if y.size != self.X.shape[0]:
            raise ValidationError(
                f"y has dimension {y.size} but X has {self.X.shape[0]} rows"
            )

    def _affine_map(self):
        n = self.n_
        p_perp = np.eye(n) - _projection(self.X)
        return AffineMap(np.eye(n) - p_perp / (1.0 + self.tau ** 2), np.zeros(n))


class JamesStein(Estimator):
    """Empirical-Bayes shrinkage toward the origin with plug-in prior variance.

    fit estimates tau2_ = ||y||^2 / (N - 2) - 1 (floored at zero, which
    reproduces full shrinkage) and the estimate is
    (1 - (1 + tau2_)^{-1}) y.
    """

    def _validate(self, y):
        if y.size <= 2:
            raise ValidationError("James-Stein shrinkage requires N > 2")

    def _fit(self, y):
        self.tau2_ = max(0.0, float(y @ y) / (y.size - 2) - 1.0)

    def _affine_map(self):
        factor = 1.0 - 1.0 / (1.0 + self.tau2_)
        return AffineMap(factor * np.eye(self.n_), np.zeros(self.n_))


class FayHerriot(Estimator):
    """Posterior mean under theta ~ N(X beta, tau^2 I), y ~ N(theta, diag(sigma2)):

    estimate = [I + tau^{-2} Sigma]^{-1} y + [I + tau^2 Sigma^{-1}]^{-1} X beta.
    """

    def __init__(self, X, beta, tau, sigma_diag):
        self.X = as_matrix(X, "X")
        self.beta = as_vector(beta, "beta")
        if self.X.shape[1] != self.beta.size:
            raise ValidationError("beta length must match the number of columns of X")
        self.tau = check_positive(tau, "tau")
        sigma_diag = as_vector(sigma_diag, "sigma_diag")
        if np.any(sigma_diag <= 0):
            raise ValidationError("sigma_diag entries must be positive")
        self.sigma_diag = sigma_diag

    def _validate(self, y):
        check_same_length("y", y, "sigma_diag", self.sigma_diag)
        if y.size != self.X.shape[0]:
            raise ValidationError("y dimension must match the rows of X")

    def _affine_map(self):
        t2 = self.tau ** 2
        w_data = t2 / (t2 + self.sigma_diag)
        w_prior = self.sigma_diag / (t2 + self.sigma_diag)
        return AffineMap(np.diag(w_data), w_prior * (self.X @ self.beta))


def eb_fit_fay_herriot(y, X, noise_weights, max_iter=500):
    """Marginal-likelihood fit of (beta, tau, sigma) for the Fay-Herriot model.

    Per-unit noise variances are sigma^2 * noise_weights with the weights
    known (they carry the per-unit sample sizes), so the marginal model is
    y_i ~ N(x_i beta, tau^2 + sigma^2 w_i).  For a fixed variance ratio
    r = tau^2 / sigma^2 the GLS beta and the scale sigma^2 are closed-form;
    the profile likelihood over r is then maximized by a bracketed
    golden-section search.  Deterministic given the data.
    """
    y = as_vector(y, "y")
    X = check_full_column_rank(X, "X")
    w = as_vector(noise_weights, "noise_weights")
    check_same_length("y", y, "noise_weights", w)
    if np.any(w <= 0):
        raise ValidationError("noise_weights must be positive")
    n, d = X.shape
    if n <= d + 2:
        raise ValidationError("need N > D + 2 to fit the variance components")

    def profile(log_r):
        # V = sigma^2 (r I + diag(w)); whiten, GLS beta, profiled sigma^2
        r = np.exp(log_r)
        v = r + w
        sw = 1.0 / np.sqrt(v)
        xw = X * sw[:, None]
        yw = y * sw
        beta, *_ = np.linalg.lstsq(xw, yw, rcond=None)
        resid = yw - xw @ beta
        sigma2 = float(resid @ resid) / n
        if sigma2 <= 0:
            return np.inf, beta, sigma2
        nll = 0.5 * (n * np.log(sigma2) + np.sum(np.log(v)) + n)
        return nll, beta, sigma2

    lo, hi = np.log(1e-8), np.log(1e8)
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    e = lo + invphi * (hi - lo)
    fc, fe = profile(c)[0], profile(e)[0]
    for _ in range(max_iter):
        if hi - lo < 1e-10:
            break
        if fc < fe:
            hi, e, fe = e, c, fc
            c = hi - invphi * (hi - lo)
            fc = profile(c)[0]
        else:
            lo, c, fc = c, e, fe
            e = lo + invphi * (hi - lo)
            fe = profile(e)[0]
    else:
        raise NumericalError("profile likelihood search did not converge")
    log_r = c if fc < fe else e
    _, beta, sigma2 = profile(log_r)
    sigma = float(np.sqrt(sigma2))
    tau = float(np.sqrt(np.exp(log_r) * sigma2))
    return beta, tau, sigma


class FayHerriotEB(FayHerriot):
    """Fay-Herriot posterior mean with hyperparameters fitted from the data."""

    def __init__(self, X, noise_weights):
        self.X = check_full_column_rank(X, "X")
        self.noise_weights = as_vector(noise_weights, "noise_weights")

    def _validate(self, y):
        check_same_length("y", y, "noise_weights", self.noise_weights)
        if y.size != self.X.shape[0]:
            raise ValidationError("y dimension must match the rows of X")

    def _fit(self, y):
        beta, tau, sigma = eb_fit_fay_herriot(y, self.X, self.noise_weights)
        self.beta_, self.tau_, self.sigma_ = beta, tau, sigma

    def _affine_map(self):
        t2 = max(self.tau_, 1e-8) ** 2
        sigma_diag = self.sigma_ ** 2 * self.noise_weights
        w_data = t2 / (t2 + sigma_diag)
        w_prior = sigma_diag / (t2 + sigma_diag)
        return AffineMap(np.diag(w_data), w_prior * (self.X @ self.beta_))

    def noise_diag(self):
        return self.sigma_ ** 2 * self.noise_weights


class TwoSourcePosterior(Estimator):
    """Pools a primary observation y with an auxiliary source z per coordinate.

    Both sources share an unknown coordinate-wise mean (flat prior) with
    source-specific deviations of scale sigma_delta; the posterior mean is

        [(2 sd^2 + sz^2) y + sy^2 z] / (2 sd^2 + sy^2 + sz^2).
    """

    def __init__(self, z, sigma_y, sigma_z, sigma_delta):
        self.z = as_vector(z, "z")
        self.sigma_y = check_positive(sigma_y, "sigma_y")
        self.sigma_z = check_positive(sigma_z, "sigma_z")
        self.sigma_delta = check_positive(sigma_delta, "sigma_delta", allow_zero=True)

    def _validate(self, y):
        check_same_length("y", y, "z", self.z)

    def _affine_map(self):
        sy2 = self.sigma_y ** 2
        denom = 2.0 * self.sigma_delta ** 2 + self.sigma_z ** 2 + sy2
        w_y = (2.0 * self.sigma_delta ** 2 + self.sigma_z ** 2) / denom
        return AffineMap(w_y * np.eye(self.n_), (sy2 / denom) * self.z)


class TwoSourceSpatial(Estimator):
    """Two-source pooling with a shared spatial covariance K on the deviations:

    estimate = [I + sy^2 (2K + 2 sd^2 I + sz^2 I)^{-1}]^{-1} y
             + [I + sy^{-2} (2K + 2 sd^2 I + sz^2 I)]^{-1} z.
    """

    def __init__(self, z, sigma_y, sigma_z, sigma_delta, K):
        self.z = as_vector(z, "z")
        self.sigma_y = check_positive(sigma_y, "sigma_y")
        self.sigma_z = check_positive(sigma_z, "sigma_z")
        self.sigma_delta = check_positive(sigma_delta, "sigma_delta", allow_zero=True)
        K = as_matrix(K, "K", square=True)
        if K.shape[0] != self.z.size:
            raise ValidationError("K must match the dimension of z")
        if not np.allclose(K, K.T, atol=1e-10 * max(1.0, np.abs(K).max())):
            raise ValidationError("K must be symmetric")
        if np.linalg.eigvalsh(K).min() < -1e-10 * max(1.0, np.abs(K).max()):
            raise ValidationError("K must be positive semidefinite")
        self.K = K

    def _validate(self, y):
        check_same_length("y", y, "z", self.z)

    def _affine_map(self):
        n = self.n_
        sy2 = self.sigma_y ** 2
        m = 2.0 * self.K + (2.0 * self.sigma_delta ** 2 + self.sigma_z ** 2) * np.eye(n)
        a_y = np.linalg.solve(np.eye(n) + sy2 * np.linalg.inv(m), np.eye(n))
        a_z = np.linalg.solve(np.eye(n) + m / sy2, np.eye(n))
        return AffineMap(0.5 * (a_y + a_y.T), a_z @ self.z)


def squared_exponential_kernel(coords, variance, length_scales):
    """Anisotropic squared-exponential kernel matrix over rows of `coords`."""
    coords = as_matrix(coords, "coords")
    ls = as_vector(length_scales, "length_scales")
    if ls.size != coords.shape[1]:
        raise ValidationError("need one length scale per coordinate dimension")
    if np.any(ls <= 0):
        raise ValidationError("length scales must be positive")
    check_positive(variance, "variance", allow_zero=True)
    scaled = coords / ls
    sq = np.sum(scaled ** 2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * scaled @ scaled.T
    return variance * np.exp(-0.5 * np.clip(d2, 0.0, None))


def multi_scale_kernel(coords, params):
    """Sum of two squared-exponential components (slow + fast variation)."""
    k1 = squared_exponential_kernel(coords, params["var1"], params["ls1"])
    k2 = squared_exponential_kernel(coords, params["var2"], params["ls2"])
    return k1 + k2


def nugget_baseline_kernel(coords, params):
    """Slow component plus an independent nugget with the fast component's
    variance, so the marginal (diagonal) variance matches the multi-scale
    kernel exactly."""
    k1 = squared_exponential_kernel(coords, params["var1"], params["ls1"])
    return k1 + params["var2"] * np.eye(k1.shape[0])


GP_KERNELS = {
    "multi_scale": multi_scale_kernel,
    "mesoscale_plus_nugget": nugget_baseline_kernel,
}


class GPPosteriorMean(Estimator):
    """Posterior mean of a zero-mean Gaussian process observed with iid noise.

    estimate = [I + sigma_eps^2 K^{-1}]^{-1} y, computed stably through the
    Cholesky factor of K + sigma_eps^2 I (with a small diagonal jitter).
    """

    def __init__(self, coords, kernel, params, sigma_eps):
        self.coords = as_matrix(coords, "coords")
        if kernel not in GP_KERNELS:
            raise ValidationError(
                f"unknown kernel {kernel!r}; choose from {sorted(GP_KERNELS)}"
            )
        self.kernel = kernel
        self.params = dict(params)
        self.sigma_eps = check_positive(sigma_eps, "sigma_eps")

    def _validate(self, y):
        if y.size != self.coords.shape[0]:
            raise ValidationError("y must have one entry per coordinate row")

    def kernel_matrix(self):
        return GP_KERNELS[self.kernel](self.coords, self.params)

    def _affine_map(self):
        n = self.n_
        k = self.kernel_matrix()
        jitter = 1e-8 * float(np.mean(np.diag(k)))
        noisy = k + (self.sigma_eps ** 2 + jitter) * np.eye(n)
        try:
            cho = sla.cho_factor(noisy, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("Cholesky factorization failed after jitter") from exc
        a = sla.cho_solve(cho, k)
        return AffineMap(0.5 * (a + a.T), np.zeros(n))


def sure_selector(y, tau, literal_direction=False):
    """Model choice by Stein's unbiased risk estimate for grand-mean shrinkage.

    SURE = N - 2 tr(G) + ||G y||^2 with G = (1 + tau^2)^{-1} P_1_perp is an
    unbiased estimate of the shrinkage estimator's risk; the MLE's risk is
    exactly N.  The selector reports the alternative when SURE < N (ties go
    to the default).  `literal_direction=True` flips the rule to report the
    alternative when SURE > N.
    """
    y = as_vector(y, "y")
    tau = check_positive(tau, "tau")
    n = y.size
    resid = y - y.mean()
    g_y = resid / (1.0 + tau ** 2)
    trace_g = (n - 1) / (1.0 + tau ** 2)
    sure = n - 2.0 * trace_g + float(g_y @ g_y)
    better = sure > n if literal_direction else sure < n
    label = "alternative" if better else "default"
    return label, float(sure)


def hier_regression_posterior(x_train, y_train, w_aux, z_aux, x_test, sigma_beta):
    """Posterior-mean regression predictions pooled with an auxiliary dataset.

    Both datasets are linear-Gaussian with unit noise and coefficient vectors
    tied through a shared flat-prior mean, beta, eta ~ N(mu, sigma_beta^2 I).
    Conditioning on the auxiliary data gives beta | Z ~ N(eta_hat, Sigma_b)
    with eta_hat the auxiliary least-squares fit and
    Sigma_b = 2 sigma_beta^2 I + (W^T W)^{-1}; the estimate of X beta is then

        theta_star = theta_hat - X [I + Sigma_b Xbar^T Xbar]^{-1}
                     (X^+ theta_hat - eta_hat),

    where theta_hat = X beta_hat are the plain least-squares predictions.
    Returns (theta_star, comparison) with `comparison` the affine ingredients
    (A = I, k = 0, C, l, y = theta_hat, Sigma = X (Xbar^T Xbar)^{-1} X^T).
    """
    x_train = check_full_column_rank(x_train, "x_train")
    y_train = as_vector(y_train, "y_train")
    w_aux = check_full_column_rank(w_aux, "w_aux")
    z_aux = as_vector(z_aux, "z_aux")
    x_test = check_full_column_rank(x_test, "x_test")
    check_positive(sigma_beta, "sigma_beta")
    if x_train.shape[0] != y_train.size or w_aux.shape[0] != z_aux.size:
        raise ValidationError("design rows must match response lengths")
    d = x_train.shape[1]
    if w_aux.shape[1] != d or x_test.shape[1] != d:
        raise ValidationError("all designs must share the same number of columns")

    gram_train = x_train.T @ x_train
    beta_hat = np.linalg.solve(gram_train, x_train.T @ y_train)
    eta_hat = np.linalg.solve(w_aux.T @ w_aux, w_aux.T @ z_aux)
    sigma_b = 2.0 * sigma_beta ** 2 * np.eye(d) + np.linalg.inv(w_aux.T @ w_aux)

    theta_hat = x_test @ beta_hat
    bracket = np.linalg.inv(np.eye(d) + sigma_b @ gram_train)
    pinv_test = np.linalg.solve(x_test.T @ x_test, x_test.T)
    c_matrix = np.eye(x_test.shape[0]) - x_test @ bracket @ pinv_test
    ell = x_test @ bracket @ eta_hat
    theta_star = c_matrix @ theta_hat + ell

    sigma = x_test @ np.linalg.solve(gram_train, x_test.T)
    comparison = {
        "A": np.eye(x_test.shape[0]),
        "k": np.zeros(x_test.shape[0]),
        "C": c_matrix,
        "l": ell,
        "y": theta_hat,
        "sigma": 0.5 * (sigma + sigma.T),
    }
    return theta_star, comparison
