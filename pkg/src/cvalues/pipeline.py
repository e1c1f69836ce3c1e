"""Resolve estimator specs, pick a bound route, and compute a c-value.

This is the glue between config-level descriptions of a comparison and the
bound machinery: normal-means pairs take the exact chi-squared bound, affine
pairs take the approximate bound under their Gaussian noise model, and the
logistic pair goes through the Laplace affine pathway.
"""

import warnings

import numpy as np

from .affine import AffineComparison, affine_win_bound
from .core import LowerBoundEvaluator, c_value, two_stage_label
from .errors import ValidationError
from .estimators import (
    FayHerriot,
    FayHerriotEB,
    GPPosteriorMean,
    JamesStein,
    LindleySmith,
    Mle,
    MorrisShrinkage,
    TwoSourcePosterior,
    TwoSourceSpatial,
    hier_regression_posterior,
    squared_exponential_kernel,
)
from .logistic import logistic_laplace_affine, logistic_map, logistic_mle
from .normal_means import SubspaceShrinkageSpec, subspace_bound
from .validation import as_vector, check_probability

EXACT_ALTERNATIVES = ("lindley_smith", "morris", "james_stein")
LOGISTIC_KINDS = ("logistic_mle", "logistic_map")


def _need(data, key, kind):
    if data.get(key) is None:
        raise ValidationError(f"estimator kind {kind!r} requires {key!r} data")
    return data[key]


def build_estimator(spec, data):
    """Instantiate an estimator from a {"kind": ..., ...} mapping."""
    kind = spec.get("kind")
    params = {k: v for k, v in spec.items() if k != "kind"}
    if kind == "mle":
        return Mle()
    if kind == "lindley_smith":
        return LindleySmith(tau=params["tau"])
    if kind == "morris":
        return MorrisShrinkage(_need(data, "X", kind), tau=params["tau"])
    if kind == "james_stein":
        return JamesStein()
    if kind == "fay_herriot":
        return FayHerriot(
            _need(data, "X", kind), np.asarray(params["beta"], float),
            params["tau"], _need(data, "sigma_diag", kind),
        )
    if kind == "fay_herriot_eb":
        return FayHerriotEB(_need(data, "X", kind), _need(data, "sigma_diag", kind))
    if kind == "two_source":
        return TwoSourcePosterior(
            _need(data, "z", kind), params["sigma_y"], params["sigma_z"],
            params["sigma_delta"],
        )
    if kind == "two_source_spatial":
        coords = _need(data, "coords", kind)
        k_matrix = squared_exponential_kernel(
            coords, params["k_var"], params["k_ls"]
        )
        return TwoSourceSpatial(
            _need(data, "z", kind), params["sigma_y"], params["sigma_z"],
            params["sigma_delta"], k_matrix,
        )
    if kind == "gp_posterior":
        return GPPosteriorMean(
            _need(data, "coords", kind), params.get("kernel", "multi_scale"),
            params["params"], params["sigma_eps"],
        )
    raise ValidationError(f"unknown estimator kind {kind!r}")


def _estimator_summary(kind, spec, estimate, fitted=None):
    summary = {
        "kind": kind,
        "params": {k: v for k, v in spec.items() if k != "kind"},
        "estimate_l2": float(np.linalg.norm(estimate)),
        "dimension": int(np.size(estimate)),
    }
    if fitted:
        summary["fitted"] = fitted
    return summary


def _sigma_matrix(data, n):
    sigma = data.get("sigma")
    if sigma is None:
        return np.eye(n), 1.0
    if np.isscalar(sigma):
        return float(sigma) ** 2 * np.eye(n), float(sigma)
    sigma = np.asarray(sigma, float)
    if sigma.ndim == 1:
        if sigma.size != n:
            raise ValidationError("sigma diagonal length must match y")
        return np.diag(sigma ** 2), None
    if sigma.shape != (n, n):
        raise ValidationError(f"sigma matrix must be {n}x{n}")
    return sigma, None


def _finish(evaluator, alpha, route, summaries, caught):
    result = c_value(evaluator)
    label = two_stage_label(result.c_value, alpha)
    messages = sorted({str(w.message) for w in caught})
    if result.degenerate_at_one:
        messages.append(
            "the lower bound stayed positive over the whole level grid; "
            "the c-value is reported as 1"
        )
    return {
        "c_value": result.c_value,
        "bound_curve": [[a, b] for a, b in result.bound_samples],
        "selected_at_alpha": label,
        "alpha": alpha,
        "route": route,
        "estimator_summaries": summaries,
        "warnings": messages,
    }


def compare(data, default_spec, alternative_spec, alpha=0.95, berry_esseen=False,
            bound="auto"):
    """Compute the c-value for one default/alternative comparison.

    `data` carries the observation vector under "y" plus whatever the
    estimator kinds need (design "X", auxiliary "z", "coords", "sigma",
    "sigma_diag", logistic "covariates"/"labels", hierarchical-regression
    blocks).  Returns a JSON-ready result dict.
    """
    alpha = check_probability(alpha, "alpha")
    d_kind = default_spec.get("kind")
    a_kind = alternative_spec.get("kind")
    if bound not in ("auto", "exact", "affine"):
        raise ValidationError("bound must be auto, exact, or affine")

    if d_kind in LOGISTIC_KINDS or a_kind in LOGISTIC_KINDS:
        if (d_kind, a_kind) != ("logistic_mle", "logistic_map"):
            raise ValidationError(
                "the logistic pathway compares logistic_mle (default) "
                "against logistic_map (alternative)"
            )
        return _compare_logistic(data, default_spec, alternative_spec, alpha,
                                 berry_esseen)

    if a_kind == "hier_regression":
        return _compare_hier_regression(data, default_spec, alternative_spec,
                                        alpha, berry_esseen)

    y = as_vector(_need(data, "y", d_kind or "comparison"), "y")
    sigma = data.get("sigma")
    isotropic = sigma is None or np.isscalar(sigma)
    exact_ok = (
        d_kind == "mle" and a_kind in EXACT_ALTERNATIVES and isotropic
        and not berry_esseen
    )
    if bound == "exact" and not exact_ok:
        raise ValidationError(
            "the exact bound needs an MLE default, a subspace-shrinkage "
            "alternative, and isotropic noise"
        )
    if exact_ok and bound in ("auto", "exact"):
        return _compare_exact(data, y, default_spec, alternative_spec, alpha)
    return _compare_affine(data, y, default_spec, alternative_spec, alpha,
                           berry_esseen)


def _compare_exact(data, y, default_spec, alternative_spec, alpha):
    a_kind = alternative_spec["kind"]
    sigma = data.get("sigma")
    sigma = 1.0 if sigma is None else float(sigma)
    # estimates and tau are defined in unit-noise coordinates so the shrinkage
    # weight comes out as tau^2 / (tau^2 + sigma^2)
    y_unit = y / sigma
    fitted = None
    if a_kind == "lindley_smith":
        est = LindleySmith(alternative_spec["tau"] / sigma).fit(y_unit)
        spec = SubspaceShrinkageSpec(y, np.ones((y.size, 1)),
                                     alternative_spec["tau"], sigma)
    elif a_kind == "morris":
        X = _need(data, "X", a_kind)
        est = MorrisShrinkage(X, alternative_spec["tau"] / sigma).fit(y_unit)
        spec = SubspaceShrinkageSpec(y, X, alternative_spec["tau"], sigma)
    else:
        est = JamesStein().fit(y_unit)
        fitted = {"tau2": est.tau2_}
        spec = SubspaceShrinkageSpec(y, None, sigma * float(np.sqrt(est.tau2_)), sigma)
    alt_estimate = sigma * est.predict(y_unit)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        evaluator = LowerBoundEvaluator(
            lambda a: subspace_bound(spec, a), name="exact"
        )
        summaries = {
            "default": _estimator_summary("mle", {}, y),
            "alternative": _estimator_summary(
                a_kind, alternative_spec, alt_estimate, fitted
            ),
        }
        return _finish(evaluator, alpha, "exact", summaries, caught)


def _compare_affine(data, y, default_spec, alternative_spec, alpha, berry_esseen):
    sigma_matrix, _ = _sigma_matrix(data, y.size)
    default = build_estimator(default_spec, data).fit(y)
    alternative = build_estimator(alternative_spec, data).fit(y)
    d_map, a_map = default.affine_map(), alternative.affine_map()
    fitted = {}
    for label, est in (("default", default), ("alternative", alternative)):
        if isinstance(est, JamesStein):
            fitted[label] = {"tau2": est.tau2_}
        elif isinstance(est, FayHerriotEB):
            fitted[label] = {
                "beta": est.beta_.tolist(), "tau": est.tau_, "sigma": est.sigma_,
            }
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cmp = AffineComparison(
            sigma_matrix, d_map.matrix, a_map.matrix, d_map.offset, a_map.offset, y
        )
        evaluator = LowerBoundEvaluator(
            lambda a: affine_win_bound(cmp, a, berry_esseen=berry_esseen),
            name="affine",
        )
        summaries = {
            "default": _estimator_summary(
                default_spec["kind"], default_spec, default.predict(y),
                fitted.get("default"),
            ),
            "alternative": _estimator_summary(
                alternative_spec["kind"], alternative_spec, alternative.predict(y),
                fitted.get("alternative"),
            ),
        }
        return _finish(evaluator, alpha, "affine", summaries, caught)


def _compare_logistic(data, default_spec, alternative_spec, alpha, berry_esseen):
    covariates = _need(data, "covariates", "logistic_mle")
    labels = _need(data, "labels", "logistic_mle")
    theta_hat = logistic_mle(covariates, labels)
    theta_map = logistic_map(covariates, labels)
    laplace = logistic_laplace_affine(covariates, labels, theta_hat)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cmp = laplace.comparison()
        evaluator = LowerBoundEvaluator(
            lambda a: affine_win_bound(cmp, a, berry_esseen=berry_esseen),
            name="logistic",
        )
        summaries = {
            "default": _estimator_summary("logistic_mle", default_spec, theta_hat),
            "alternative": _estimator_summary(
                "logistic_map", alternative_spec, theta_map,
                {"laplace_gap": float(np.linalg.norm(laplace.theta_tilde - theta_map))},
            ),
        }
        return _finish(evaluator, alpha, "logistic", summaries, caught)


def _compare_hier_regression(data, default_spec, alternative_spec, alpha,
                             berry_esseen):
    if default_spec.get("kind") != "mle":
        raise ValidationError("hier_regression compares against the mle default")
    theta_star, parts = hier_regression_posterior(
        _need(data, "x_train", "hier_regression"),
        _need(data, "y_train", "hier_regression"),
        _need(data, "w_aux", "hier_regression"),
        _need(data, "z_aux", "hier_regression"),
        _need(data, "x_test", "hier_regression"),
        alternative_spec["sigma_beta"],
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cmp = AffineComparison(
            parts["sigma"], parts["A"], parts["C"], parts["k"], parts["l"],
            parts["y"],
        )
        evaluator = LowerBoundEvaluator(
            lambda a: affine_win_bound(cmp, a, berry_esseen=berry_esseen),
            name="hier_regression",
        )
        summaries = {
            "default": _estimator_summary("mle", default_spec, parts["y"]),
            "alternative": _estimator_summary(
                "hier_regression", alternative_spec, theta_star
            ),
        }
        return _finish(evaluator, alpha, "hier_regression", summaries, caught)
