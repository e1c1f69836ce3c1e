import numpy as np
import pytest

from cvalues import ValidationError
from cvalues.pipeline import build_estimator, compare


@pytest.fixture
def gaussian_data():
    rng = np.random.default_rng(123)
    n = 40
    y = rng.standard_normal(n) + 1.5
    return {"y": y, "sigma": 1.0, "X": np.column_stack([np.ones(n), np.arange(n, dtype=float)])}


class TestRouting:
    def test_exact_route_for_subspace_pairs(self, gaussian_data):
        res = compare(gaussian_data, {"kind": "mle"},
                      {"kind": "lindley_smith", "tau": 1.0})
        assert res["route"] == "exact"
        assert 0.0 <= res["c_value"] <= 1.0
        assert len(res["bound_curve"]) == 64

    def test_morris_exact_route(self, gaussian_data):
        res = compare(gaussian_data, {"kind": "mle"}, {"kind": "morris", "tau": 0.8})
        assert res["route"] == "exact"

    def test_james_stein_exact_route_reports_fitted_tau(self, gaussian_data):
        res = compare(gaussian_data, {"kind": "mle"}, {"kind": "james_stein"})
        assert res["route"] == "exact"
        assert res["estimator_summaries"]["alternative"]["fitted"]["tau2"] >= 0.0

    def test_affine_route_when_noise_correlated(self, gaussian_data):
        n = len(gaussian_data["y"])
        data = dict(gaussian_data)
        data["sigma"] = np.eye(n)  # matrix form forces the affine route
        res = compare(data, {"kind": "mle"}, {"kind": "lindley_smith", "tau": 1.0})
        assert res["route"] == "affine"

    def test_exact_and_affine_agree_on_selection_direction(self, gaussian_data):
        exact = compare(gaussian_data, {"kind": "mle"},
                        {"kind": "lindley_smith", "tau": 1.0})
        data = dict(gaussian_data)
        data["sigma"] = np.eye(len(gaussian_data["y"]))
        affine = compare(data, {"kind": "mle"}, {"kind": "lindley_smith", "tau": 1.0})
        assert abs(exact["c_value"] - affine["c_value"]) < 0.25

    def test_bound_exact_rejected_for_non_subspace_pair(self, gaussian_data):
        with pytest.raises(ValidationError):
            compare(gaussian_data, {"kind": "lindley_smith", "tau": 1.0},
                    {"kind": "lindley_smith", "tau": 2.0}, bound="exact")

    def test_logistic_route(self):
        rng = np.random.default_rng(5)
        m, n = 400, 3
        theta = np.array([0.8, -0.5, 0.3])
        x = rng.standard_normal((m, n))
        p = 1.0 / (1.0 + np.exp(-(x @ theta)))
        labels = np.where(rng.uniform(size=m) < p, 1.0, -1.0)
        data = {"covariates": x, "labels": labels}
        res = compare(data, {"kind": "logistic_mle"}, {"kind": "logistic_map"})
        assert res["route"] == "logistic"
        assert 0.0 <= res["c_value"] <= 1.0
        assert res["estimator_summaries"]["alternative"]["fitted"]["laplace_gap"] < 1e-3

    def test_logistic_route_requires_the_pair(self, gaussian_data):
        with pytest.raises(ValidationError):
            compare(gaussian_data, {"kind": "logistic_map"}, {"kind": "logistic_mle"})

    def test_hier_regression_route(self):
        rng = np.random.default_rng(6)
        d = 3
        beta = rng.standard_normal(d)
        data = {
            "x_train": rng.standard_normal((30, d)),
            "w_aux": rng.standard_normal((60, d)),
            "x_test": rng.standard_normal((12, d)),
        }
        data["y_train"] = data["x_train"] @ beta + rng.standard_normal(30)
        data["z_aux"] = data["w_aux"] @ beta + rng.standard_normal(60)
        res = compare(data, {"kind": "mle"},
                      {"kind": "hier_regression", "sigma_beta": 0.7})
        assert res["route"] == "hier_regression"
        assert 0.0 <= res["c_value"] <= 1.0

    def test_gp_pair_affine_route(self):
        rng = np.random.default_rng(7)
        n = 24
        coords = np.column_stack([
            rng.uniform(0, 1, n), rng.uniform(0, 1, n), np.linspace(0, 1, n)
        ])
        params = {"var1": 1.0, "ls1": [0.5, 0.5, 0.5], "var2": 0.5,
                  "ls2": [0.08, 0.08, 0.2]}
        data = {
            "y": rng.standard_normal(n),
            "coords": coords,
            "sigma": 0.4,
        }
        res = compare(
            data,
            {"kind": "gp_posterior", "kernel": "mesoscale_plus_nugget",
             "params": params, "sigma_eps": 0.4},
            {"kind": "gp_posterior", "kernel": "multi_scale",
             "params": params, "sigma_eps": 0.4},
        )
        assert res["route"] == "affine"

    def test_two_source_affine_route(self):
        rng = np.random.default_rng(8)
        n = 20
        data = {
            "y": rng.standard_normal(n),
            "z": rng.standard_normal(n),
            "sigma": 0.9,
        }
        res = compare(
            data, {"kind": "mle"},
            {"kind": "two_source", "sigma_y": 0.9, "sigma_z": 1.1,
             "sigma_delta": 0.4},
        )
        assert res["route"] == "affine"

    def test_unknown_kind_rejected(self, gaussian_data):
        with pytest.raises(ValidationError, match="unknown estimator kind"):
            build_estimator({"kind": "wizardry"}, gaussian_data)

    def test_missing_data_named_in_error(self):
        with pytest.raises(ValidationError, match="coords"):
            build_estimator(
                {"kind": "gp_posterior", "params": {}, "sigma_eps": 1.0}, {}
            )


class TestNoiseScaleHandling:
    def test_exact_route_estimate_uses_scaled_shrinkage(self, gaussian_data):
        # with noise scale sigma the posterior-mean weight on the residual is
        # tau^2 / (tau^2 + sigma^2)
        data = dict(gaussian_data)
        data["sigma"] = 2.0
        tau = 1.0
        res = compare(data, {"kind": "mle"}, {"kind": "lindley_smith", "tau": tau})
        y = data["y"]
        weight = tau ** 2 / (tau ** 2 + 4.0)
        expected = y.mean() + weight * (y - y.mean())
        assert res["estimator_summaries"]["alternative"]["estimate_l2"] == pytest.approx(
            float(np.linalg.norm(expected)), rel=1e-12
        )

    def test_exact_route_scaling_consistency(self, gaussian_data):
        # scaling (y, tau, sigma) jointly leaves the c-value unchanged
        base = compare(gaussian_data, {"kind": "mle"},
                       {"kind": "lindley_smith", "tau": 1.0})
        scaled_data = dict(gaussian_data)
        scaled_data["y"] = 3.0 * gaussian_data["y"]
        scaled_data["sigma"] = 3.0
        scaled = compare(scaled_data, {"kind": "mle"},
                         {"kind": "lindley_smith", "tau": 3.0})
        assert scaled["c_value"] == pytest.approx(base["c_value"], abs=2e-6)


class TestBerryEsseenFlag:
    def test_flag_never_raises_and_never_loosens(self):
        rng = np.random.default_rng(9)
        n = 30
        data = {
            "y": rng.standard_normal(n),
            "z": rng.standard_normal(n),
            "sigma": 1.0,
        }
        spec = {"kind": "two_source", "sigma_y": 1.0, "sigma_z": 1.0,
                "sigma_delta": 0.5}
        plain = compare(data, {"kind": "mle"}, spec)
        corrected = compare(data, {"kind": "mle"}, spec, berry_esseen=True)
        assert corrected["c_value"] <= plain["c_value"] + 1e-9
