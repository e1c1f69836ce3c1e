import numpy as np
import pytest

from cvalues import ValidationError
from cvalues.estimators import (
    FayHerriot,
    FayHerriotEB,
    GPPosteriorMean,
    JamesStein,
    LindleySmith,
    Mle,
    MorrisShrinkage,
    TwoSourcePosterior,
    TwoSourceSpatial,
    eb_fit_fay_herriot,
    hier_regression_posterior,
    multi_scale_kernel,
    nugget_baseline_kernel,
    squared_exponential_kernel,
    sure_selector,
)


def solve_information_form(precision_blocks, linear_terms):
    """Posterior mean from a block precision matrix and linear term.

    Improper flat priors enter as zero precision, so no limiting argument is
    needed; this is the generic Gaussian-conditioning oracle used throughout.
    """
    P = np.block(precision_blocks)
    b = np.concatenate(linear_terms)
    return np.linalg.solve(P, b)


class TestMle:
    def test_identity(self):
        y = np.array([1.0, -2.0, 3.0])
        est = Mle().fit(y)
        assert np.array_equal(est.predict(y), y)
        m = est.affine_map()
        assert np.array_equal(m(y), y)


class TestLindleySmith:
    def test_constant_vector_unchanged(self):
        y = 4.2 * np.ones(9)
        assert np.allclose(LindleySmith(tau=1.3).fit_predict(y), y)

    def test_orthocomplement_component_shrinks_algebraically(self):
        rng = np.random.default_rng(0)
        y = rng.standard_normal(15)
        tau = 0.8
        est = LindleySmith(tau=tau).fit(y)
        out = est.predict(y)
        resid_out = out - out.mean()
        resid_in = y - y.mean()
        assert np.allclose(resid_out, resid_in / (1.0 + tau ** -2))

    def test_large_tau_limit_is_identity(self):
        rng = np.random.default_rng(1)
        y = rng.standard_normal(10)
        out = LindleySmith(tau=1e8).fit_predict(y)
        assert np.allclose(out, y, atol=1e-6)

    def test_affine_map_matches_direct(self):
        rng = np.random.default_rng(2)
        y = rng.standard_normal(12)
        est = LindleySmith(tau=0.6).fit(y)
        assert np.linalg.norm(est.affine_map()(y) - est.predict(y)) <= 1e-10


class TestMorris:
    def test_ones_design_reduces_to_lindley_smith(self):
        rng = np.random.default_rng(3)
        y = rng.standard_normal(14)
        a = MorrisShrinkage(np.ones((14, 1)), tau=1.1).fit_predict(y)
        b = LindleySmith(tau=1.1).fit_predict(y)
        assert np.allclose(a, b, atol=1e-12)

    def test_y_in_column_space_unchanged(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((20, 3))
        y = X @ np.array([1.0, -2.0, 0.5])
        assert np.allclose(MorrisShrinkage(X, tau=0.9).fit_predict(y), y, atol=1e-10)

    def test_matches_flat_prior_conditioning_oracle(self):
        # theta ~ N(X beta, tau^2 I) with flat beta; y = theta + N(0, I)
        rng = np.random.default_rng(5)
        n, d, tau = 12, 3, 0.7
        X = rng.standard_normal((n, d))
        y = rng.standard_normal(n) + X @ np.ones(d)
        qt = 1.0 / tau ** 2
        blocks = [
            [np.eye(n) * (qt + 1.0), -qt * X],
            [-qt * X.T, qt * X.T @ X],
        ]
        mean = solve_information_form(blocks, [y, np.zeros(d)])[:n]
        est = MorrisShrinkage(X, tau=tau).fit_predict(y)
        assert np.allclose(est, mean, atol=1e-10)

    def test_rank_deficiency_rejected(self):
        X = np.column_stack([np.ones(10), np.ones(10)])
        with pytest.raises(ValidationError):
            MorrisShrinkage(X, tau=1.0)


class TestJamesStein:
    def test_full_shrinkage_at_threshold(self):
        n = 11
        y = np.zeros(n)
        y[0] = 3.0  # ||y||^2 = 9 = n - 2 exactly
        est = JamesStein().fit(y)
        assert est.tau2_ == 0.0
        assert np.allclose(est.predict(y), 0.0)

    def test_shrinkage_factor_identity(self):
        rng = np.random.default_rng(6)
        y = rng.standard_normal(30) * 2.0
        est = JamesStein().fit(y)
        norm_sq = float(y @ y)
        assert norm_sq > y.size - 2
        expected = (1.0 - (y.size - 2) / norm_sq) * y
        assert np.allclose(est.predict(y), expected, atol=1e-12)

    def test_requires_more_than_two_coordinates(self):
        with pytest.raises(ValidationError):
            JamesStein().fit(np.array([1.0, 2.0]))


class TestFayHerriot:
    def make(self, rng, n=15, d=3):
        X = rng.standard_normal((n, d))
        beta = rng.standard_normal(d)
        sigma_diag = rng.uniform(0.2, 1.5, size=n)
        y = X @ beta + rng.standard_normal(n)
        return X, beta, sigma_diag, y

    def test_no_noise_limit_returns_y(self):
        rng = np.random.default_rng(7)
        X, beta, _, y = self.make(rng)
        est = FayHerriot(X, beta, tau=1.0, sigma_diag=1e-8 * np.ones(15))
        assert np.allclose(est.fit_predict(y), y, atol=1e-6)

    def test_prior_dominates_small_tau(self):
        rng = np.random.default_rng(8)
        X, beta, sigma_diag, y = self.make(rng)
        est = FayHerriot(X, beta, tau=1e-6, sigma_diag=sigma_diag)
        assert np.allclose(est.fit_predict(y), X @ beta, atol=1e-8)

    def test_matches_conditioning_oracle(self):
        # joint Gaussian (theta, y): theta ~ N(X beta, tau^2 I), y | theta ~ N(theta, Sigma)
        rng = np.random.default_rng(9)
        X, beta, sigma_diag, y = self.make(rng)
        tau = 0.9
        prior_mean = X @ beta
        cov_tt = tau ** 2 * np.eye(15)
        cov_yy = cov_tt + np.diag(sigma_diag)
        oracle = prior_mean + cov_tt @ np.linalg.solve(cov_yy, y - prior_mean)
        est = FayHerriot(X, beta, tau=tau, sigma_diag=sigma_diag).fit_predict(y)
        assert np.allclose(est, oracle, atol=1e-10)


class TestEBFit:
    def test_recovers_generating_parameters_on_average(self):
        rng = np.random.default_rng(10)
        n, d = 676, 8
        beta0 = np.array([2.0, 0.5, -1.0, 0.8, 0.0, 1.5, -0.3, 0.7])
        tau0, sigma0 = 1.0, 2.0
        counts = rng.integers(5, 51, size=n).astype(float)
        weights = 1.0 / counts
        X = np.column_stack([np.ones(n), rng.standard_normal((n, d - 1))])
        taus = []
        for _ in range(100):
            theta = X @ beta0 + tau0 * rng.standard_normal(n)
            y = theta + sigma0 * np.sqrt(weights) * rng.standard_normal(n)
            _, tau_hat, _ = eb_fit_fay_herriot(y, X, weights)
            taus.append(tau_hat)
        assert abs(np.mean(taus) - tau0) <= 0.2 * tau0

    def test_beta_is_gls_at_fitted_variances(self):
        rng = np.random.default_rng(11)
        n, d = 60, 3
        X = np.column_stack([np.ones(n), rng.standard_normal((n, d - 1))])
        w = rng.uniform(0.1, 1.0, size=n)
        y = X @ np.array([1.0, -0.5, 2.0]) + rng.standard_normal(n)
        beta, tau, sigma = eb_fit_fay_herriot(y, X, w)
        v = tau ** 2 + sigma ** 2 * w
        gls = np.linalg.solve(X.T @ (X / v[:, None]), X.T @ (y / v))
        assert np.allclose(beta, gls, atol=1e-8)

    def test_deterministic(self):
        rng = np.random.default_rng(12)
        X = np.column_stack([np.ones(40), rng.standard_normal((40, 2))])
        w = rng.uniform(0.1, 1.0, size=40)
        y = rng.standard_normal(40)
        a = eb_fit_fay_herriot(y, X, w)
        b = eb_fit_fay_herriot(y, X, w)
        assert np.array_equal(a[0], b[0]) and a[1] == b[1] and a[2] == b[2]


class TestEBPermutedCovariates:
    """Shuffling the covariates destroys the prior mean, and the downstream
    confidence in the empirical-Bayes estimate collapses toward zero."""

    @staticmethod
    def _c_value_for_seed(seed, permute):
        from cvalues.pipeline import compare

        rng = np.random.default_rng(seed)
        n, d, tau0, sigma0 = 150, 4, 0.6, 1.5
        counts = rng.integers(5, 51, size=n).astype(float)
        w = 1.0 / counts
        X = np.column_stack([np.ones(n), 3.0 * rng.standard_normal((n, d - 1))])
        beta0 = np.array([1.0, 1.5, -1.0, 0.8])
        theta = X @ beta0 + tau0 * rng.standard_normal(n)
        y = theta + sigma0 * np.sqrt(w) * rng.standard_normal(n)
        X_used = X[rng.permutation(n)] if permute else X
        data = {"y": y, "sigma_diag": sigma0 ** 2 * w, "X": X_used}
        res = compare(data, {"kind": "mle"}, {"kind": "fay_herriot_eb"}, alpha=0.95)
        return res["c_value"]

    def test_median_c_collapses_under_permutation(self):
        cs = [self._c_value_for_seed(s, permute=True) for s in range(50)]
        assert np.median(cs) <= 0.05

    def test_true_covariates_supported(self):
        cs = [self._c_value_for_seed(s, permute=False) for s in range(10)]
        assert np.median(cs) > 0.9


class TestTwoSource:
    def test_noiseless_primary_channel(self):
        rng = np.random.default_rng(13)
        z = rng.standard_normal(8)
        y = rng.standard_normal(8)
        est = TwoSourcePosterior(z, sigma_y=1e-6, sigma_z=1.0, sigma_delta=0.5)
        assert np.allclose(est.fit_predict(y), y, atol=1e-9)

    def test_symmetric_pooling(self):
        rng = np.random.default_rng(14)
        z = rng.standard_normal(8)
        y = rng.standard_normal(8)
        est = TwoSourcePosterior(z, sigma_y=1.2, sigma_z=1.2, sigma_delta=0.0)
        assert np.allclose(est.fit_predict(y), 0.5 * (y + z), atol=1e-12)

    def test_matches_information_form_oracle(self):
        rng = np.random.default_rng(15)
        n = 6
        z = rng.standard_normal(n)
        y = rng.standard_normal(n)
        sy, sz, sd = 0.9, 1.3, 0.4
        est = TwoSourcePosterior(z, sy, sz, sd).fit_predict(y)
        qd, qy, qz = 1.0 / sd ** 2, 1.0 / sy ** 2, 1.0 / sz ** 2
        eye = np.eye(n)
        blocks = [
            [(qd + qy) * eye, np.zeros((n, n)), -qd * eye],
            [np.zeros((n, n)), (qd + qz) * eye, -qd * eye],
            [-qd * eye, -qd * eye, 2 * qd * eye],
        ]
        mean = solve_information_form(blocks, [qy * y, qz * z, np.zeros(n)])
        assert np.allclose(est, mean[:n], atol=1e-10)


class TestTwoSourceSpatial:
    def make_kernel(self, rng, n):
        coords = rng.uniform(0, 1, size=(n, 2))
        return squared_exponential_kernel(coords, 0.7, [0.3, 0.3])

    def test_zero_kernel_reduces_to_two_source(self):
        rng = np.random.default_rng(16)
        n = 7
        z, y = rng.standard_normal(n), rng.standard_normal(n)
        a = TwoSourceSpatial(z, 0.9, 1.1, 0.5, np.zeros((n, n))).fit_predict(y)
        b = TwoSourcePosterior(z, 0.9, 1.1, 0.5).fit_predict(y)
        assert np.allclose(a, b, atol=1e-10)

    def test_affine_in_y(self):
        rng = np.random.default_rng(17)
        n = 6
        est = TwoSourceSpatial(
            rng.standard_normal(n), 0.8, 1.0, 0.3, self.make_kernel(rng, n)
        )
        y1, y2 = rng.standard_normal(n), rng.standard_normal(n)
        est.fit(y1)
        lhs = est.predict(y1 + y2) - est.predict(y2)
        rhs = est.predict(y1) - est.predict(np.zeros(n))
        assert np.allclose(lhs, rhs, atol=1e-10)

    def test_matches_information_form_oracle(self):
        rng = np.random.default_rng(18)
        n = 6
        K = self.make_kernel(rng, n) + 1e-10 * np.eye(n)
        z, y = rng.standard_normal(n), rng.standard_normal(n)
        sy, sz, sd = 0.8, 1.2, 0.5
        est = TwoSourceSpatial(z, sy, sz, sd, K).fit_predict(y)
        qd = np.linalg.inv(sd ** 2 * np.eye(n) + K)
        qy, qz = np.eye(n) / sy ** 2, np.eye(n) / sz ** 2
        blocks = [
            [qd + qy, np.zeros((n, n)), -qd],
            [np.zeros((n, n)), qd + qz, -qd],
            [-qd, -qd, 2 * qd],
        ]
        mean = solve_information_form(blocks, [qy @ y, qz @ z, np.zeros(n)])
        assert np.allclose(est, mean[:n], atol=1e-8)


class TestGPPosteriorMean:
    def coords(self, rng, n):
        return np.column_stack([rng.uniform(0, 1, n), rng.uniform(0, 1, n),
                                np.linspace(0, 1, n)])

    PARAMS = {"var1": 1.0, "ls1": [0.5, 0.5, 0.5], "var2": 0.4,
              "ls2": [0.08, 0.08, 0.2]}

    def test_huge_noise_returns_prior_mean(self):
        rng = np.random.default_rng(19)
        c = self.coords(rng, 10)
        est = GPPosteriorMean(c, "multi_scale", self.PARAMS, sigma_eps=1e8)
        out = est.fit_predict(rng.standard_normal(10))
        assert np.allclose(out, 0.0, atol=1e-8)

    def test_single_observation_scalar_conjugacy(self):
        c = np.array([[0.5, 0.5, 0.5]])
        params = dict(self.PARAMS)
        est = GPPosteriorMean(c, "multi_scale", params, sigma_eps=0.7)
        y = np.array([2.0])
        marginal = params["var1"] + params["var2"]
        expected = marginal / (marginal + 0.49) * 2.0
        assert est.fit_predict(y)[0] == pytest.approx(expected, rel=1e-8)

    def test_multi_scale_and_baseline_share_marginal_variance(self):
        rng = np.random.default_rng(20)
        c = self.coords(rng, 12)
        k_multi = multi_scale_kernel(c, self.PARAMS)
        k_base = nugget_baseline_kernel(c, self.PARAMS)
        assert np.allclose(np.diag(k_multi), np.diag(k_base), atol=1e-12)

    def test_affine_matrix_contracts(self):
        rng = np.random.default_rng(21)
        c = self.coords(rng, 15)
        est = GPPosteriorMean(c, "multi_scale", self.PARAMS, sigma_eps=0.5)
        est.fit(rng.standard_normal(15))
        eigs = np.linalg.eigvalsh(est.affine_map().matrix)
        assert np.all(eigs >= -1e-10)
        assert np.all(eigs < 1.0)


class TestSure:
    def test_huge_tau_is_indifferent_hence_default(self):
        rng = np.random.default_rng(22)
        y = rng.standard_normal(50)
        label, value = sure_selector(y, tau=1e9)
        assert value == 50.0
        assert label == "default"

    def test_unbiasedness_against_risk(self):
        # mean SURE over replicates matches the Monte Carlo risk of the
        # shrinkage estimate, at several (theta, tau) pairs
        rng = np.random.default_rng(23)
        n, reps = 50, 10_000
        v = np.arange(n) - (n - 1) / 2.0
        v /= np.linalg.norm(v)
        for r, tau in [(0.0, 1.0), (1.7, 1.0), (1.0, 0.5)]:
            theta = r * np.sqrt(n) * v
            eps = rng.standard_normal((reps, n))
            y = theta + eps
            resid = y - y.mean(axis=1, keepdims=True)
            est = y - resid / (1.0 + tau ** 2)
            losses = np.sum((est - theta) ** 2, axis=1)
            sures = np.array([sure_selector(row, tau)[1] for row in y])
            se = np.sqrt(np.var(sures - losses, ddof=1) / reps)
            assert abs(sures.mean() - losses.mean()) <= 3 * se

    def test_literal_direction_flag_flips(self):
        rng = np.random.default_rng(24)
        y = rng.standard_normal(30) * 3.0
        a, sure = sure_selector(y, tau=1.0)
        b, _ = sure_selector(y, tau=1.0, literal_direction=True)
        if sure != 30.0:
            assert a != b


class TestHierRegression:
    def make_data(self, rng, d=3, m=25, l=40, n=10):
        x_train = rng.standard_normal((m, d))
        w_aux = rng.standard_normal((l, d))
        x_test = rng.standard_normal((n, d))
        beta = rng.standard_normal(d)
        y_train = x_train @ beta + rng.standard_normal(m)
        z_aux = w_aux @ (beta + 0.1 * rng.standard_normal(d)) + rng.standard_normal(l)
        return x_train, y_train, w_aux, z_aux, x_test

    def test_decouples_for_huge_prior_scale(self):
        rng = np.random.default_rng(25)
        x_train, y_train, w_aux, z_aux, x_test = self.make_data(rng)
        theta_star, cmp = hier_regression_posterior(
            x_train, y_train, w_aux, z_aux, x_test, sigma_beta=1e8
        )
        assert np.allclose(theta_star, cmp["y"], atol=1e-6)

    def test_matches_information_form_oracle(self):
        rng = np.random.default_rng(26)
        x_train, y_train, w_aux, z_aux, x_test = self.make_data(rng)
        sb = 0.6
        theta_star, _ = hier_regression_posterior(
            x_train, y_train, w_aux, z_aux, x_test, sigma_beta=sb
        )
        d = x_train.shape[1]
        qb = np.eye(d) / sb ** 2
        zero = np.zeros((d, d))
        blocks = [
            [qb + x_train.T @ x_train, zero, -qb],
            [zero, qb + w_aux.T @ w_aux, -qb],
            [-qb, -qb, 2 * qb],
        ]
        mean = solve_information_form(
            blocks, [x_train.T @ y_train, w_aux.T @ z_aux, np.zeros(d)]
        )
        assert np.allclose(theta_star, x_test @ mean[:d], atol=1e-8)

    def test_output_dimension_is_test_rows(self):
        rng = np.random.default_rng(27)
        x_train, y_train, w_aux, z_aux, x_test = self.make_data(rng, n=17)
        theta_star, cmp = hier_regression_posterior(
            x_train, y_train, w_aux, z_aux, x_test, sigma_beta=1.0
        )
        assert theta_star.shape == (17,)
        assert cmp["C"].shape == (17, 17)

    def test_c_matrix_not_symmetric_in_general(self):
        rng = np.random.default_rng(28)
        x_train, y_train, w_aux, z_aux, x_test = self.make_data(rng)
        _, cmp = hier_regression_posterior(
            x_train, y_train, w_aux, z_aux, x_test, sigma_beta=0.5
        )
        assert not np.allclose(cmp["C"], cmp["C"].T, atol=1e-10)


class TestAffineFormsAndSymmetry:
    """Every affine estimator's map reproduces predict; symmetry flags hold."""

    def build_all(self, rng, n=12):
        z = rng.standard_normal(n)
        coords = np.column_stack(
            [rng.uniform(0, 1, n), rng.uniform(0, 1, n), np.linspace(0, 1, n)]
        )
        K = squared_exponential_kernel(coords[:, :2], 0.5, [0.4, 0.4])
        X = np.column_stack([np.ones(n), rng.standard_normal(n)])
        return [
            Mle(),
            LindleySmith(tau=0.9),
            MorrisShrinkage(X, tau=1.2),
            JamesStein(),
            FayHerriot(X, np.array([0.3, -0.2]), 0.8, rng.uniform(0.3, 1.0, n)),
            TwoSourcePosterior(z, 0.9, 1.1, 0.4),
            TwoSourceSpatial(z, 0.9, 1.1, 0.4, K),
            GPPosteriorMean(coords, "multi_scale",
                            TestGPPosteriorMean.PARAMS, 0.6),
        ]

    def test_affine_map_reproduces_predict(self):
        rng = np.random.default_rng(29)
        y = rng.standard_normal(12)
        for est in self.build_all(rng):
            est.fit(y)
            gap = np.linalg.norm(est.affine_map()(y) - est.predict(y))
            assert gap <= 1e-10, type(est).__name__

    def test_emitted_matrices_are_symmetric(self):
        rng = np.random.default_rng(30)
        y = rng.standard_normal(12)
        for est in self.build_all(rng):
            est.fit(y)
            assert est.affine_map().symmetric, type(est).__name__

    def test_get_params_round_trip(self):
        est = LindleySmith(tau=0.7)
        assert est.get_params() == {"tau": 0.7}
        est2 = LindleySmith(**est.get_params())
        y = np.arange(5.0)
        assert np.allclose(est.fit_predict(y), est2.fit_predict(y))
