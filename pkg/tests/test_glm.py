"""Nonlinear least-squares and Kullback-Leibler path checks."""

import math
import warnings

import numpy as np
import pytest
from scipy.special import expit

from stepgauss.engine import make_dataset, standardize
from stepgauss.glm import (
    IDENTITY,
    LOGISTIC,
    kl_fit,
    kl_select,
    kl_step_p_value,
    kl_value,
    nl_fit,
    nl_select,
    nl_step_p_value,
)
from stepgauss.lsq import SelectorConfig, step_p_value
from stepgauss.rng import gaussian, rng_for
from stepgauss.special import chisq1_sf, pow1m


def irls_logistic_oracle(y, a, iters=200, tol=1e-12):
    """Classic working-response IRLS logistic fit, independent of kl_fit."""
    beta = np.zeros(a.shape[1])
    for _ in range(iters):
        eta = a @ beta
        p = expit(eta)
        w = np.clip(p * (1 - p), 1e-10, None)
        z = eta + (y - p) / w
        beta_new, _, _, _ = np.linalg.lstsq(a * np.sqrt(w)[:, None],
                                            z * np.sqrt(w), rcond=None)
        if np.max(np.abs(beta_new - beta)) < tol:
            return beta_new
        beta = beta_new
    return beta


class TestLinks:
    def test_logistic_derivative_finite_differences(self):
        u = np.linspace(-10, 10, 101)
        h = 1e-6
        fd = (LOGISTIC.g(u + h) - LOGISTIC.g(u - h)) / (2 * h)
        assert np.max(np.abs(fd - LOGISTIC.g1(u))) < 1e-6

    def test_identity_derivative(self):
        u = np.linspace(-5, 5, 11)
        assert np.allclose(IDENTITY.g1(u), 1.0)


class TestNlFit:
    def test_identity_link_equals_ols(self, rng):
        x = rng.normal(size=(30, 3))
        y = x @ np.array([1.0, -0.5, 2.0]) + rng.normal(size=30)
        d = make_dataset(y, x)
        fit = nl_fit(d, [0, 1, 2], IDENTITY)
        coef, _, _, _ = np.linalg.lstsq(x, y, rcond=None)
        assert np.max(np.abs(fit.coefficients - coef)) < 1e-8

    def test_separable_data_flagged(self, rng):
        x = rng.normal(size=(40, 1))
        y = (x[:, 0] > 0).astype(float)
        d = make_dataset(y, x)
        with pytest.warns(RuntimeWarning):
            fit = nl_fit(d, [0], LOGISTIC, max_iter=2000)
        assert fit.saturated

    def test_column_rescaling_leaves_ss(self, rng):
        x = rng.normal(size=(25, 2))
        y = expit(x @ np.array([1.0, -1.5])) + 0.05 * rng.normal(size=25)
        f1 = nl_fit(make_dataset(y, x), [0, 1], LOGISTIC)
        f2 = nl_fit(make_dataset(y, x * np.array([10.0, 0.2])), [0, 1], LOGISTIC)
        assert f1.ss == pytest.approx(f2.ss, rel=1e-6)

    def test_empty_active_fits_g_of_zero(self, rng):
        y = rng.uniform(size=12)
        d = make_dataset(y, rng.normal(size=(12, 2)))
        fit = nl_fit(d, [], LOGISTIC)
        assert np.allclose(fit.fitted, 0.5)

    def test_ss_nonincreasing_gradient_consistent(self, rng):
        # analytic Gauss-Newton gradient vs central finite differences
        x = rng.normal(size=(30, 2))
        y = expit(x @ np.array([0.8, -0.6])) + 0.1 * rng.normal(size=30)
        beta = np.array([0.3, 0.1])

        def ss_of(b):
            r = y - expit(x @ b)
            return float(np.mean(r * r))

        g_analytic = -2.0 / 30 * (x * LOGISTIC.g1(x @ beta)[:, None]).T @ (y - expit(x @ beta))
        h = 1e-7
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            fd = (ss_of(beta + e) - ss_of(beta - e)) / (2 * h)
            assert fd == pytest.approx(g_analytic[i], rel=1e-5, abs=1e-10)


class TestNlPValue:
    def test_no_improvement_gives_one(self):
        assert nl_step_p_value(5.0, 5.0, 2.0, 30.0, 100, 0) == 1.0

    def test_flat_link_warns(self):
        with pytest.warns(RuntimeWarning):
            p = nl_step_p_value(5.0, 4.0, 2.0, 0.0, 100, 0)
        assert p == 1.0

    def test_identity_link_matches_exact_beta_within_ten_percent(self):
        # identity link reduces to the chi-squared approximation of the
        # exact p-value; at n = 500 they agree to ~10% on random instances
        gen = np.random.default_rng(3)
        n, q = 500, 40
        for _ in range(10):
            y = gen.normal(size=n)
            x = gen.normal(size=(n, q))
            ss0 = float(y @ y)
            drops = (y @ x) ** 2 / np.einsum("ij,ij->j", x, x)
            ss1 = ss0 - float(np.max(drops))
            # identity link: weights_num = sum r^2, weights_den = n
            p_nl = nl_step_p_value(ss0, ss1, ss0, float(n), q, 0)
            p_exact = step_p_value(ss0, ss1, n, 0, q)
            assert p_nl == pytest.approx(p_exact, rel=0.10)

    def test_logistic_weight_identity(self, rng):
        # the generic r^2 g1^2 / g1^2 ratio equals the specialized
        # (y-p)^2 p^2 (1-p)^2 / p^2 (1-p)^2 form for the logistic link
        n = 50
        eta = rng.normal(size=n)
        y = (rng.uniform(size=n) < expit(eta)).astype(float)
        p = expit(eta)
        g1 = LOGISTIC.g1(eta)
        r = y - p
        generic = float(np.sum(r**2 * g1**2)) / float(np.sum(g1**2))
        special = float(np.sum((y - p) ** 2 * p**2 * (1 - p) ** 2)) / float(
            np.sum(p**2 * (1 - p) ** 2))
        assert generic == pytest.approx(special, rel=1e-12)


class TestKlValue:
    def test_perfect_fit_near_zero(self):
        y = np.array([1.0, 0.0, 1.0])
        assert kl_value(y, y) == pytest.approx(0.0, abs=1e-9)

    def test_all_half(self):
        y = np.array([1.0, 0.0, 1.0, 0.0])
        assert kl_value(y, np.full(4, 0.5)) == pytest.approx(4 * math.log(2), rel=1e-12)

    def test_hand_arithmetic(self):
        y = np.array([1.0, 0.0, 1.0])
        p = np.array([0.9, 0.2, 0.8])
        want = -(math.log(0.9) + math.log(0.8) + math.log(0.8))
        assert kl_value(y, p) == pytest.approx(want, rel=1e-12)
        assert kl_value(y, p) == pytest.approx(0.551648, abs=5e-7)

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            kl_value(np.array([0.0, 2.0, 1.0]), np.full(3, 0.5))

    def test_nonnegative(self, rng):
        y = (rng.uniform(size=30) < 0.4).astype(float)
        p = rng.uniform(size=30)
        assert kl_value(y, p) >= 0.0


class TestKlFit:
    def test_intercept_only_gives_mean(self, rng):
        y = (rng.uniform(size=50) < 0.3).astype(float)
        d = make_dataset(y, rng.normal(size=(50, 2)))
        fit = kl_fit(d, [], intercept=True)
        assert np.allclose(fit.probabilities, np.mean(y), atol=1e-9)

    def test_matches_independent_irls_oracle(self, rng):
        n = 20
        x = rng.normal(size=(n, 3))
        y = (rng.uniform(size=n) < expit(x @ np.array([1.0, -1.0, 0.5]))).astype(float)
        d = make_dataset(y, x)
        fit = kl_fit(d, [0, 1, 2], intercept=True)
        a = np.hstack([np.ones((n, 1)), x])
        want = irls_logistic_oracle(y, a)
        assert np.max(np.abs(fit.coefficients - want)) < 1e-6

    def test_separation_flagged_finite_kl(self, rng):
        x = np.linspace(-2, 2, 30)[:, None]
        y = (x[:, 0] > 0).astype(float)
        d = make_dataset(y, x)
        with pytest.warns(RuntimeWarning):
            fit = kl_fit(d, [0], intercept=False, max_iter=5000)
        assert fit.separated
        assert math.isfinite(fit.kl)

    def test_gradient_matches_finite_differences(self, rng):
        n = 40
        x = rng.normal(size=(n, 2))
        y = (rng.uniform(size=n) < 0.5).astype(float)
        beta = np.array([0.2, -0.4])

        def f(b):
            return kl_value(y, expit(x @ b))

        grad = x.T @ (expit(x @ beta) - y)
        h = 1e-6
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            fd = (f(beta + e) - f(beta - e)) / (2 * h)
            assert fd == pytest.approx(grad[i], rel=1e-5, abs=1e-8)


class TestKlPValue:
    def test_no_improvement_gives_one(self, rng):
        p0 = rng.uniform(0.2, 0.8, size=30)
        y = (rng.uniform(size=30) < p0).astype(float)
        assert kl_step_p_value(3.0, 3.0, p0, y, 50, 0) == 1.0

    def test_degenerate_probabilities_warn(self):
        y = np.array([1.0, 0.0, 1.0, 0.0])
        with pytest.warns(RuntimeWarning):
            p = kl_step_p_value(3.0, 2.0, np.array([1.0, 0.0, 1.0, 0.0]), y, 50, 0)
        assert p == 1.0

    def test_leading_factor_two_at_half(self):
        # p = 1/2 everywhere with balanced y: 2 sum p(1-p) / sum (y-p)^2 = 2
        n = 40
        y = np.array([1.0, 0.0] * 20)
        p0 = np.full(n, 0.5)
        kl0, kl1 = 10.0, 9.0
        got = kl_step_p_value(kl0, kl1, p0, y, 50, 0)
        want = pow1m(chisq1_sf(2.0 * (kl0 - kl1)), 50)
        assert got == pytest.approx(want, rel=1e-12)

    def test_null_uniformity_single_candidate(self):
        # well-specified null, one Gaussian candidate: the chi-squared
        # p-value is approximately Uniform(0,1) at n = 500
        n, reps = 500, 2000
        pvals = []
        for seed in range(reps):
            y = (rng_for(909, seed, 2).random(n) < 0.5).astype(float)
            z = gaussian(rng_for(909, seed, 0), (n, 1))
            d = make_dataset(y, z)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                fit0 = kl_fit(d, [], intercept=True)
                fit1 = kl_fit(d, [0], intercept=True)
            pvals.append(kl_step_p_value(fit0.kl, min(fit1.kl, fit0.kl),
                                         fit0.probabilities, y, 1, 0))
        pvals = np.sort(pvals)
        ks = float(np.max(np.abs(pvals - (np.arange(1, reps + 1) - 0.5) / reps)))
        assert ks < 0.05


class TestGreedySelection:
    def test_nl_select_finds_threshold_signal(self, rng):
        n = 150
        x = rng.normal(size=(n, 12))
        y = (x[:, 0] > 0).astype(float)
        d = standardize(make_dataset(y, x))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            t = nl_select(d, SelectorConfig(alpha=0.01), LOGISTIC)
        assert t.steps[0].index == 0

    def test_kl_select_finds_threshold_signal(self, rng):
        n = 150
        x = rng.normal(size=(n, 12))
        y = (x[:, 0] > 0).astype(float)
        d = standardize(make_dataset(y, x))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            t = kl_select(d, SelectorConfig(alpha=0.01))
        assert t.steps[0].index == 0

    def test_kl_pure_noise_rarely_selects(self):
        count = 0
        reps = 200
        for seed in range(reps):
            x = gaussian(rng_for(313, seed, 0), (100, 30))
            y = (rng_for(313, seed, 2).random(100) < 0.5).astype(float)
            d = standardize(make_dataset(y, x))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                t = kl_select(d, SelectorConfig(alpha=0.01))
            count += len(t.steps)
        assert count / reps < 0.06

    def test_intercept_can_be_disabled(self, rng):
        n = 80
        x = rng.normal(size=(n, 5))
        y = (rng.uniform(size=n) < expit(2 * x[:, 1])).astype(float)
        d = standardize(make_dataset(y, x))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            t_with = kl_select(d, SelectorConfig(alpha=0.05), intercept=True)
            t_without = kl_select(d, SelectorConfig(alpha=0.05), intercept=False)
        assert t_with.steps and t_without.steps
        assert t_with.steps[0].index == t_without.steps[0].index == 1
