"""Scenario generation, study metrics, empirical checks, utilities."""

import math
import warnings

import numpy as np
import pytest

from stepgauss.engine import make_dataset
from stepgauss.lsq import SelectorConfig
from stepgauss.rng import gaussian, rng_for, uniform_open
from stepgauss.simulate import (
    AR1,
    BernoulliLogit,
    EquiCorr,
    FixedCoef,
    Gauss,
    Independent,
    LogitSum,
    ScenarioSpec,
    UniformCoef,
    builtin_scenario,
    classify,
    consistency_check,
    cv_boost,
    fdr_bound_check,
    generate,
    outlier_flags,
    run_study,
    run_study_sweep,
    scenario_from_dict,
    scenario_to_dict,
)


class TestRng:
    def test_streams_reproducible(self):
        a = rng_for(5, 3, 1).random(10)
        b = rng_for(5, 3, 1).random(10)
        assert np.array_equal(a, b)

    def test_streams_distinct(self):
        a = rng_for(5, 3, 1).random(10)
        b = rng_for(5, 4, 1).random(10)
        c = rng_for(5, 3, 2).random(10)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_uniform_open_interval(self):
        u = uniform_open(rng_for(1, 0, 0), 100_000)
        assert np.all(u > 0.0) and np.all(u < 1.0)

    def test_gaussian_moments(self):
        z = gaussian(rng_for(2, 0, 0), 200_000)
        assert abs(float(np.mean(z))) < 0.01
        assert float(np.std(z)) == pytest.approx(1.0, abs=0.01)


class TestGenerate:
    def test_independent_identity_covariance(self):
        spec = ScenarioSpec(n=100_000, q=5, covariance=Independent(),
                            signal=FixedCoef(1, 1.0), noise=Gauss(1.0),
                            replications=1, seed=9)
        d, _ = generate(spec, 0)
        c = np.corrcoef(d.X, rowvar=False)
        off = c - np.eye(5)
        assert np.max(np.abs(off)) < 0.02

    def test_equicorr_off_diagonal(self):
        spec = ScenarioSpec(n=100_000, q=5, covariance=EquiCorr(0.8),
                            signal=FixedCoef(1, 1.0), noise=Gauss(1.0),
                            replications=1, seed=10)
        d, _ = generate(spec, 0)
        c = np.corrcoef(d.X, rowvar=False)
        off = c[~np.eye(5, dtype=bool)]
        assert np.all(np.abs(off - 0.8) < 0.02)

    def test_ar1_lag_two_correlation(self):
        spec = ScenarioSpec(n=100_000, q=5, covariance=AR1(0.5),
                            signal=FixedCoef(1, 1.0), noise=Gauss(1.0),
                            replications=1, seed=11)
        d, _ = generate(spec, 0)
        c = np.corrcoef(d.X[:, 0], d.X[:, 2])[0, 1]
        assert c == pytest.approx(0.25, abs=0.02)

    def test_truth_sets(self):
        s1 = ScenarioSpec(n=50, q=30, covariance=Independent(),
                          signal=UniformCoef(3, 0, 2), noise=Gauss(1.0),
                          replications=1, seed=1)
        _, t1 = generate(s1, 0)
        assert t1 == (0, 1, 2)
        s2 = ScenarioSpec(n=50, q=30, covariance=AR1(0.5),
                          signal=LogitSum(5, 0.08), noise=BernoulliLogit(),
                          replications=1, seed=1)
        _, t2 = generate(s2, 0)
        assert t2 == (1, 2, 3, 4, 5)

    def test_deterministic_per_replication(self):
        spec = builtin_scenario("equicorr-T2", replications=3, seed=4)
        d1, _ = generate(spec, 2)
        d2, _ = generate(spec, 2)
        assert np.array_equal(d1.X, d2.X)
        assert np.array_equal(d1.y, d2.y)

    def test_binary_response_bernoulli(self):
        spec = builtin_scenario("ar1-logit-T1", replications=1, seed=3)
        d, truth = generate(spec, 0)
        assert set(np.unique(d.y)) <= {0.0, 1.0}
        assert truth == tuple(range(1, 21))

    def test_scenario_dict_roundtrip(self):
        spec = builtin_scenario("toeplitz-logit-T5", replications=7, seed=123)
        again = scenario_from_dict(scenario_to_dict(spec))
        assert again == spec

    def test_invalid_combo_rejected(self):
        with pytest.raises(ValueError):
            ScenarioSpec(n=50, q=30, covariance=Independent(),
                         signal=LogitSum(5, 0.08), noise=Gauss(1.0),
                         replications=1, seed=1)


class TestRunStudy:
    def test_perfect_recovery_metrics(self):
        # strong signal, easy design: power 1, fwer 0
        spec = ScenarioSpec(n=100, q=20, covariance=Independent(),
                            signal=FixedCoef(2, 8.0), noise=Gauss(0.5),
                            replications=10, seed=21)
        rep = run_study(spec, "progau", SelectorConfig(alpha=0.01))
        assert rep.power == 1.0
        assert rep.fwer <= 0.1
        assert rep.false_neg_mean == 0.0

    def test_metric_accounting_reconciles(self):
        spec = builtin_scenario("equicorr-T2", replications=12, seed=33)
        rep = run_study(spec, "progau", SelectorConfig(alpha=0.01))
        truth_size = 3
        power_from_records = np.mean([r["n_correct"] / truth_size for r in rep.records])
        assert rep.power == pytest.approx(power_from_records, abs=1e-12)
        fwer_from_records = np.mean([r["n_false"] > 0 for r in rep.records])
        assert rep.fwer == pytest.approx(fwer_from_records, abs=1e-12)
        for r in rep.records:
            assert r["n_correct"] + r["n_missed"] == truth_size
            assert r["n_correct"] + r["n_false"] == r["n_selected"]

    def test_threads_do_not_change_result(self):
        spec = builtin_scenario("equicorr-T2", replications=8, seed=77)
        r1 = run_study(spec, "progau", SelectorConfig(alpha=0.01), threads=1)
        r4 = run_study(spec, "progau", SelectorConfig(alpha=0.01), threads=4)
        assert r1 == r4

    def test_sweep_matches_individual_runs(self):
        spec = builtin_scenario("equicorr-T2", replications=10, seed=55)
        sweep = run_study_sweep(spec, "progau", SelectorConfig(),
                                alphas=(0.01, 0.05, 0.1))
        for alpha in (0.01, 0.05, 0.1):
            single = run_study(spec, "progau", SelectorConfig(alpha=alpha))
            got = sweep[alpha]
            assert got.power == pytest.approx(single.power, abs=1e-12)
            assert got.fwer == pytest.approx(single.fwer, abs=1e-12)
            assert [r["selected"] for r in got.records] == [
                r["selected"] for r in single.records]

    def test_unknown_procedure_rejected(self):
        spec = builtin_scenario("equicorr-T2", replications=2, seed=1)
        with pytest.raises(ValueError):
            run_study(spec, "magic", SelectorConfig())

    def test_s0_15_table_cells(self):
        # the dense-signal cells: heavy equicorrelation makes the base
        # procedure swallow false positives (fwer ~ 0.97) while the
        # preconditioned variant nearly eliminates them (power ~ 0.29)
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            spec = builtin_scenario("equicorr-T2", s0=15, coef_hi=4.0,
                                    replications=200, seed=101)
            pre1 = run_study(spec, "propre1", SelectorConfig(alpha=0.01), threads=4)
            spec2 = builtin_scenario("equicorr-T2", s0=15, coef_hi=2.0,
                                     replications=200, seed=101)
            gau = run_study(spec2, "progau", SelectorConfig(alpha=0.01), threads=4)
        assert pre1.power == pytest.approx(0.29, abs=0.08)
        assert pre1.fwer <= 0.05
        assert gau.power == pytest.approx(0.25, abs=0.08)
        assert gau.fwer == pytest.approx(0.97, abs=0.06)

    def test_replication_failures_recorded_not_fatal(self, monkeypatch):
        import stepgauss.simulate as sim

        real = sim._run_procedure
        calls = {"n": 0}

        def flaky(procedure, ds, cfg):
            calls["n"] += 1
            if calls["n"] == 3:
                raise RuntimeError("synthetic per-replication blowup")
            return real(procedure, ds, cfg)

        monkeypatch.setattr(sim, "_run_procedure", flaky)
        spec = builtin_scenario("equicorr-T2", replications=5, seed=44)
        rep = run_study(spec, "progau", SelectorConfig(alpha=0.01))
        assert rep.replications == 4
        assert len(rep.failures) == 1
        assert "synthetic per-replication blowup" in rep.failures[0]["error"]
        assert "failed replications" in rep.text_table()

    def test_coverage_fields_present_with_ci(self):
        spec = builtin_scenario("equicorr-T2", replications=5, seed=3)
        rep = run_study(spec, "progau", SelectorConfig(alpha=0.01), compute_ci=True)
        assert rep.avgcov_s0 is not None
        assert 0.0 <= rep.avgcov_s0 <= 1.0
        assert rep.avglen_s0 > 0.0


class TestFdrBound:
    def test_band_arithmetic(self):
        res = fdr_bound_check(n=30, q=40, alpha=0.01, replications=50, seed=5)
        assert res.bound_low == 0.01
        assert res.bound_high == pytest.approx(0.01 / 0.99, rel=1e-12)

    def test_pure_noise_mean_in_band(self):
        res = fdr_bound_check(n=60, q=80, alpha=0.05, replications=1500, seed=6)
        assert res.inside
        assert res.mean_false == pytest.approx(0.05, abs=3 * res.std_error + 0.003)


class TestConsistency:
    def test_satisfying_margin_recovers(self):
        res = consistency_check(n=200, q=300, k=3, replications=40, seed=8,
                                tau=2.5, margin=4.0, alpha=0.01)
        assert res.recovery_rate >= 0.9

    def test_under_margin_materially_worse(self):
        good = consistency_check(n=200, q=300, k=3, replications=30, seed=9,
                                 tau=2.5, margin=4.0)
        bad = consistency_check(n=200, q=300, k=3, replications=30, seed=9,
                                tau=2.5, margin=0.25)
        assert bad.recovery_rate < good.recovery_rate - 0.5

    def test_pure_noise_empty_recovery(self):
        res = consistency_check(n=80, q=100, k=0, replications=300, seed=10,
                                alpha=0.05)
        assert res.recovery_rate >= 1 - 0.05 * 1.5


class TestClassify:
    def test_exact_fit_zero_misses(self):
        y = np.array([0.0, 1.0, 1.0, 0.0])
        assert classify(y, y).misclassified == 0

    def test_inverted_fit_all_miss(self):
        y = np.array([0.0, 1.0, 1.0, 0.0])
        assert classify(1.0 - y, y).misclassified == 4

    def test_multiclass_rounds_to_nearest_label(self):
        labels = np.array([0, 1, 2, 3])
        fitted = np.array([-0.4, 1.2, 1.9, 5.0])
        res = classify(fitted, labels)
        assert list(res.predicted) == [0.0, 1.0, 2.0, 3.0]
        assert res.misclassified == 0

    def test_threshold_half_for_binary(self):
        labels = np.array([0, 0, 1, 1])
        fitted = np.array([0.49, 0.51, 0.49, 0.51])
        res = classify(fitted, labels)
        assert res.misclassified == 2


class TestOutliers:
    def test_single_large_residual(self):
        rep = outlier_flags(np.array([1.0, 1.0, 1.0, 1.0, 10.0]))
        assert rep.flagged == (4,)
        assert rep.scores[4] == pytest.approx(10.0)

    def test_all_equal_none_flagged(self):
        rep = outlier_flags(np.full(6, 2.5))
        assert rep.flagged == ()
        assert np.allclose(rep.scores, 1.0)

    def test_all_zero_short_circuit(self):
        rep = outlier_flags(np.zeros(5))
        assert rep.flagged == ()

    def test_zero_median_nonzero_residuals(self):
        rep = outlier_flags(np.array([0.0, 0.0, 0.0, 5.0]))
        assert rep.flagged == (3,)
        assert math.isinf(rep.scores[3])


class TestCvBoost:
    def test_smoke_separable(self):
        gen = np.random.default_rng(3)
        n = 12
        x = gen.normal(size=(n, 6))
        y = (x[:, 0] > 0).astype(float)
        d = make_dataset(y, x)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = cv_boost(d, SelectorConfig(alpha=0.2), top_k=2, max_rounds=2)
        assert res.rounds <= 2
        assert res.misclassified >= 0
        assert len(res.per_round) == res.rounds
