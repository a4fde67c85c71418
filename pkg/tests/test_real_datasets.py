"""Conditional checks against published gene-expression results.

These run only when the datasets are supplied at tests/data/real/ (they
are not redistributable here) and gate nothing in CI.  Expected layout,
one pair of files per dataset:

    tests/data/real/leukemia_x.csv   samples-by-genes matrix (72 x 3571)
    tests/data/real/leukemia_y.csv   response column (0/1)
    tests/data/real/colon_x.csv      62 x 2000
    tests/data/real/colon_y.csv      0/1 response

Gene numbers are 1-based column indices of the x matrix.
"""

import os

import numpy as np
import pytest

from stepgauss.engine import make_dataset, standardize
from stepgauss.lsq import SelectorConfig, relevance_scan, select, select_pre1
from stepgauss.glm import kl_select
from stepgauss.robust import robust_select
from stepgauss.simulate import classify, outlier_flags

REAL = os.path.join(os.path.dirname(__file__), "data", "real")


def _load(name):
    x = np.loadtxt(os.path.join(REAL, f"{name}_x.csv"), delimiter=",")
    y = np.loadtxt(os.path.join(REAL, f"{name}_y.csv"), delimiter=",")
    return standardize(make_dataset(y, x)), make_dataset(y, x)


def _have(name):
    return (os.path.exists(os.path.join(REAL, f"{name}_x.csv"))
            and os.path.exists(os.path.join(REAL, f"{name}_y.csv")))


leukemia_only = pytest.mark.skipif(not _have("leukemia"),
                                   reason="leukemia dataset not supplied")
colon_only = pytest.mark.skipif(not _have("colon"),
                                reason="colon dataset not supplied")


@leukemia_only
class TestLeukemia:
    def test_first_three_selections(self):
        ds, _ = _load("leukemia")
        t = select(ds, SelectorConfig(alpha=0.01))
        assert [s.index + 1 for s in t.steps[:3]] == [1182, 1219, 2888]
        assert t.steps[0].p_value < 1e-8
        assert t.steps[1].p_value == pytest.approx(8.58e-4, rel=0.05)
        assert t.steps[2].p_value == pytest.approx(3.58e-3, rel=0.05)
        assert t.stop_candidate is not None
        assert t.stop_candidate.index + 1 == 1946

    def test_classification_one_misclassification(self):
        _, raw = _load("leukemia")
        cols = [1181, 1218, 2887]
        coef, _, _, _ = np.linalg.lstsq(raw.X[:, cols], raw.y, rcond=None)
        fitted = raw.X[:, cols] @ coef
        assert classify(fitted, raw.y.astype(int)).misclassified == 1

    def test_second_round_selections(self):
        ds, _ = _load("leukemia")
        traces = relevance_scan(ds, SelectorConfig(alpha=0.01))
        second = [s.index + 1 for s in traces[1].steps]
        assert second[:2] == [1652, 979]

    def test_possibly_relevant_count(self):
        ds, _ = _load("leukemia")
        traces = relevance_scan(ds, SelectorConfig(alpha=0.01))
        distinct = {s.index for t in traces for s in t.steps}
        assert len(distinct) == 281

    def test_outlier_flags_lsq_and_robust(self):
        _, raw = _load("leukemia")
        cols = [1181, 1218, 2887]
        coef, _, _, _ = np.linalg.lstsq(raw.X[:, cols], raw.y, rcond=None)
        rep = outlier_flags(raw.y - raw.X[:, cols] @ coef)
        assert set(i + 1 for i in rep.flagged) == {21, 32, 35}
        ds, _ = _load("leukemia")
        t = robust_select(ds, SelectorConfig(alpha=0.01))
        from stepgauss.robust import initial_scale, m_fit
        fit = m_fit(ds, t.selected, initial_scale(ds.y))
        rep_rob = outlier_flags(fit.residuals)
        assert set(i + 1 for i in rep_rob.flagged) == {32, 33, 35, 38}

    def test_propre1_single_gene(self):
        ds, _ = _load("leukemia")
        t = select_pre1(ds, SelectorConfig(alpha=0.01))
        assert [s.index + 1 for s in t.steps] == [979]

    def test_kl_first_gene(self):
        ds, _ = _load("leukemia")
        t = kl_select(ds, SelectorConfig(alpha=0.01))
        assert t.steps[0].index + 1 == 956


@colon_only
class TestColon:
    def test_lsq_first_gene(self):
        ds, _ = _load("colon")
        t = select(ds, SelectorConfig(alpha=0.01))
        assert t.steps[0].index + 1 == 493
        assert t.steps[0].p_value == pytest.approx(7.40e-8, rel=0.10)

    def test_kl_single_gene_and_misclassifications(self):
        ds, raw = _load("colon")
        t = kl_select(ds, SelectorConfig(alpha=0.01))
        assert [s.index + 1 for s in t.steps] == [377]
        from stepgauss.glm import kl_fit
        fit = kl_fit(ds, t.selected, intercept=True)
        assert classify(fit.probabilities, raw.y.astype(int)).misclassified == 9

    def test_corrupted_response_robust_vs_lsq(self):
        _, raw = _load("colon")
        y_bad = raw.y.copy()
        y_bad[0] = -10.0
        ds = standardize(make_dataset(y_bad, raw.X))
        t_lsq = select(ds, SelectorConfig(alpha=0.5))
        assert t_lsq.steps and t_lsq.steps[0].index + 1 == 1826
        t_rob = robust_select(ds, SelectorConfig(alpha=0.01))
        assert t_rob.steps and t_rob.steps[0].index + 1 == 493
        assert t_rob.steps[0].p_value == pytest.approx(1.40e-5, rel=0.25)
