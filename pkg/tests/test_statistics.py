"""Imputation, statistic evaluation, and the effect-increasing probe."""

import numpy as np
import pytest
from scipy.stats import rankdata

from randinf import (
    DegenerateDenominatorError,
    ObservedData,
    StatisticError,
    ei_probe,
    evaluate,
    evaluate_many,
    get_statistic,
    impute,
    observed_statistic,
)
from conftest import random_experiment


class TestObservedData:
    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            ObservedData(np.array([1, 0]), np.array([1.0]))

    def test_nonbinary_w(self):
        with pytest.raises(ValueError):
            ObservedData(np.array([1, 2]), np.array([1.0, 2.0]))

    def test_nonfinite_y(self):
        with pytest.raises(ValueError):
            ObservedData(np.array([1, 0]), np.array([1.0, np.inf]))


class TestImpute:
    def test_toy_treated_row_at_zero(self, toy):
        data, _ = toy
        table = impute(data, 0.0)
        assert table.y1[0] == 2.00 and table.y0[0] == 2.00

    def test_zero_theta_collapses_table(self, toy):
        data, _ = toy
        table = impute(data, 0.0)
        np.testing.assert_array_equal(table.y1, data.y_obs)
        np.testing.assert_array_equal(table.y0, data.y_obs)

    def test_toy_control_row_matches_true_table(self, toy):
        # unit 5 is a control with y=1.85; at the true unit effect its imputed
        # treated value recovers the underlying 2.85
        data, _ = toy
        table = impute(data, 1.0)
        assert table.y1[4] == pytest.approx(2.85) and table.y0[4] == 1.85

    def test_constant_effect_holds_exactly(self, toy):
        data, _ = toy
        for theta in (-2.5, 0.3, 4.0):
            table = impute(data, theta)
            np.testing.assert_allclose(table.y1 - table.y0, theta, rtol=0, atol=1e-15)

    def test_observed_arm_preserved(self, toy):
        data, _ = toy
        table = impute(data, 0.7)
        treated = data.w_obs == 1
        np.testing.assert_array_equal(table.y1[treated], data.y_obs[treated])
        np.testing.assert_array_equal(table.y0[~treated], data.y_obs[~treated])

    def test_nonfinite_theta(self, toy):
        data, _ = toy
        with pytest.raises(ValueError):
            impute(data, np.nan)


class TestEvaluate:
    def test_toy_observed_value(self, toy, diff_means):
        data, _ = toy
        assert observed_statistic(diff_means, data) == pytest.approx(0.912, abs=1e-12)

    def test_constant_outcomes_give_zero(self, diff_means):
        data = ObservedData(np.array([1, 1, 0, 0]), np.full(4, 3.3))
        assert evaluate(diff_means, impute(data, 0.0), data.w_obs) == 0.0

    def test_two_units(self, diff_means):
        data = ObservedData(np.array([1, 0]), np.array([3.0, 1.0]))
        assert evaluate(diff_means, impute(data, 0.0), np.array([1, 0])) == 2.0

    def test_wilcoxon_midranks(self, wilcoxon):
        # tie between a treated and a control unit gets the average rank
        data = ObservedData(np.array([1, 1, 0, 0]), np.array([2.0, 5.0, 2.0, 1.0]))
        got = evaluate(wilcoxon, impute(data, 0.0), data.w_obs)
        assert got == 2.5 + 4.0

    def test_wilcoxon_matches_scipy_rankdata(self, wilcoxon):
        rng = np.random.default_rng(3)
        data, design = random_experiment(rng, n=10)
        table = impute(data, 0.4)
        w = np.array([1, 1, 1, 0, 0, 1, 0, 0, 1, 0])
        realized = np.where(w == 1, table.y1, table.y0)
        want = float(rankdata(realized)[w == 1].sum())
        assert evaluate(wilcoxon, table, w) == want

    def test_studentized_degenerate_denominator(self, studentized):
        data = ObservedData(np.array([1, 1, 0, 0]), np.full(4, 1.0))
        with pytest.raises(DegenerateDenominatorError):
            evaluate(studentized, impute(data, 0.0), data.w_obs)

    def test_studentized_small_arm(self, studentized, toy):
        data, _ = toy
        w = np.zeros(10, dtype=int)
        w[0] = 1
        with pytest.raises(StatisticError):
            evaluate(studentized, impute(data, 0.0), w)

    def test_studentized_matches_arm_size_form(self, studentized):
        # two arms of four: denominator is sqrt(s1^2/4 + s0^2/4)
        rng = np.random.default_rng(8)
        data, _ = random_experiment(rng, n=8)
        table = impute(data, 0.0)
        w = data.w_obs
        y1 = data.y_obs[w == 1]
        y0 = data.y_obs[w == 0]
        want = (y1.mean() - y0.mean()) / np.sqrt(y1.var(ddof=1) / 4 + y0.var(ddof=1) / 4)
        assert evaluate(studentized, table, w) == pytest.approx(want, rel=1e-12)


class TestThetaStructure:
    def test_diff_means_affine_slope_nonnegative(self, toy, diff_means):
        # finite differences of theta -> T are a nonnegative constant slope,
        # zero exactly at the observed assignment
        data, design = toy
        from randinf import assignment_matrix

        W = assignment_matrix(design)
        t1 = evaluate_many(diff_means, impute(data, 1.0), W)
        t0 = evaluate_many(diff_means, impute(data, 0.0), W)
        t3 = evaluate_many(diff_means, impute(data, 3.0), W)
        slope = t1 - t0
        np.testing.assert_allclose((t3 - t0) / 3.0, slope, atol=1e-12)
        assert (slope >= -1e-15).all()
        zero_rows = np.nonzero(np.abs(slope) < 1e-15)[0]
        assert [tuple(W[i]) for i in zero_rows] == [tuple(data.w_obs)]

    @pytest.mark.parametrize("name", ["diff_means", "studentized", "wilcoxon_rank_sum"])
    def test_observed_assignment_constant_in_theta(self, toy, name):
        data, _ = toy
        stat = get_statistic(name)
        vals = [evaluate(stat, impute(data, t), data.w_obs) for t in (-7.0, -1.0, 0.0, 2.0, 9.0)]
        assert np.ptp(vals) < 1e-12


class TestEIProbe:
    def test_diff_means_consistent(self, toy, diff_means):
        data, design = toy
        assert ei_probe(diff_means, data, design, trials=200, seed=4).consistent

    def test_wilcoxon_consistent(self, toy, wilcoxon):
        data, design = toy
        assert ei_probe(wilcoxon, data, design, trials=200, seed=4).consistent

    def test_studentized_counterexample(self, nonmono, studentized):
        data, design = nonmono
        result = ei_probe(studentized, data, design, trials=200, seed=4)
        assert not result.consistent
        assert result.counterexample["statistic_after"] < result.counterexample["statistic_before"]

    def test_trials_validated(self, toy, diff_means):
        data, design = toy
        with pytest.raises(ValueError):
            ei_probe(diff_means, data, design, trials=0, seed=1)
