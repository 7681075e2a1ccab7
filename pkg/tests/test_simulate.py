"""Population generation, the scenario runner, and exact validity audits."""

import numpy as np
import pytest

from randinf import (
    CRD,
    RBD,
    ObservedData,
    ScenarioConfig,
    assignment_matrix,
    balanced_design,
    confidence_interval,
    exact_validity_audit,
    generate_population,
    run_scenario,
    traditional_interval,
)
from randinf.datasets import tied_discrete_population, toy_population
from randinf.randomization import PValueKind


class TestGeneratePopulation:
    def test_zero_effect_collapses_arms(self):
        pop = generate_population(12, 0.0, seed=4)
        np.testing.assert_array_equal(pop.y0, pop.y1)

    def test_positive_support(self):
        pop = generate_population(50, 0.5, seed=4)
        assert (pop.y0 > 0).all() and (pop.y1 > 0).all()

    def test_seed_determinism(self):
        a = generate_population(20, 1.0, seed=9)
        b = generate_population(20, 1.0, seed=9)
        np.testing.assert_array_equal(a.y0, b.y0)
        assert not np.array_equal(a.y0, generate_population(20, 1.0, seed=10).y0)

    def test_minimum_size(self):
        with pytest.raises(ValueError):
            generate_population(1, 0.0, seed=0)


class TestBalancedDesign:
    def test_single_block_is_crd(self):
        assert balanced_design(1, 16) == CRD(16, 8)

    def test_multi_block(self):
        assert balanced_design(2, 8) == RBD(((8, 4), (8, 4)))

    def test_odd_block_size_rejected(self):
        with pytest.raises(ValueError):
            balanced_design(2, 7)


class TestRunScenario:
    def test_single_rep_coverage_binary(self):
        cfg = ScenarioConfig(
            design1=balanced_design(1, 8), design2=balanced_design(1, 8),
            reps=1, k_cap=100, master_seed=5,
        )
        res = run_scenario(cfg)
        for arm in res.arms.values():
            assert arm.coverage in (0.0, 1.0)
            assert arm.width_sd == 0.0

    def test_deterministic(self):
        cfg = ScenarioConfig(
            design1=balanced_design(1, 10), design2=balanced_design(2, 6),
            reps=8, k_cap=500, master_seed=12,
        )
        assert run_scenario(cfg).arms == run_scenario(cfg).arms

    def test_level_finer_than_atoms_gives_infinite_interval(self, diff_means):
        # a 36-assignment space cannot support a 2.5% tail: the base atom is
        # 1/36, so the inverted endpoints are infinite and the width follows
        pop = generate_population(8, 0.0, seed=2)
        design = RBD(((4, 2), (4, 2)))
        data = pop.observe(assignment_matrix(design)[7])
        ci = confidence_interval(data, design, diff_means, 0.025, 0.025)
        assert ci.lower == -np.inf and ci.upper == np.inf and ci.width == np.inf

    def test_arms_present_and_sane(self):
        cfg = ScenarioConfig(
            design1=balanced_design(1, 10), design2=balanced_design(1, 12),
            reps=12, k_cap=500, master_seed=3,
        )
        res = run_scenario(cfg)
        assert set(res.arms) == {"exp1", "exp2", "fisher", "de"}
        for arm in res.arms.values():
            assert 0.0 <= arm.coverage <= 1.0
            assert arm.width_mean > 0

    def test_scaling_equivariance_single_rep(self, diff_means):
        # multiplying all outcomes by c scales the interval endpoints by c
        pop = generate_population(10, 1.0, seed=77)
        design = CRD(10, 5)
        w = assignment_matrix(design)[100]
        data = pop.observe(w)
        scaled = ObservedData(data.w_obs, 3.0 * data.y_obs)
        base = confidence_interval(data, design, diff_means, 0.025, 0.025)
        big = confidence_interval(scaled, design, diff_means, 0.025, 0.025)
        assert big.lower == pytest.approx(3 * base.lower, rel=1e-12)
        assert big.upper == pytest.approx(3 * base.upper, rel=1e-12)

    def test_summary_table_renders(self):
        cfg = ScenarioConfig(
            design1=balanced_design(1, 8), design2=balanced_design(1, 8),
            reps=2, k_cap=100, master_seed=1,
        )
        table = run_scenario(cfg).summary_table()
        assert "exp1" in table and "fisher" in table


class TestExactValidityAudit:
    def test_toy_population_guarantees(self):
        report = exact_validity_audit(toy_population(), CRD(10, 5), alphas=(0.05,))
        assert report.dominance_ok
        assert report.gamma_bound_ok
        assert report.gamma_star == pytest.approx(2 / 252, abs=0)
        assert report.max_shortfall == pytest.approx(2 / 252, abs=1e-12)
        assert report.coverage_ok(0.05)

    def test_tied_population_gap(self):
        # heavy ties: guaranteed method holds the level, traditional does not
        report = exact_validity_audit(tied_discrete_population(), CRD(15, 7), alphas=(0.05,))
        assert report.proposed_coverage[0.05] >= 0.95
        assert report.traditional_coverage[0.05] < report.proposed_coverage[0.05]
        assert round(report.proposed_coverage[0.05], 3) == 0.961
        assert round(report.traditional_coverage[0.05], 3) == 0.897

    def test_constant_population_trivial_coverage(self):
        from randinf.datasets import PotentialTable

        y = np.full(6, 4.0)
        report = exact_validity_audit(PotentialTable(y, y), CRD(6, 3), alphas=(0.05,))
        assert report.proposed_coverage[0.05] == 1.0
        levels, cdf = report.dominance.profiles[PValueKind.LPLUS]
        np.testing.assert_array_equal(levels, [1.0])

    def test_matches_public_interval_construction(self, diff_means):
        # dual route: the vectorized audit equals per-assignment inversion
        pop = generate_population(7, 0.5, seed=42)
        design = CRD(7, 3)
        report = exact_validity_audit(pop, design, alphas=(0.10,))
        covered = 0
        covered_trad = 0
        widths = []
        W = assignment_matrix(design)
        for w in W:
            data = pop.observe(w)
            ci = confidence_interval(data, design, diff_means, 0.05, 0.05)
            tr = traditional_interval(data, design, diff_means, 0.10)
            covered += ci.contains(0.5)
            covered_trad += tr.contains(0.5)
            widths.append(ci.width)
        assert report.proposed_coverage[0.10] == covered / len(W)
        assert report.traditional_coverage[0.10] == covered_trad / len(W)
        assert report.proposed_width_mean[0.10] == pytest.approx(np.mean(widths), rel=1e-12)

    def test_constant_effect_required(self):
        from randinf.datasets import PotentialTable

        with pytest.raises(ValueError):
            exact_validity_audit(
                PotentialTable(np.arange(4.0), np.arange(4.0) ** 2), CRD(4, 2)
            )

    def test_rbd_population(self):
        pop = generate_population(8, 0.0, seed=13)
        report = exact_validity_audit(pop, RBD(((4, 2), (4, 2))), alphas=(0.10,))
        assert report.dominance_ok and report.coverage_ok(0.10)
