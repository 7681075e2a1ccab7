"""Assignment mechanisms: counts, enumeration order, sampling, probabilities."""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from randinf import (
    CRD,
    RBD,
    EnumerationCapError,
    assignment_matrix,
    assignment_probability,
    assignment_probability_exact,
    enumerate_assignments,
    sample_assignments,
    total_assignments,
)


class TestConstruction:
    def test_crd_bounds(self):
        with pytest.raises(ValueError):
            CRD(10, 0)
        with pytest.raises(ValueError):
            CRD(10, 10)

    def test_rbd_bounds(self):
        with pytest.raises(ValueError):
            RBD(((4, 0),))
        with pytest.raises(ValueError):
            RBD(((4, 4),))
        with pytest.raises(ValueError):
            RBD(())

    def test_rbd_unit_total(self):
        assert RBD(((8, 4), (6, 3))).n_units == 14


class TestTotals:
    def test_crd_10_5(self):
        assert total_assignments(CRD(10, 5)) == 252

    def test_crd_2_1(self):
        assert total_assignments(CRD(2, 1)) == 2

    def test_rbd_product(self):
        assert total_assignments(RBD(((8, 4), (8, 4)))) == 4900

    def test_big_integer_exact(self):
        # the hundred-unit balanced space has ~1e29 assignments; must not overflow
        assert total_assignments(CRD(100, 50)) == 100891344545564193334812497256

    def test_single_block_rbd_matches_crd(self):
        assert total_assignments(RBD(((10, 5),))) == total_assignments(CRD(10, 5))


class TestEnumeration:
    def test_crd_4_2_colex_order(self):
        assigns = list(enumerate_assignments(CRD(4, 2)))
        assert len(assigns) == 6
        np.testing.assert_array_equal(assigns[0], [1, 1, 0, 0])
        treated_sets = [tuple(np.nonzero(a)[0]) for a in assigns]
        assert treated_sets == [(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)]

    def test_crd_10_5_stream_length(self):
        assert sum(1 for _ in enumerate_assignments(CRD(10, 5))) == 252

    def test_rbd_2x2(self):
        assigns = list(enumerate_assignments(RBD(((2, 1), (2, 1)))))
        assert len(assigns) == 4
        assert all(a[:2].sum() == 1 and a[2:].sum() == 1 for a in assigns)

    def test_each_assignment_once(self):
        assigns = {tuple(a.tolist()) for a in enumerate_assignments(CRD(7, 3))}
        assert len(assigns) == 35

    def test_cap_exceeded(self):
        with pytest.raises(EnumerationCapError):
            list(enumerate_assignments(CRD(30, 15), cap=1000))
        with pytest.raises(EnumerationCapError):
            assignment_matrix(CRD(30, 15), cap=1000)

    def test_matrix_matches_stream(self):
        for design in (CRD(6, 3), CRD(7, 5), RBD(((4, 2), (3, 1)))):
            mat = assignment_matrix(design)
            stream = np.stack(list(enumerate_assignments(design)))
            np.testing.assert_array_equal(mat, stream)

    def test_matrix_matches_itertools_set(self):
        # brute-force oracle: colex enumeration hits exactly the k-subsets
        mat = assignment_matrix(CRD(8, 3))
        got = {tuple(np.nonzero(r)[0]) for r in mat}
        want = set(itertools.combinations(range(8), 3))
        assert got == want

    def test_unbalanced_majority_treated(self):
        # binomials above the treated count can overflow naive tables
        mat = assignment_matrix(CRD(12, 9))
        assert mat.shape == (220, 12)
        assert (mat.sum(axis=1) == 9).all()
        assert len({tuple(r) for r in mat.tolist()}) == 220


class TestSampling:
    def test_constraint_satisfied(self):
        draws = sample_assignments(CRD(10, 5), 3, seed=7)
        assert (draws.sum(axis=1) == 5).all()

    def test_rbd_block_constraint(self):
        draws = sample_assignments(RBD(((4, 2),)), 1, seed=99)
        assert draws[0].sum() == 2

    def test_empirical_frequency_crd_2_1(self):
        # binomial tolerance at four standard errors
        draws = sample_assignments(CRD(2, 1), 10_000, seed=2024)
        freq = float((draws[:, 0] == 1).mean())
        assert abs(freq - 0.5) < 0.02

    def test_deterministic_byte_for_byte(self):
        a = sample_assignments(CRD(12, 4), 50, seed=5)
        b = sample_assignments(CRD(12, 4), 50, seed=5)
        assert a.tobytes() == b.tobytes()

    def test_draw_depends_only_on_seed_and_index(self):
        # prefix stability: batching cannot change earlier draws
        long = sample_assignments(CRD(9, 4), 40, seed=31)
        short = sample_assignments(CRD(9, 4), 7, seed=31)
        np.testing.assert_array_equal(long[:7], short)

    def test_seed_changes_stream(self):
        a = sample_assignments(CRD(10, 5), 20, seed=1)
        b = sample_assignments(CRD(10, 5), 20, seed=2)
        assert not np.array_equal(a, b)

    def test_huge_space(self):
        draws = sample_assignments(CRD(135, 72), 4, seed=0)
        assert (draws.sum(axis=1) == 72).all()

    def test_uniformity_chi_square(self):
        # goodness of fit over the ten cells of CRD(5, 2), seeded
        design = CRD(5, 2)
        draws = sample_assignments(design, 5000, seed=77)
        keys = [tuple(r) for r in assignment_matrix(design).tolist()]
        index = {k: i for i, k in enumerate(keys)}
        counts = np.zeros(len(keys))
        for row in draws.tolist():
            counts[index[tuple(row)]] += 1
        expected = 5000 / len(keys)
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        assert chi2 < 27.88  # df=9 critical value at the 0.1% level

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            sample_assignments(CRD(4, 2), 0, seed=1)


class TestProbability:
    def test_crd_valid(self):
        w = np.array([1, 1, 1, 1, 1, 0, 0, 0, 0, 0])
        assert assignment_probability(CRD(10, 5), w) == 1 / 252

    def test_constraint_violation_gives_zero(self):
        assert assignment_probability(CRD(4, 2), np.array([1, 1, 1, 0])) == 0.0

    def test_rbd_valid(self):
        w = np.array([1, 0, 0, 1])
        assert assignment_probability(RBD(((2, 1), (2, 1))), w) == 0.25

    def test_length_mismatch_raises(self):
        with pytest.raises(ValueError):
            assignment_probability(CRD(4, 2), np.array([1, 0, 1]))

    def test_probabilities_sum_to_one_exactly(self):
        for design in (CRD(6, 3), RBD(((3, 1), (4, 2)))):
            total = sum(
                assignment_probability_exact(design, w)
                for w in enumerate_assignments(design)
            )
            assert total == Fraction(1)
