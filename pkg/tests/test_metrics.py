"""
Metaclust - Clustering Metric Tests
===================================

Tests for hard pair counts, the adjusted Rand index and its continuous
relaxation.
"""

import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from src.autodiff import Tensor, finite_difference_check
from src.errors import ContractError
from src.metrics import (
    DistanceKind,
    PairCounts,
    adjusted_rand_index,
    ari,
    continuous_ari,
    pair_counts,
    prob_distance,
    soft_pair_counts,
    tv_distance,
)


def one_hot(labels, k):
    return np.eye(k)[np.asarray(labels)]


def random_simplex(n, k, rng):
    return rng.dirichlet(np.ones(k), size=n)


class TestPairCounts:
    """Tests for exhaustive pair counting"""

    @pytest.mark.parametrize("y_true, y_pred, expected", [
        ([0, 0, 1, 1], [0, 0, 1, 1], (4, 0, 0, 2)),
        ([0, 0, 1, 1], [0, 1, 0, 1], (2, 2, 2, 0)),
        ([0, 0, 0, 1, 1], [0, 0, 1, 1, 1], (4, 2, 2, 2)),
    ])
    def test_hand_enumerated(self, y_true, y_pred, expected):
        assert pair_counts(y_true, y_pred).as_tuple() == expected

    def test_total_is_all_pairs(self):
        rng = np.random.default_rng(0)
        counts = pair_counts(rng.integers(0, 3, 17), rng.integers(0, 4, 17))
        assert counts.total == 17 * 16 // 2

    def test_single_instance(self):
        """Fewer than two instances have no pairs"""
        with pytest.raises(ContractError):
            pair_counts([0], [0])

    def test_length_mismatch(self):
        with pytest.raises(ContractError):
            pair_counts([0, 1, 1], [0, 1])


class TestARI:
    """Tests for the hard adjusted Rand index"""

    @pytest.mark.parametrize("counts, expected", [
        ((4, 0, 0, 2), 1.0),
        ((2, 2, 2, 0), -0.5),
        ((4, 2, 2, 2), 1.0 / 6.0),
    ])
    def test_known_values(self, counts, expected):
        assert ari(PairCounts(*counts)) == pytest.approx(expected, abs=1e-12)

    def test_degenerate_is_zero(self):
        """Single-cluster partitions on both sides score 0"""
        assert adjusted_rand_index([0, 0, 0], [1, 1, 1]) == 0.0
        assert adjusted_rand_index([0, 1, 2], [2, 0, 1]) == 0.0

    def test_label_permutation_invariant(self):
        assert adjusted_rand_index([0, 0, 1, 2, 2], [5, 5, 3, 1, 1]) == pytest.approx(1.0)

    def test_matches_contingency_oracle(self):
        """Agreement with the contingency-table formula on random partitions"""
        rng = np.random.default_rng(42)
        checked = 0
        for _ in range(1000):
            n = int(rng.integers(2, 61))
            y_true = rng.integers(0, int(rng.integers(1, 11)), n)
            y_pred = rng.integers(0, int(rng.integers(1, 11)), n)
            counts = pair_counts(y_true, y_pred)
            n1, n2, n3, n4 = counts.as_tuple()
            if (n1 + n2) * (n3 + n4) + (n1 + n3) * (n2 + n4) == 0:
                continue
            assert ari(counts) == pytest.approx(adjusted_rand_score(y_true, y_pred), abs=1e-10)
            checked += 1
        assert checked > 900


class TestDistances:
    """Tests for row distances"""

    def test_tv_values(self):
        assert tv_distance([1, 0], [0, 1]) == 1.0
        assert tv_distance([0.3, 0.7], [0.3, 0.7]) == 0.0
        assert tv_distance([0.5, 0.5], [1, 0]) == pytest.approx(0.5)

    def test_prob_values(self):
        assert prob_distance([1, 0], [1, 0]) == 0.0
        assert prob_distance([1, 0], [0, 1]) == 1.0
        assert prob_distance([0.5, 0.5], [0.5, 0.5]) == pytest.approx(0.5)

    def test_symmetry_and_triangle(self):
        """TV is a metric on random simplex triples"""
        rng = np.random.default_rng(1)
        for _ in range(200):
            a, b, c = random_simplex(3, 5, rng)
            assert tv_distance(a, b) == pytest.approx(tv_distance(b, a), abs=1e-15)
            assert prob_distance(a, b) == pytest.approx(prob_distance(b, a), abs=1e-15)
            assert tv_distance(a, c) <= tv_distance(a, b) + tv_distance(b, c) + 1e-12


class TestSoftPairCounts:
    """Tests for relaxed pair counts"""

    def test_one_hot_reduces_to_hard(self):
        rng = np.random.default_rng(3)
        y_true = rng.integers(0, 3, 12)
        y_pred = rng.integers(0, 4, 12)
        soft = soft_pair_counts(y_true, one_hot(y_pred, 4))
        np.testing.assert_allclose(soft.as_tuple(), pair_counts(y_true, y_pred).as_tuple(), atol=1e-12)

    def test_identical_rows(self):
        """All distances vanish, so Ñ1 = Ñ3 = 0"""
        R = np.tile([0.2, 0.5, 0.3], (6, 1))
        soft = soft_pair_counts([0, 0, 1, 1, 2, 2], R)
        assert soft.n1.item() == pytest.approx(0.0, abs=1e-15)
        assert soft.n3.item() == pytest.approx(0.0, abs=1e-15)

    def test_hand_example(self):
        R = np.array([[1.0, 0.0], [1.0, 0.0], [0.5, 0.5]])
        soft = soft_pair_counts([0, 0, 1], R)
        np.testing.assert_allclose(soft.as_tuple(), (1.0, 1.0, 0.0, 1.0), atol=1e-12)

    def test_prob_distance_kind(self):
        R = np.array([[0.5, 0.5], [0.5, 0.5]])
        soft = soft_pair_counts([0, 1], R, distance=DistanceKind.PROBABILITY)
        assert soft.n1.item() == pytest.approx(0.5)

    def test_unnormalized_rows(self):
        with pytest.raises(ContractError):
            soft_pair_counts([0, 1], np.array([[0.6, 0.6], [0.5, 0.5]]))

    def test_shape_mismatch(self):
        with pytest.raises(ContractError):
            soft_pair_counts([0, 1, 1], np.array([[1.0, 0.0], [0.0, 1.0]]))


class TestContinuousARI:
    """Tests for the differentiable ARI"""

    def test_perfect_one_hot(self):
        y = [0, 0, 1, 1, 2]
        assert continuous_ari(soft_pair_counts(y, one_hot(y, 3))).item() == pytest.approx(1.0)

    def test_identical_rows_is_zero(self):
        R = np.tile([0.6, 0.4], (5, 1))
        assert continuous_ari(soft_pair_counts([0, 0, 1, 1, 1], R)).item() == pytest.approx(0.0, abs=1e-15)

    def test_hand_example(self):
        R = np.array([[1.0, 0.0], [1.0, 0.0], [0.5, 0.5]])
        assert continuous_ari(soft_pair_counts([0, 0, 1], R)).item() == pytest.approx(0.5)

    def test_degenerate_is_constant_zero(self):
        """A single-category episode gives an untracked zero"""
        counts = soft_pair_counts([0, 0, 0], one_hot([0, 0, 0], 2))
        assert counts.degenerate
        value = continuous_ari(counts)
        assert value.item() == 0.0
        assert value.node is None

    @pytest.mark.parametrize("y", [[0, 0, 0, 0], [0, 1, 2, 3]])
    def test_trivial_labels_degenerate_for_soft_rows(self, y):
        """One category or all singletons: the index is identically zero"""
        R = random_simplex(4, 3, np.random.default_rng(8))
        counts = soft_pair_counts(y, R)
        assert counts.degenerate
        assert continuous_ari(counts).item() == 0.0

    def test_reduces_to_hard_ari(self):
        """One-hot rows give exactly the hard ARI over 1000 random labelings"""
        rng = np.random.default_rng(5)
        for _ in range(1000):
            n = int(rng.integers(2, 30))
            y_true = rng.integers(0, 4, n)
            y_pred = rng.integers(0, 5, n)
            soft = continuous_ari(soft_pair_counts(y_true, one_hot(y_pred, 5))).item()
            assert soft == pytest.approx(adjusted_rand_index(y_true, y_pred), abs=1e-12)

    def test_bounded(self):
        """Soft ARI stays in [-1, 1] for random rows"""
        rng = np.random.default_rng(6)
        for _ in range(50):
            value = continuous_ari(soft_pair_counts(rng.integers(0, 3, 10), random_simplex(10, 4, rng))).item()
            assert -1.0 - 1e-12 <= value <= 1.0 + 1e-12

    @pytest.mark.parametrize("distance", list(DistanceKind))
    def test_gradient(self, distance):
        """Gradient with respect to R matches central differences"""
        rng = np.random.default_rng(7)
        y = np.array([0, 0, 1, 1, 2, 2, 0])
        R = random_simplex(7, 3, rng)
        # unnormalized perturbations around a simplex point stay inside the row-sum tolerance
        result = finite_difference_check(
            lambda t: continuous_ari(soft_pair_counts(y, t[0], distance=distance, tolerance=1e-4)),
            [R], step=1e-7,
        )
        assert result.max_relative_error < 1e-6

    def test_returns_tensor(self):
        assert isinstance(continuous_ari(soft_pair_counts([0, 1], np.eye(2))), Tensor)
