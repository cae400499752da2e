"""
Metaclust - Adjusted Rand Index
===============================

Pair-counting ARI for hard partitions and its continuous relaxation for
soft assignments. Both use the same rational form over four pair counts:

    n1  different true category, different predicted cluster
    n2  different true category, same predicted cluster
    n3  same true category, different predicted cluster
    n4  same true category, same predicted cluster

    ARI = 2 (n1·n4 − n2·n3) / ((n1+n2)(n3+n4) + (n1+n3)(n2+n4))

In the soft version the predicted "different cluster" indicator of a pair
is replaced by a distance d in [0, 1] between the two assignment rows,
which makes the index differentiable in the assignments.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from ..autodiff import Tensor, as_tensor, ops
from ..errors import ContractError


DENOMINATOR_EPS = 1e-12


class DistanceKind(Enum):
    """Soft distance between two assignment rows"""
    TOTAL_VARIATION = "tv"      # (1/2) Σ_k |r_k − r′_k|
    PROBABILITY = "prob"        # 1 − Σ_k r_k r′_k


@dataclass
class PairCounts:
    """Exact pair counts over all N(N−1)/2 unordered pairs"""
    n1: int
    n2: int
    n3: int
    n4: int

    @property
    def total(self) -> int:
        return self.n1 + self.n2 + self.n3 + self.n4

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.n1, self.n2, self.n3, self.n4)


@dataclass
class SoftPairCounts:
    """Relaxed pair counts; each pair contributes d + (1 − d) = 1"""
    n1: Tensor
    n2: Tensor
    n3: Tensor
    n4: Tensor

    @property
    def total(self) -> float:
        return float(sum(t.item() for t in (self.n1, self.n2, self.n3, self.n4)))

    def denominator(self) -> float:
        n1, n2, n3, n4 = (t.item() for t in (self.n1, self.n2, self.n3, self.n4))
        return (n1 + n2) * (n3 + n4) + (n1 + n3) * (n2 + n4)

    @property
    def degenerate(self) -> bool:
        """Vanishing denominator, or true labels that put every pair on one side"""
        n1, n2, n3, n4 = self.as_tuple()
        if n1 + n2 == 0.0 or n3 + n4 == 0.0:
            return True
        return abs(self.denominator()) < DENOMINATOR_EPS

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return tuple(t.item() for t in (self.n1, self.n2, self.n3, self.n4))


def _pairs(n: int) -> Tuple[np.ndarray, np.ndarray]:
    if n < 2:
        raise ContractError(f"Pair counts need at least 2 instances, got {n}")
    return np.triu_indices(n, k=1)


def pair_counts(y_true, y_pred) -> PairCounts:
    """
    Count agreement over every unordered pair of instances.

    Raises:
        ContractError: If fewer than two instances or the lengths differ
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ContractError(f"Label vectors must be 1-D and equal length, got {y_true.shape} and {y_pred.shape}")
    i, j = _pairs(y_true.shape[0])
    same_true = y_true[i] == y_true[j]
    same_pred = y_pred[i] == y_pred[j]
    return PairCounts(
        n1=int(np.sum(~same_true & ~same_pred)),
        n2=int(np.sum(~same_true & same_pred)),
        n3=int(np.sum(same_true & ~same_pred)),
        n4=int(np.sum(same_true & same_pred)),
    )


def ari(counts: PairCounts) -> float:
    """Adjusted Rand index; 0 for degenerate partitions"""
    n1, n2, n3, n4 = counts.as_tuple()
    denominator = (n1 + n2) * (n3 + n4) + (n1 + n3) * (n2 + n4)
    if denominator == 0:
        return 0.0
    return 2.0 * (n1 * n4 - n2 * n3) / denominator


def adjusted_rand_index(y_true, y_pred) -> float:
    return ari(pair_counts(y_true, y_pred))


def tv_distance(r, r_other) -> float:
    """Total variation distance between two simplex rows"""
    r, r_other = np.asarray(r, dtype=np.float64), np.asarray(r_other, dtype=np.float64)
    return 0.5 * float(np.sum(np.abs(r - r_other)))


def prob_distance(r, r_other) -> float:
    """Probability that two rows draw different clusters"""
    r, r_other = np.asarray(r, dtype=np.float64), np.asarray(r_other, dtype=np.float64)
    return 1.0 - float(np.dot(r, r_other))


def pairwise_distances(R: Tensor, distance: DistanceKind = DistanceKind.TOTAL_VARIATION) -> Tensor:
    """Distances for every pair i < j in np.triu_indices order"""
    i, j = _pairs(R.shape[0])
    left, right = ops.take_rows(R, i), ops.take_rows(R, j)
    if distance is DistanceKind.TOTAL_VARIATION:
        return ops.mul(ops.sum(ops.abs(ops.sub(left, right)), axis=1), 0.5)
    return ops.sub(1.0, ops.sum(ops.mul(left, right), axis=1))


def soft_pair_counts(
    y_true,
    R,
    distance: DistanceKind = DistanceKind.TOTAL_VARIATION,
    tolerance: float = 1e-8,
) -> SoftPairCounts:
    """
    Relaxed pair counts, differentiable in R.

    Args:
        y_true: N category labels
        R: N × K′ soft assignments (tracked or not)
        distance: Row distance standing in for "different cluster"
        tolerance: Allowed deviation of row sums from 1

    Raises:
        ContractError: If N < 2, shapes disagree, or a row is not on the simplex
    """
    R = as_tensor(R)
    y_true = np.asarray(y_true)
    if R.ndim != 2 or R.shape[0] != y_true.shape[0]:
        raise ContractError(f"Assignments {R.shape} do not match {y_true.shape[0]} labels")
    if np.any(R.values < -tolerance) or np.any(np.abs(R.values.sum(axis=1) - 1.0) > tolerance):
        raise ContractError("Assignment rows must be non-negative and sum to 1")

    i, j = _pairs(y_true.shape[0])
    same = (y_true[i] == y_true[j]).astype(np.float64)
    d = pairwise_distances(R, DistanceKind(distance))

    n1 = ops.sum(ops.mul(d, 1.0 - same))
    n3 = ops.sum(ops.mul(d, same))
    n2 = ops.sub(float(np.sum(1.0 - same)), n1)
    n4 = ops.sub(float(np.sum(same)), n3)
    return SoftPairCounts(n1=n1, n2=n2, n3=n3, n4=n4)


def continuous_ari(counts: SoftPairCounts) -> Tensor:
    """
    Continuous ARI over relaxed pair counts.

    The denominator is guarded by 1e-12; below it, and when the true
    labels form one category or all singletons, the index is the constant
    0 and contributes no gradient.
    """
    if counts.degenerate:
        return Tensor(0.0)
    n1, n2, n3, n4 = counts.n1, counts.n2, counts.n3, counts.n4
    numerator = ops.mul(ops.sub(ops.mul(n1, n4), ops.mul(n2, n3)), 2.0)
    denominator = ops.add(
        ops.mul(ops.add(n1, n2), ops.add(n3, n4)),
        ops.mul(ops.add(n1, n3), ops.add(n2, n4)),
    )
    return ops.div(numerator, denominator)
