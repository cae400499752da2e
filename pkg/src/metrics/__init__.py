"""
Metaclust - Clustering Metrics
==============================

Hard and continuous adjusted Rand index.
"""

from .ari import (
    DENOMINATOR_EPS,
    DistanceKind,
    PairCounts,
    SoftPairCounts,
    pair_counts,
    ari,
    adjusted_rand_index,
    tv_distance,
    prob_distance,
    pairwise_distances,
    soft_pair_counts,
    continuous_ari,
)

__all__ = [
    # Hard partitions
    'PairCounts',
    'pair_counts',
    'ari',
    'adjusted_rand_index',

    # Soft assignments
    'DENOMINATOR_EPS',
    'DistanceKind',
    'SoftPairCounts',
    'tv_distance',
    'prob_distance',
    'pairwise_distances',
    'soft_pair_counts',
    'continuous_ari',
]
