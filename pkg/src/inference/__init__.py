"""
Metaclust - Cluster Inference
=============================

Unrolled variational Bayes for the truncated Dirichlet-process Gaussian
mixture, and the fixed-K EM baseline.
"""

from .dpgmm_vb import (
    VBConfig,
    VBState,
    VBResult,
    init_state,
    update_globals,
    update_assignments,
    elbo,
    run_vb,
    hard_assignments,
    populated_clusters,
    random_simplex_rows,
    uniform_rows,
    center_rows,
)
from .em import EMResult, run_em

__all__ = [
    # Variational Bayes
    'VBConfig',
    'VBState',
    'VBResult',
    'init_state',
    'update_globals',
    'update_assignments',
    'elbo',
    'run_vb',

    # EM baseline
    'EMResult',
    'run_em',

    # Assignments
    'hard_assignments',
    'populated_clusters',
    'random_simplex_rows',
    'uniform_rows',
    'center_rows',
]
