"""
Metaclust - EM for a Spherical Gaussian Mixture
===============================================

Maximum-likelihood baseline with a fixed number of components. Mixing
weights, means and one precision per component are re-estimated from
the responsibilities each step; like the variational loop, every step
is recorded so the final responsibilities are differentiable.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..autodiff import Tensor, as_tensor, ops
from ..errors import ContractError
from .dpgmm_vb import LOG_2PI, _check_rows, uniform_rows


logger = logging.getLogger(__name__)

MAX_PRECISION = 1e6
COLLAPSE_MASS = 1e-8
_TINY = 1e-300


@dataclass
class EMResult:
    """Final responsibilities, per-step log likelihood, collapsed components"""
    R: Tensor
    loglik_trace: List[float] = field(default_factory=list)
    collapsed: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def any_collapsed(self) -> bool:
        return bool(np.any(self.collapsed))


def _m_step(Z: Tensor, R: Tensor):
    """Mixing weights, means and clamped precisions from responsibilities"""
    n, s = Z.shape
    mass = ops.sum(R, axis=0)
    collapsed = mass.values < COLLAPSE_MASS
    empty = (mass.values == 0.0).astype(np.float64)

    safe_mass = ops.add(mass, empty)
    weights = ops.div(ops.add(mass, empty * _TINY), float(n))
    means = ops.div(ops.matmul(ops.transpose(R), Z), ops.column(safe_mass))

    spread = ops.sum(ops.mul(R, ops.sqdist(Z, means)), axis=0)
    clamp = (collapsed | (spread.values * MAX_PRECISION <= s * mass.values)).astype(np.float64)
    free = ops.div(ops.mul(mass, float(s)), ops.add(spread, clamp))
    precision = ops.add(ops.mul(free, 1.0 - clamp), MAX_PRECISION * clamp)
    return weights, means, precision, collapsed


def _log_joint(Z: Tensor, weights: Tensor, means: Tensor, precision: Tensor) -> Tensor:
    """log π_k + log N(z_n | μ_k, β_k⁻¹ I), shape N × K"""
    s = Z.shape[1]
    per_cluster = ops.add(
        ops.log(weights),
        ops.mul(ops.sub(ops.log(precision), LOG_2PI), s / 2.0),
    )
    return ops.sub(per_cluster, ops.mul(ops.sqdist(Z, means), ops.mul(precision, 0.5)))


def run_em(Z, K: int, steps: int, R0: Optional[Tensor] = None) -> EMResult:
    """
    EM iterations for a K-component spherical GMM.

    Args:
        Z: N × S representations
        K: Component count
        steps: Iterations (each an M-step followed by an E-step)
        R0: Initial responsibilities; uniform rows when omitted

    Returns:
        EMResult; components whose responsibility mass fell below 1e-8
        have their precision clamped at 1e6 and are flagged

    Raises:
        ContractError: If K < 1, steps < 0, or R0 is not a valid N × K matrix
    """
    if K < 1:
        raise ContractError(f"K must be >= 1, got {K}")
    if steps < 0:
        raise ContractError(f"steps must be >= 0, got {steps}")
    Z = as_tensor(Z)
    R = uniform_rows(Z.shape[0], K) if R0 is None else as_tensor(R0)
    _check_rows(R.values)
    if R.shape != (Z.shape[0], K):
        raise ContractError(f"R0 shape {R.shape} does not match ({Z.shape[0]}, {K})")

    trace: List[float] = []
    collapsed = np.zeros(K, dtype=bool)
    for step in range(steps):
        weights, means, precision, dropped = _m_step(Z, R)
        if np.any(dropped & ~collapsed):
            logger.debug("EM step %d: components %s collapsed", step, np.where(dropped)[0].tolist())
        collapsed |= dropped

        joint = _log_joint(Z, weights, means, precision)
        norm = ops.logsumexp(joint, axis=1)
        R = ops.exp(ops.sub(joint, ops.column(norm)))
        trace.append(float(norm.values.sum()))

    return EMResult(R=R, loglik_trace=trace, collapsed=collapsed)
