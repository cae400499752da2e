"""
Metaclust - Variational Bayes for the Truncated DP Gaussian Mixture
===================================================================

Coordinate-ascent updates for a spherical infinite Gaussian mixture,
truncated at K′ clusters, with variational family

    q(η_k) = Beta(γ_k1, γ_k2)     stick proportions
    q(μ_k) = N(θ_k, I)            cluster means
    q(β_k) = Gamma(a_k, b_k)      cluster precisions (shape, rate)
    q(v_n = k) = r_nk             assignments

under a N(0, λ⁻¹I) prior on the cluster means. λ = 1 gives the textbook
model; the clustering pipeline centers each episode and uses a broad
prior so the means are not pulled towards the origin.

Every update is built from recorded primitives, so a fixed number of
unrolled sweeps is differentiable with respect to both the
representations Z and the initial assignments R0.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from ..autodiff import Tensor, as_tensor, ops
from ..errors import ContractError, NumericalError


logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class VBConfig:
    """Inference settings"""
    max_clusters: int = 10           # K′
    alpha: float = 1.0               # DP concentration
    steps: int = 10                  # unrolled sweeps
    assignment_floor: float = 1e-6   # mixed into every R row
    mean_precision: float = 1.0      # λ of the N(0, λ⁻¹I) prior on cluster means

    def __post_init__(self):
        if self.max_clusters < 1:
            raise ContractError(f"max_clusters must be >= 1, got {self.max_clusters}")
        if self.alpha <= 0:
            raise ContractError(f"alpha must be > 0, got {self.alpha}")
        if self.steps < 0:
            raise ContractError(f"steps must be >= 0, got {self.steps}")
        if not (0.0 <= self.assignment_floor < 1.0 / self.max_clusters):
            raise ContractError(
                f"assignment_floor must be in [0, 1/K′), got {self.assignment_floor}"
            )
        if self.mean_precision <= 0:
            raise ContractError(f"mean_precision must be > 0, got {self.mean_precision}")


@dataclass
class VBState:
    """Variational parameters; globals are None until the first global update"""
    R: Tensor
    a: Tensor
    b: Tensor
    gamma1: Optional[Tensor] = None
    gamma2: Optional[Tensor] = None
    theta: Optional[Tensor] = None

    @property
    def has_globals(self) -> bool:
        return self.gamma1 is not None and self.gamma2 is not None and self.theta is not None

    def detached(self) -> 'VBState':
        """Copy whose tensors are constants (no graph participation)"""
        def cut(t):
            return None if t is None else Tensor(t.values)
        return VBState(
            R=cut(self.R), a=cut(self.a), b=cut(self.b),
            gamma1=cut(self.gamma1), gamma2=cut(self.gamma2), theta=cut(self.theta),
        )


@dataclass
class VBResult:
    """Final state of run_vb and the ELBO after every sweep"""
    state: VBState
    elbo_trace: List[float] = field(default_factory=list)


def _check_rows(R: np.ndarray, tolerance: float = 1e-8) -> None:
    if R.ndim != 2:
        raise ContractError(f"Assignments must be an N x K′ matrix, got shape {R.shape}")
    if np.any(R < -tolerance) or np.any(np.abs(R.sum(axis=1) - 1.0) > tolerance):
        raise ContractError("Assignment rows must be non-negative and sum to 1")


def _mix_floor(R: Tensor, floor: float) -> Tensor:
    if floor == 0.0:
        return R
    k = R.shape[1]
    return ops.add(ops.mul(R, 1.0 - k * floor), floor)


def _strict_mask(k: int, upper: bool) -> np.ndarray:
    """mask[j, k] = 1 where j > k (upper=True) or j < k (upper=False)"""
    rows, cols = np.indices((k, k))
    return (rows > cols if upper else rows < cols).astype(np.float64)


def init_state(R0, config: VBConfig) -> VBState:
    """
    Start inference from initial assignments.

    a and b start at one; R mixes in the assignment floor.

    Raises:
        ContractError: If R0 rows are not normalised or K′ disagrees
    """
    R0 = as_tensor(R0)
    _check_rows(R0.values)
    if R0.shape[1] != config.max_clusters:
        raise ContractError(f"R0 has {R0.shape[1]} columns, expected K′={config.max_clusters}")
    k = config.max_clusters
    return VBState(
        R=_mix_floor(R0, config.assignment_floor),
        a=Tensor(np.ones(k)),
        b=Tensor(np.ones(k)),
    )


def update_globals(Z, state: VBState, config: VBConfig) -> VBState:
    """
    Closed-form global updates, applied in order γ → θ → a → b.

    θ weights the data by the current E[β_k] = a_k / b_k against the mean
    prior precision λ:

        θ_k = E[β_k] Σ_n r_nk z_n / (λ + E[β_k] Σ_n r_nk)

    Returns:
        New state sharing R with the input
    """
    Z = as_tensor(Z)
    R = state.R
    s = Z.shape[1]
    k = R.shape[1]

    mass = ops.sum(R, axis=0)
    gamma1 = ops.add(mass, 1.0)
    tail = ops.sum(ops.matmul(R, _strict_mask(k, upper=True)), axis=0)
    gamma2 = ops.add(tail, config.alpha)

    precision = ops.div(state.a, state.b)
    weighted = ops.matmul(ops.transpose(R), Z)
    theta = ops.div(
        ops.mul(weighted, ops.column(precision)),
        ops.column(ops.add(ops.mul(precision, mass), config.mean_precision)),
    )

    a = ops.add(ops.mul(mass, s / 2.0), 1.0)
    spread = ops.add(ops.sqdist(Z, theta), float(s))
    b = ops.add(ops.mul(ops.sum(ops.mul(R, spread), axis=0), 0.5), 1.0)

    return replace(state, gamma1=gamma1, gamma2=gamma2, theta=theta, a=a, b=b)


def _expectations(state: VBState):
    """E[log π_k], E[log β_k], E[β_k] and the stick expectations"""
    k = state.gamma1.shape[0]
    total = ops.digamma(ops.add(state.gamma1, state.gamma2))
    e_log_eta = ops.sub(ops.digamma(state.gamma1), total)
    e_log_rest = ops.sub(ops.digamma(state.gamma2), total)
    prefix = ops.matmul(ops.reshape(e_log_rest, (1, k)), _strict_mask(k, upper=False))
    e_log_pi = ops.add(e_log_eta, ops.reshape(prefix, (k,)))
    e_log_beta = ops.sub(ops.digamma(state.a), ops.log(state.b))
    e_beta = ops.div(state.a, state.b)
    return e_log_pi, e_log_beta, e_beta, e_log_eta, e_log_rest


def _first_bad_cluster(values: np.ndarray) -> int:
    bad = np.where(~np.all(np.isfinite(values), axis=0))[0]
    return int(bad[0]) if bad.size else -1


def update_assignments(Z, state: VBState, config: VBConfig) -> Tensor:
    """
    Assignment update

        log r_nk = E[log π_k] + (S/2)(Ψ(a_k) − log b_k)
                   − (a_k / 2b_k)(‖z_n − θ_k‖² + S) + const

    normalised by log-sum-exp, then mixed with the assignment floor.

    Raises:
        ContractError: If globals have not been updated yet
        NumericalError: If a cluster's logits are not finite
    """
    if not state.has_globals:
        raise ContractError("update_assignments requires at least one global update")
    Z = as_tensor(Z)
    s = Z.shape[1]

    e_log_pi, e_log_beta, e_beta, _, _ = _expectations(state)
    try:
        per_cluster = ops.add(e_log_pi, ops.mul(e_log_beta, s / 2.0))
        spread = ops.add(ops.sqdist(Z, state.theta), float(s))
        logits = ops.sub(per_cluster, ops.mul(spread, ops.mul(e_beta, 0.5)))
    except NumericalError as e:
        with np.errstate(all='ignore'):
            diff = Z.values[:, None, :] - state.theta.values[None, :, :]
            raw = -(diff ** 2).sum(axis=2) * (state.a.values / state.b.values)
        index = _first_bad_cluster(raw)
        raise NumericalError(f"non-finite assignment logits for cluster {index}", index=index) from e

    if not np.all(np.isfinite(logits.values)):
        index = _first_bad_cluster(logits.values)
        raise NumericalError(f"non-finite assignment logits for cluster {index}", index=index)

    return _mix_floor(ops.softmax_rows(logits), config.assignment_floor)


def elbo(Z, state: VBState, config: VBConfig) -> Tensor:
    """
    Truncated evidence lower bound.

    Expected complete-data log likelihood under q minus the KL divergences
    of q(η), q(μ), q(β) and q(v) from their priors Beta(1, α), N(0, λ⁻¹I),
    Gamma(1, 1) and the stick-breaking prior.

    Returns:
        Scalar tensor
    """
    if not state.has_globals:
        raise ContractError("elbo requires populated global parameters")
    Z = as_tensor(Z)
    s = Z.shape[1]
    R = state.R
    alpha = config.alpha
    g1, g2, a, b = state.gamma1, state.gamma2, state.a, state.b

    e_log_pi, e_log_beta, e_beta, e_log_eta, e_log_rest = _expectations(state)

    # E[log p(z, v | η, μ, β)]
    per_cluster = ops.add(e_log_pi, ops.mul(ops.sub(e_log_beta, LOG_2PI), s / 2.0))
    spread = ops.add(ops.sqdist(Z, state.theta), float(s))
    term = ops.sub(per_cluster, ops.mul(spread, ops.mul(e_beta, 0.5)))
    expected_loglik = ops.sum(ops.mul(R, term))

    # E[log p(η)] - E[log q(η)]
    log_beta_fn = ops.sub(ops.add(ops.lgamma(g1), ops.lgamma(g2)), ops.lgamma(ops.add(g1, g2)))
    stick_prior = ops.add(ops.mul(e_log_rest, alpha - 1.0), float(np.log(alpha)))
    stick_q = ops.add(
        ops.neg(log_beta_fn),
        ops.add(ops.mul(ops.sub(g1, 1.0), e_log_eta), ops.mul(ops.sub(g2, 1.0), e_log_rest)),
    )
    stick = ops.sum(ops.sub(stick_prior, stick_q))

    # E[log p(μ)] - E[log q(μ)]; the constant vanishes at λ = 1
    lam = config.mean_precision
    k = state.theta.shape[0]
    means = ops.add(
        ops.mul(ops.sum(ops.square(state.theta)), -0.5 * lam),
        k * s * 0.5 * (np.log(lam) - lam + 1.0),
    )

    # E[log p(β)] - E[log q(β)]
    precision_q = ops.sub(
        ops.add(ops.mul(a, ops.log(b)), ops.mul(ops.sub(a, 1.0), e_log_beta)),
        ops.add(ops.lgamma(a), a),
    )
    precision = ops.sum(ops.sub(ops.neg(e_beta), precision_q))

    entropy = ops.neg(ops.sum(ops.xlogx(R)))

    return ops.add(ops.add(ops.add(expected_loglik, stick), ops.add(means, precision)), entropy)


def run_vb(Z, R0, config: VBConfig, track_elbo: bool = True) -> VBResult:
    """
    Unrolled inference: `steps` sweeps of update_globals then update_assignments.

    Args:
        Z: N × S representations (tracked or not)
        R0: N × K′ initial assignments
        config: Inference settings
        track_elbo: Record the ELBO after every sweep (evaluated on detached
            values, so it adds nothing to the active graph)

    Returns:
        VBResult with the final state and the ELBO trace
    """
    Z = as_tensor(Z)
    state = init_state(R0, config)
    trace: List[float] = []
    for _ in range(config.steps):
        state = update_globals(Z, state, config)
        state = replace(state, R=update_assignments(Z, state, config))
        if track_elbo:
            trace.append(elbo(Tensor(Z.values), state.detached(), config).item())
    return VBResult(state=state, elbo_trace=trace)


def hard_assignments(R) -> np.ndarray:
    """Argmax label per row; ties go to the lowest cluster index"""
    values = R.values if isinstance(R, Tensor) else np.asarray(R, dtype=np.float64)
    return np.argmax(values, axis=1).astype(np.int64)


def populated_clusters(R, threshold: float = 1.0) -> int:
    """Clusters holding more than `threshold` expected instances of mass"""
    values = R.values if isinstance(R, Tensor) else np.asarray(R, dtype=np.float64)
    return int(np.sum(values.sum(axis=0) > threshold))


def random_simplex_rows(n: int, k: int, rng: np.random.Generator) -> Tensor:
    """Rows drawn from a flat Dirichlet, used when fR initialisation is disabled"""
    return Tensor(rng.dirichlet(np.ones(k), size=n))


def uniform_rows(n: int, k: int) -> Tensor:
    return Tensor(np.full((n, k), 1.0 / k))


def center_rows(Z) -> Tensor:
    """Subtract the mean row; recorded, so gradients flow through the mean"""
    Z = as_tensor(Z)
    return ops.sub(Z, ops.mean(Z, axis=0))
