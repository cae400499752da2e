"""
Metaclust - Gradient Self-Check
===============================

Finite-difference verification of the recorded derivatives in four
stages: every primitive, the encoder stack, unrolled inference, and the
full episode loss.
"""

import logging
from contextlib import ExitStack
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from ..autodiff import GradCheckResult, Tensor, finite_difference_check, ops, override_derivative
from ..encoder import EncoderConfig, assemble_params, encode_instances, init_params, initial_assignments, task_representation
from ..inference import VBConfig, elbo, random_simplex_rows, run_vb
from ..metrics import continuous_ari, soft_pair_counts
from ..training import TrainMode, forward


logger = logging.getLogger(__name__)

TOLERANCE = 1e-4


@dataclass
class StageReport:
    stage: str
    checks: Dict[str, GradCheckResult] = field(default_factory=dict)

    @property
    def max_relative_error(self) -> float:
        return max((c.max_relative_error for c in self.checks.values()), default=0.0)

    @property
    def worst(self) -> Optional[str]:
        if not self.checks:
            return None
        return max(self.checks, key=lambda k: self.checks[k].max_relative_error)

    def to_dict(self) -> Dict[str, Any]:
        worst = self.worst
        return {
            'stage': self.stage,
            'max_relative_error': self.max_relative_error,
            'worst_check': worst,
            'worst': self.checks[worst].to_dict() if worst else None,
            'checks': {k: c.max_relative_error for k, c in self.checks.items()},
        }


@dataclass
class SelfCheckReport:
    seed: int
    size: int
    stages: List[StageReport]
    tolerance: float = TOLERANCE

    @property
    def passed(self) -> bool:
        return all(s.max_relative_error < self.tolerance for s in self.stages)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'seed': self.seed,
            'size': self.size,
            'tolerance': self.tolerance,
            'passed': self.passed,
            'stages': [s.to_dict() for s in self.stages],
        }


def _weighted(out: Tensor, weights: np.ndarray) -> Tensor:
    return ops.sum(ops.mul(out, weights))


def _primitive_cases(rng: np.random.Generator) -> Dict[str, tuple]:
    """Primitive name → (function of tensors, input arrays inside the domain)"""
    m = rng.normal(size=(3, 4))
    other = rng.normal(size=(3, 4))
    positive = rng.uniform(0.5, 3.0, size=(3, 4))
    away = np.where(np.abs(m) < 0.1, 0.5, m)
    w = rng.normal(size=(3, 4))
    cases = {
        'add': (lambda t: _weighted(ops.add(t[0], t[1]), w), [m, rng.normal(size=4)]),
        'sub': (lambda t: _weighted(ops.sub(t[0], t[1]), w), [m, rng.normal(size=(3, 1))]),
        'mul': (lambda t: _weighted(ops.mul(t[0], t[1]), w), [m, other]),
        'div': (lambda t: _weighted(ops.div(t[0], t[1]), w), [m, positive]),
        'neg': (lambda t: _weighted(ops.neg(t[0]), w), [m]),
        'matmul': (lambda t: _weighted(ops.matmul(t[0], t[1]), w[:, :2]), [m, rng.normal(size=(4, 2))]),
        'exp': (lambda t: _weighted(ops.exp(t[0]), w), [m]),
        'log': (lambda t: _weighted(ops.log(t[0]), w), [positive]),
        'abs': (lambda t: _weighted(ops.abs(t[0]), w), [away]),
        'relu': (lambda t: _weighted(ops.relu(t[0]), w), [away]),
        'digamma': (lambda t: _weighted(ops.digamma(t[0]), w), [positive]),
        'lgamma': (lambda t: _weighted(ops.lgamma(t[0]), w), [positive]),
        'xlogx': (lambda t: _weighted(ops.xlogx(t[0]), w), [positive]),
        'sum': (lambda t: _weighted(ops.sum(t[0], axis=1), w[:, 0]), [m]),
        'mean': (lambda t: _weighted(ops.mean(t[0], axis=0), w[0]), [m]),
        'logsumexp': (lambda t: _weighted(ops.logsumexp(t[0], axis=1), w[:, 0]), [m]),
        'sqdist': (lambda t: _weighted(ops.sqdist(t[0], t[1]), w[:, :2]), [m, rng.normal(size=(2, 4))]),
        'concat': (lambda t: _weighted(ops.concat([t[0], t[1]]), np.hstack([w, w[:, :1]])), [m, rng.normal(size=(3, 1))]),
        'transpose': (lambda t: _weighted(ops.transpose(t[0]), w.T), [m]),
        'reshape': (lambda t: _weighted(ops.reshape(t[0], (4, 3)), w.reshape(4, 3)), [m]),
        'take_rows': (lambda t: _weighted(ops.take_rows(t[0], [2, 0, 2]), w[:3]), [m]),
    }
    return cases


def check_primitives(seed: int) -> StageReport:
    rng = np.random.default_rng(seed)
    report = StageReport('primitives')
    for name, (function, inputs) in _primitive_cases(rng).items():
        report.checks[name] = finite_difference_check(function, inputs, seed=seed)
    return report


def _small_encoder(dim: int = 4, clusters: int = 4) -> EncoderConfig:
    return EncoderConfig(input_dim=dim, representation_dim=dim, hidden=8, depth=3,
                         max_clusters=clusters, pooled_dim=6, task_dim=6)


def _params_function(config: EncoderConfig, names: Sequence[str], body: Callable) -> Callable:
    def function(tensors):
        return body(assemble_params(config, dict(zip(names, tensors))))
    return function


def check_encoder(seed: int, size: int) -> StageReport:
    rng = np.random.default_rng(seed)
    config = _small_encoder()
    params = init_params(config, seed)
    X = rng.normal(size=(size, config.input_dim))
    w_r = rng.normal(size=(size, config.max_clusters))
    w_u = rng.normal(size=config.task_dim)

    def body(p):
        Z = encode_instances(p, X)
        u = task_representation(p, Z)
        return ops.add(_weighted(initial_assignments(p, Z, u), w_r), _weighted(u, w_u))

    named = params.named_tensors()
    report = StageReport('encoder')
    report.checks['encoder_stack'] = finite_difference_check(
        _params_function(config, list(named), body), list(named.values()), max_coordinates=20, seed=seed,
    )
    return report


def check_inference(seed: int, size: int, clusters: int = 4, steps: int = 5) -> StageReport:
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(size, 4)) * 2.0
    R0 = random_simplex_rows(size, clusters, rng).values
    w = rng.normal(size=(size, clusters))
    vb = VBConfig(max_clusters=clusters, steps=steps)

    report = StageReport('inference')
    report.checks['assignments_wrt_Z'] = finite_difference_check(
        lambda t: _weighted(run_vb(t[0], R0, vb, track_elbo=False).state.R, w), [Z], seed=seed,
    )
    report.checks['assignments_wrt_R0_logits'] = finite_difference_check(
        lambda t: _weighted(run_vb(Z, ops.softmax_rows(t[0]), vb, track_elbo=False).state.R, w),
        [np.log(R0)], seed=seed,
    )

    def final_elbo(t):
        state = run_vb(t[0], R0, vb, track_elbo=False).state
        return elbo(t[0], state, vb)

    report.checks['elbo_wrt_Z'] = finite_difference_check(final_elbo, [Z], seed=seed)
    return report


def check_pipeline(seed: int, size: int, clusters: int = 4, steps: int = 5) -> StageReport:
    rng = np.random.default_rng(seed)
    config = _small_encoder(clusters=clusters)
    params = init_params(config, seed)
    X = rng.normal(size=(size, config.input_dim))
    y = np.arange(size) % 3
    vb = VBConfig(max_clusters=clusters, steps=steps)

    def body(p):
        result = forward(p, X, vb, TrainMode.FULL, True, np.random.default_rng(seed))
        return ops.neg(continuous_ari(soft_pair_counts(y, result.R)))

    named = params.named_tensors()
    report = StageReport('pipeline')
    report.checks['episode_loss'] = finite_difference_check(
        _params_function(config, list(named), body), list(named.values()), max_coordinates=20, seed=seed,
    )
    return report


def _faulty_exp(g, out, a):
    return (2.0 * g * out,)


def run_selfcheck(seed: int = 0, size: int = 12, inject_fault: bool = False) -> SelfCheckReport:
    """
    Run all four stages.

    Args:
        seed: Seeds inputs, parameters and checked coordinates
        size: Instances per episode in the inference and pipeline stages
        inject_fault: Replace the exp derivative with a wrong rule
    """
    with ExitStack() as stack:
        if inject_fault:
            stack.enter_context(override_derivative('exp', _faulty_exp))
        stages = []
        for name, check in (
            ('primitives', lambda: check_primitives(seed)),
            ('encoder', lambda: check_encoder(seed, size)),
            ('inference', lambda: check_inference(seed, size)),
            ('pipeline', lambda: check_pipeline(seed, size)),
        ):
            stage = check()
            logger.info("Gradient check %s: max relative error %.3e", name, stage.max_relative_error)
            stages.append(stage)
    return SelfCheckReport(seed=seed, size=size, stages=stages)
