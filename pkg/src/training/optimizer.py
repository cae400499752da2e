"""
Metaclust - Adam
================

Bias-corrected Adam over named parameter arrays, with global-norm
clipping and a skip counter for non-finite gradients.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

import numpy as np

from ..autodiff import GradientMap
from ..encoder import EncoderParams
from ..errors import ConformanceError
from .config import AdamConfig


logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """First and second moments per parameter name, step and skip counters"""
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    skipped: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'step': self.step,
            'skipped': self.skipped,
            'm': {k: {'shape': list(a.shape), 'values': a.reshape(-1).tolist()} for k, a in self.m.items()},
            'v': {k: {'shape': list(a.shape), 'values': a.reshape(-1).tolist()} for k, a in self.v.items()},
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'AdamState':
        def arrays(part):
            return {k: np.asarray(e['values'], dtype=np.float64).reshape(e['shape']) for k, e in part.items()}
        return cls(m=arrays(data['m']), v=arrays(data['v']), step=int(data['step']), skipped=int(data['skipped']))


def clip_gradients(grads: GradientMap, clip_norm) -> GradientMap:
    """Rescale so the global norm is at most clip_norm"""
    if clip_norm is None:
        return grads
    norm = grads.global_norm()
    if norm > clip_norm:
        return grads.scaled(clip_norm / norm)
    return grads


def adam_step(
    params: EncoderParams,
    grads: GradientMap,
    state: AdamState,
    config: AdamConfig,
) -> Tuple[EncoderParams, AdamState]:
    """
    One Adam update of the parameters named in grads.

    Non-finite gradients leave parameters and moments untouched and only
    increment the skip counter.

    Returns:
        (updated params, updated state); inputs are not modified
    """
    if not grads.is_finite():
        logger.warning("Skipping update with non-finite gradients (step %d)", state.step)
        return params, AdamState(m=state.m, v=state.v, step=state.step, skipped=state.skipped + 1)

    current = params.arrays()
    for name, g in grads.items():
        if name not in current or g.shape != current[name].shape:
            raise ConformanceError(f"Gradient '{name}' does not match any parameter shape")

    grads = clip_gradients(grads, config.clip_norm)
    step = state.step + 1
    bias1 = 1.0 - config.beta1 ** step
    bias2 = 1.0 - config.beta2 ** step

    m, v, updated = dict(state.m), dict(state.v), {}
    for name, g in grads.items():
        m[name] = config.beta1 * m.get(name, np.zeros_like(g)) + (1.0 - config.beta1) * g
        v[name] = config.beta2 * v.get(name, np.zeros_like(g)) + (1.0 - config.beta2) * (g * g)
        m_hat = m[name] / bias1
        v_hat = v[name] / bias2
        updated[name] = current[name] - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)

    return params.with_arrays(updated), AdamState(m=m, v=v, step=step, skipped=state.skipped)
