"""
Metaclust - Clustering Pipeline
===============================

The forward pass shared by training, evaluation, the CLI and the
service:

    X → fZ → Z → (fU, gU) → u → fR([Z, u]) → R0 → unrolled VB (or EM) → R

and the training loss −ARĨ(y, R) with its gradients.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..autodiff import Graph, GradientMap, Tensor, backward, ops
from ..encoder import EncoderParams, encode_instances, initial_assignments, task_representation
from ..errors import ContractError
from ..inference import (
    VBConfig,
    center_rows,
    hard_assignments,
    populated_clusters,
    random_simplex_rows,
    run_em,
    run_vb,
)
from ..metrics import adjusted_rand_index, continuous_ari, soft_pair_counts
from .config import TrainConfig, TrainMode
from .episodes import TaskBatch


logger = logging.getLogger(__name__)


@dataclass
class ForwardPass:
    """Intermediate tensors of one pipeline run"""
    Z: Tensor
    u: Tensor
    R0: Tensor
    R: Tensor
    elbo_trace: List[float] = field(default_factory=list)
    collapsed: Optional[np.ndarray] = None


def forward(
    params: EncoderParams,
    X,
    vb: VBConfig,
    mode: TrainMode,
    training: bool,
    rng: np.random.Generator,
) -> ForwardPass:
    """
    Run the pipeline on one set of instances.

    Under NO_FR_INIT the initial rows are drawn from a flat Dirichlet;
    under EM_INFERENCE EM starts from fR's rows, since exactly uniform
    rows are a fixed point of both EM and VB. Inference sees the
    representations centered on their mean row.
    """
    mode = TrainMode(mode)
    if mode is TrainMode.IDENTITY_ENCODER and not params.config.identity_encoder:
        raise ContractError("identity_encoder mode needs an encoder built with identity_encoder=True")
    dropout_rng = rng if training else None
    Z = encode_instances(params, X, training=training, rng=dropout_rng)
    u = task_representation(params, Z, training=training, rng=dropout_rng)

    if mode is TrainMode.NO_FR_INIT:
        R0 = random_simplex_rows(Z.shape[0], vb.max_clusters, rng)
    else:
        R0 = initial_assignments(params, Z, u, training=training, rng=dropout_rng)

    centered = center_rows(Z)
    if mode is TrainMode.EM_INFERENCE:
        result = run_em(centered, vb.max_clusters, vb.steps, R0=R0)
        return ForwardPass(Z=Z, u=u, R0=R0, R=result.R, collapsed=result.collapsed)

    result = run_vb(centered, R0, vb)
    return ForwardPass(Z=Z, u=u, R0=R0, R=result.state.R, elbo_trace=result.elbo_trace)


@dataclass
class EpisodeLoss:
    """Loss −ARĨ of one episode and its gradients"""
    loss: float
    grads: GradientMap
    degenerate: bool
    hard_ari: Optional[float] = None


def episode_loss(
    params: EncoderParams,
    batch: TaskBatch,
    config: TrainConfig,
    rng: Optional[np.random.Generator] = None,
) -> EpisodeLoss:
    """
    −ARĨ of an episode in training mode, differentiated end to end.

    Degenerate episodes (vanishing ARĨ denominator, e.g. a single
    category) have loss 0 and zero gradients.

    Raises:
        ContractError: If the batch is unlabeled or has fewer than 2 instances
    """
    if batch.y is None:
        raise ContractError("episode_loss needs a labeled batch")
    if batch.n_instances < 2:
        raise ContractError(f"episode_loss needs at least 2 instances, got {batch.n_instances}")
    rng = rng if rng is not None else np.random.default_rng(batch.seed)

    with Graph() as graph:
        tracked = params.watch(graph)
        result = forward(tracked, batch.X, config.vb_config(training=True), config.mode, True, rng)
        counts = soft_pair_counts(batch.y, result.R, config.distance)
        loss = ops.neg(continuous_ari(counts))

    grads = backward(loss, graph, list(graph.leaves))
    return EpisodeLoss(
        loss=loss.item() + 0.0,
        grads=grads,
        degenerate=counts.degenerate,
        hard_ari=adjusted_rand_index(batch.y, hard_assignments(result.R)),
    )


def first_appearance_labels(clusters: np.ndarray) -> np.ndarray:
    """Renumber cluster ids 0, 1, … in order of first appearance"""
    _, first, inverse = np.unique(clusters, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first)] = np.arange(first.size)
    return rank[inverse.reshape(-1)]


@dataclass
class EpisodeResult:
    """Evaluation-mode clustering of one set of instances"""
    R: np.ndarray
    labels: np.ndarray                  # first-appearance order; column ids are argmax of R
    populated_clusters: int
    elbo_trace: List[float]
    task_representation: np.ndarray

    def to_dict(self) -> Dict[str, Any]:
        return {
            'assignments': self.R.tolist(),
            'labels': self.labels.tolist(),
            'populated_clusters': self.populated_clusters,
            'elbo_trace': list(self.elbo_trace),
        }


def cluster_instances(
    params: EncoderParams,
    X,
    config: Optional[TrainConfig] = None,
    vb_steps: Optional[int] = None,
    seed: int = 0,
) -> EpisodeResult:
    """
    Cluster instances in evaluation mode (no dropout, no assignment floor).

    Args:
        params: Trained encoder
        X: N × D instances
        config: Pipeline settings (mode, K′, α, VB steps)
        vb_steps: Override of the inference step count
        seed: Seeds the random initial rows under NO_FR_INIT
    """
    config = config or TrainConfig(max_clusters=params.config.max_clusters)
    vb = config.vb_config(training=False, steps=vb_steps)
    result = forward(params, X, vb, config.mode, False, np.random.default_rng(seed))
    return EpisodeResult(
        R=result.R.values,
        labels=first_appearance_labels(hard_assignments(result.R)),
        populated_clusters=populated_clusters(result.R),
        elbo_trace=result.elbo_trace,
        task_representation=result.u.values,
    )
