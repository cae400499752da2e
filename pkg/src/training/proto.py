"""
Metaclust - Prototypical Pretraining
====================================

Initialises fZ episodically: each category's instances are split into
support and query halves, the class prototype is the mean support
representation, and queries are classified by negative squared distance
to the prototypes under a cross-entropy loss.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..autodiff import Graph, GradientMap, Tensor, backward, ops
from ..encoder import EncoderParams, encode_instances
from ..errors import ContractError
from .config import PretrainConfig
from .episodes import TaskBatch, Tasks, sample_episode
from .optimizer import AdamState, adam_step


logger = logging.getLogger(__name__)


@dataclass
class ProtoSplit:
    """Support/query row ids and class ids of one episode"""
    support: np.ndarray
    query: np.ndarray
    support_classes: np.ndarray
    query_classes: np.ndarray
    n_classes: int


def split_support_query(batch: TaskBatch, rng: np.random.Generator) -> Optional[ProtoSplit]:
    """
    Half of each category's instances as support, the rest as query.

    Categories with fewer than 2 instances are dropped; None when fewer
    than two categories remain.
    """
    support, query, s_cls, q_cls = [], [], [], []
    n_classes = 0
    for label in range(batch.n_categories):
        members = np.flatnonzero(batch.y == label)
        if members.size < 2:
            continue
        members = rng.permutation(members)
        half = members.size // 2
        support.append(members[:half])
        query.append(members[half:])
        s_cls.append(np.full(half, n_classes))
        q_cls.append(np.full(members.size - half, n_classes))
        n_classes += 1
    if n_classes < 2:
        return None
    return ProtoSplit(
        support=np.concatenate(support),
        query=np.concatenate(query),
        support_classes=np.concatenate(s_cls),
        query_classes=np.concatenate(q_cls),
        n_classes=n_classes,
    )


def _prototype_logits(Z: Tensor, split: ProtoSplit) -> Tensor:
    """Negative squared distance of each query to each class mean"""
    averaging = np.zeros((split.n_classes, split.support.size))
    averaging[split.support_classes, np.arange(split.support.size)] = 1.0
    averaging /= averaging.sum(axis=1, keepdims=True)
    prototypes = ops.matmul(averaging, ops.take_rows(Z, split.support))
    return ops.neg(ops.sqdist(ops.take_rows(Z, split.query), prototypes))


def proto_loss(
    params: EncoderParams,
    batch: TaskBatch,
    split: ProtoSplit,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, float, GradientMap]:
    """
    Cross-entropy of query classification and its fZ gradients.

    Returns:
        (loss, query accuracy, gradients keyed by fZ parameter names)
    """
    names = [name for name, _ in params.fZ.named_tensors()]
    onehot = np.eye(split.n_classes)[split.query_classes]
    with Graph() as graph:
        tracked = params.watch(graph)
        Z = encode_instances(tracked, batch.X, training=rng is not None, rng=rng)
        logits = _prototype_logits(Z, split)
        loss = ops.div(ops.neg(ops.sum(ops.mul(ops.log_softmax_rows(logits), onehot))), float(split.query.size))
    accuracy = float(np.mean(np.argmax(logits.values, axis=1) == split.query_classes))
    return loss.item(), accuracy, backward(loss, graph, names)


@dataclass
class ProtoResult:
    """Pretrained parameters and per-episode history"""
    params: EncoderParams
    losses: List[float] = field(default_factory=list)
    accuracies: List[float] = field(default_factory=list)
    skipped_episodes: int = 0


def proto_pretrain(params: EncoderParams, train_data: Tasks, config: PretrainConfig) -> ProtoResult:
    """
    Episodic prototypical-network training of fZ with Adam.

    Only fZ changes; fU, gU and fR are returned as given.

    Raises:
        ContractError: If the encoder is the identity map
    """
    if params.config.identity_encoder:
        raise ContractError("proto_pretrain needs a trainable fZ")
    rng = np.random.default_rng(config.seed)
    adam, state = config.adam(), AdamState()
    result = ProtoResult(params=params)

    for episode in range(config.episodes):
        batch = sample_episode(
            train_data, rng,
            max_clusters=config.max_categories,
            n_max_per_category=config.n_max_per_category,
            min_categories=config.min_categories,
            max_categories=config.max_categories,
        )
        episode_rng = np.random.default_rng(batch.seed)
        split = split_support_query(batch, episode_rng)
        if split is None:
            result.skipped_episodes += 1
            continue
        loss, accuracy, grads = proto_loss(result.params, batch, split, episode_rng)
        result.params, state = adam_step(result.params, grads, state, adam)
        result.losses.append(loss)
        result.accuracies.append(accuracy)
        if (episode + 1) % 100 == 0:
            logger.info("Proto episode %d: loss %.4f, accuracy %.3f", episode + 1, loss, accuracy)

    return result


def proto_accuracy(params: EncoderParams, data: Tasks, n_episodes: int, seed: int = 0,
                   min_categories: int = 2, max_categories: int = 10) -> float:
    """Mean query accuracy of prototype classification in evaluation mode"""
    rng = np.random.default_rng(seed)
    scores = []
    for _ in range(n_episodes):
        batch = sample_episode(data, rng, max_clusters=max_categories,
                               min_categories=min_categories, max_categories=max_categories)
        split = split_support_query(batch, np.random.default_rng(batch.seed))
        if split is None:
            continue
        Z = encode_instances(params, batch.X)
        logits = _prototype_logits(Z, split)
        scores.append(float(np.mean(np.argmax(logits.values, axis=1) == split.query_classes)))
    return float(np.mean(scores)) if scores else 0.0
