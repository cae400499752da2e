"""
Metaclust - Meta-Training
=========================

Episode sampling, the differentiable clustering pipeline, Adam,
episodic training with early stopping, prototypical pretraining and
evaluation.
"""

from .config import AdamConfig, PretrainConfig, TrainConfig, TrainMode
from .episodes import TaskBatch, as_tasks, sample_episode
from .optimizer import AdamState, adam_step, clip_gradients
from .pipeline import (
    EpisodeLoss,
    EpisodeResult,
    ForwardPass,
    cluster_instances,
    episode_loss,
    forward,
)
from .evaluation import (
    EvaluationReport,
    evaluate,
    sample_evaluation_episodes,
    score_episodes,
    sweep_vb_steps,
)
from .proto import ProtoResult, proto_accuracy, proto_loss, proto_pretrain, split_support_query
from .trainer import (
    EpochRecord,
    TrainResult,
    TrainingState,
    load_training_state,
    save_training_state,
    train,
    write_training_log,
)

__all__ = [
    # Configuration
    'TrainConfig',
    'TrainMode',
    'AdamConfig',
    'PretrainConfig',

    # Episodes
    'TaskBatch',
    'as_tasks',
    'sample_episode',

    # Optimizer
    'AdamState',
    'adam_step',
    'clip_gradients',

    # Pipeline
    'ForwardPass',
    'forward',
    'EpisodeLoss',
    'episode_loss',
    'EpisodeResult',
    'cluster_instances',

    # Evaluation
    'EvaluationReport',
    'evaluate',
    'sample_evaluation_episodes',
    'score_episodes',
    'sweep_vb_steps',

    # Pretraining
    'ProtoResult',
    'proto_pretrain',
    'proto_loss',
    'proto_accuracy',
    'split_support_query',

    # Training
    'EpochRecord',
    'TrainResult',
    'TrainingState',
    'train',
    'write_training_log',
    'save_training_state',
    'load_training_state',
]
