"""
Metaclust
=========

Meta-learned instance and task representations whose embeddings cluster
well under a few steps of truncated Dirichlet-process mixture inference,
trained end to end through a continuous adjusted Rand index.
"""

__version__ = '0.3.0'

from .errors import (
    MetaclustError,
    ConfigError,
    ContractError,
    DataParseError,
    ModelMismatchError,
    NumericalError,
)
from .encoder import EncoderConfig, EncoderParams, init_params, load_checkpoint, save_checkpoint
from .inference import VBConfig, run_em, run_vb
from .metrics import adjusted_rand_index, continuous_ari, soft_pair_counts
from .training import TrainConfig, TrainMode, cluster_instances, evaluate, train

__all__ = [
    '__version__',
    'MetaclustError',
    'ConfigError',
    'ContractError',
    'DataParseError',
    'ModelMismatchError',
    'NumericalError',
    'EncoderConfig',
    'EncoderParams',
    'init_params',
    'load_checkpoint',
    'save_checkpoint',
    'VBConfig',
    'run_em',
    'run_vb',
    'adjusted_rand_index',
    'continuous_ari',
    'soft_pair_counts',
    'TrainConfig',
    'TrainMode',
    'cluster_instances',
    'evaluate',
    'train',
]
