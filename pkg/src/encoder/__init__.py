"""
Metaclust - Encoder Networks
============================

Instance encoder fZ, deep-sets task encoder (fU, gU), initial
assignment network fR, and their JSON checkpoints.
"""

from .networks import (
    NETWORKS,
    EncoderConfig,
    EncoderParams,
    Layer,
    MLPParams,
    assemble_params,
    build_params,
    encode_instances,
    init_params,
    initial_assignments,
    task_representation,
)
from .checkpoint import (
    CHECKPOINT_FORMAT,
    CHECKPOINT_VERSION,
    load_checkpoint,
    params_from_document,
    params_to_document,
    save_checkpoint,
)

__all__ = [
    # Networks
    'NETWORKS',
    'EncoderConfig',
    'EncoderParams',
    'Layer',
    'MLPParams',
    'assemble_params',
    'build_params',
    'init_params',
    'encode_instances',
    'task_representation',
    'initial_assignments',

    # Checkpoints
    'CHECKPOINT_FORMAT',
    'CHECKPOINT_VERSION',
    'save_checkpoint',
    'load_checkpoint',
    'params_to_document',
    'params_from_document',
]
