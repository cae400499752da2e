"""
Metaclust - Encoder Checkpoints
===============================

Versioned JSON documents holding the encoder configuration echo and one
flat decimal array per weight or bias ("fZ.0.W", "fZ.0.b", ...).

Floats are written with Python's shortest round-trip repr, so a
save → load cycle reproduces every parameter bit for bit.
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from ..errors import DataParseError
from .networks import EncoderConfig, EncoderParams, build_params


CHECKPOINT_FORMAT = 'metaclust.encoder'
CHECKPOINT_VERSION = 1


def params_to_document(params: EncoderParams, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Serialisable checkpoint document"""
    return {
        'format': CHECKPOINT_FORMAT,
        'version': CHECKPOINT_VERSION,
        'config': params.config.to_dict(),
        'params': {k: v.reshape(-1).tolist() for k, v in params.arrays().items()},
        'extra': extra or {},
    }


def params_from_document(document: Dict[str, Any]) -> Tuple[EncoderParams, Dict[str, Any]]:
    """
    Rebuild EncoderParams from a checkpoint document.

    Raises:
        DataParseError: If the document is not a supported checkpoint
    """
    if document.get('format') != CHECKPOINT_FORMAT:
        raise DataParseError(f"Not a metaclust encoder checkpoint (format={document.get('format')!r})")
    if document.get('version') != CHECKPOINT_VERSION:
        raise DataParseError(f"Unsupported checkpoint version {document.get('version')!r}")

    config = EncoderConfig(**document['config'])
    arrays = {}
    for net in ('fZ', 'fU', 'gU', 'fR'):
        sizes = config.layer_sizes(net)
        for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
            for kind, shape in (('W', (fan_out, fan_in)), ('b', (fan_out,))):
                key = f"{net}.{i}.{kind}"
                if key not in document['params']:
                    raise DataParseError(f"Checkpoint is missing '{key}'")
                flat = np.asarray(document['params'][key], dtype=np.float64)
                if flat.size != int(np.prod(shape)):
                    raise DataParseError(f"'{key}' has {flat.size} values, expected {int(np.prod(shape))}")
                arrays[key] = flat.reshape(shape)
    return build_params(config, arrays), document.get('extra', {})


def save_checkpoint(
    params: EncoderParams,
    path: Union[str, Path],
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Write a checkpoint.

    Args:
        params: Encoder parameters
        path: Destination file
        extra: Additional JSON-able content (run config, preprocessing, ...)

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(params_to_document(params, extra)), encoding='utf-8')
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[EncoderParams, Dict[str, Any]]:
    """
    Read a checkpoint written by save_checkpoint.

    Returns:
        (params, extra)
    """
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding='utf-8'))
    except FileNotFoundError as e:
        raise DataParseError(f"{path}: checkpoint not found") from e
    except json.JSONDecodeError as e:
        raise DataParseError(f"{path}: invalid JSON ({e.msg})", line=e.lineno) from e
    return params_from_document(document)
