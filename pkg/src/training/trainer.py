"""
Metaclust - Episodic Meta-Training
==================================

One episode per epoch: sample an episode, differentiate −ARĨ through
the whole pipeline, take an Adam step. Every validation_interval epochs
the encoder is scored on fresh validation episodes; the best snapshot is
kept and training stops after `patience` validations without
improvement.

The run is resumable: TrainingState holds parameters, best snapshot,
optimizer moments, the sampling generator state and the log.
"""

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from ..autodiff import GradientMap
from ..encoder import EncoderParams, params_from_document, params_to_document
from ..errors import ContractError, DataParseError
from .config import TrainConfig
from .episodes import Tasks, sample_episode
from .evaluation import evaluate
from .optimizer import AdamState, adam_step
from .pipeline import EpisodeLoss, episode_loss


logger = logging.getLogger(__name__)

TRAINING_STATE_FORMAT = 'metaclust.training_state'


@dataclass
class EpochRecord:
    """One line of the training log; epoch 0 carries the initial validation"""
    epoch: int
    loss: Optional[float] = None
    degenerate: int = 0
    skipped: int = 0
    validation_ari: Optional[float] = None
    wall_ms: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'epoch': self.epoch,
            'loss': self.loss,
            'validation_ari': self.validation_ari,
            'degenerate': self.degenerate,
            'skipped': self.skipped,
        }
        if self.wall_ms is not None:
            data['wall_ms'] = self.wall_ms
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'EpochRecord':
        return cls(**{k: data.get(k) for k in ('epoch', 'loss', 'validation_ari', 'wall_ms')},
                   degenerate=int(data.get('degenerate', 0)), skipped=int(data.get('skipped', 0)))


@dataclass
class TrainingState:
    """Everything needed to continue a run"""
    params: EncoderParams
    best_params: EncoderParams
    adam: AdamState = field(default_factory=AdamState)
    epoch: int = 0
    best_validation: float = float('-inf')
    best_epoch: int = 0
    stale_validations: int = 0
    stopped_early: bool = False
    rng_state: Optional[Dict[str, Any]] = None
    records: List[EpochRecord] = field(default_factory=list)


@dataclass
class TrainResult:
    """Best-validation parameters and the training log"""
    params: EncoderParams
    records: List[EpochRecord]
    best_validation: float
    best_epoch: int
    stopped_early: bool
    state: TrainingState

    def log_lines(self) -> List[str]:
        return [json.dumps(r.to_dict()) for r in self.records]


def _validate(params: EncoderParams, val_data: Tasks, config: TrainConfig, epoch: int) -> float:
    seed = int(np.random.SeedSequence([config.seed, epoch]).generate_state(1)[0])
    return evaluate(params, val_data, config, config.validation_tasks, seed=seed).mean


def train(
    params: EncoderParams,
    train_data: Tasks,
    val_data: Tasks,
    config: TrainConfig,
    resume: Optional[TrainingState] = None,
) -> TrainResult:
    """
    Meta-train an encoder.

    Args:
        params: Initial parameters (random or proto-pretrained)
        train_data: Training task collection(s)
        val_data: Validation task collection(s), categories disjoint from training
        config: Training settings
        resume: State of an interrupted run to continue from

    Returns:
        TrainResult whose params are the best-validation snapshot
    """
    if params.config.max_clusters != config.max_clusters:
        raise ContractError(
            f"Encoder K′={params.config.max_clusters} differs from training K′={config.max_clusters}"
        )
    rng = np.random.default_rng(config.seed)

    if resume is None:
        initial = _validate(params, val_data, config, 0)
        state = TrainingState(params=params, best_params=params, best_validation=initial)
        state.records.append(EpochRecord(epoch=0, validation_ari=initial))
        logger.info("Initial validation ARI %.4f", initial)
    else:
        state = resume
        if state.rng_state is not None:
            rng.bit_generator.state = state.rng_state
        logger.info("Resuming at epoch %d", state.epoch)

    adam = config.adam()
    while state.epoch < config.max_epochs and not state.stopped_early:
        epoch = state.epoch + 1
        started = time.perf_counter()

        batch = sample_episode(train_data, rng, max_clusters=config.max_clusters,
                               n_max_per_category=config.n_max_per_category)
        if batch.n_instances < 2:
            # a lone instance has no pairs
            result = EpisodeLoss(loss=0.0, grads=GradientMap(), degenerate=True)
        else:
            result = episode_loss(state.params, batch, config)
        skipped_before = state.adam.skipped
        if result.degenerate:
            # no gradient signal; Adam state is left untouched
            logger.debug("Epoch %d: degenerate episode, update skipped", epoch)
        else:
            state.params, state.adam = adam_step(state.params, result.grads, state.adam, adam)

        record = EpochRecord(
            epoch=epoch,
            loss=result.loss,
            degenerate=int(result.degenerate),
            skipped=state.adam.skipped - skipped_before,
        )
        if epoch % config.validation_interval == 0:
            record.validation_ari = _validate(state.params, val_data, config, epoch)
            if record.validation_ari > state.best_validation:
                state.best_validation = record.validation_ari
                state.best_params = state.params
                state.best_epoch = epoch
                state.stale_validations = 0
            else:
                state.stale_validations += 1
            logger.info("Epoch %d: loss %.4f, validation ARI %.4f (best %.4f @ %d)",
                        epoch, result.loss, record.validation_ari, state.best_validation, state.best_epoch)
            if state.stale_validations >= config.patience:
                state.stopped_early = True
                logger.info("Early stopping at epoch %d", epoch)
        else:
            logger.debug("Epoch %d: loss %.4f", epoch, result.loss)

        if config.log_timing:
            record.wall_ms = (time.perf_counter() - started) * 1000.0
        state.records.append(record)
        state.epoch = epoch
        state.rng_state = rng.bit_generator.state

    return TrainResult(
        params=state.best_params,
        records=list(state.records),
        best_validation=state.best_validation,
        best_epoch=state.best_epoch,
        stopped_early=state.stopped_early,
        state=state,
    )


def write_training_log(
    records: List[EpochRecord],
    path: Union[str, Path],
    header: Optional[Dict[str, Any]] = None,
) -> Path:
    """Newline-delimited JSON: optional header record, then one record per epoch"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps({'header': header})] if header is not None else []
    lines += [json.dumps(r.to_dict()) for r in records]
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    return path


def save_training_state(state: TrainingState, path: Union[str, Path]) -> Path:
    """Write a resumable training state as JSON"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {
        'format': TRAINING_STATE_FORMAT,
        'params': params_to_document(state.params),
        'best_params': params_to_document(state.best_params),
        'adam': state.adam.to_dict(),
        'epoch': state.epoch,
        'best_validation': state.best_validation,
        'best_epoch': state.best_epoch,
        'stale_validations': state.stale_validations,
        'stopped_early': state.stopped_early,
        'rng_state': state.rng_state,
        'records': [r.to_dict() for r in state.records],
    }
    path.write_text(json.dumps(document), encoding='utf-8')
    return path


def load_training_state(path: Union[str, Path]) -> TrainingState:
    """
    Read a state written by save_training_state.

    Raises:
        DataParseError: If the file is not a training state
    """
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding='utf-8'))
    except FileNotFoundError as e:
        raise DataParseError(f"{path}: training state not found") from e
    except json.JSONDecodeError as e:
        raise DataParseError(f"{path}: invalid JSON ({e.msg})", line=e.lineno) from e
    if document.get('format') != TRAINING_STATE_FORMAT:
        raise DataParseError(f"{path}: not a metaclust training state")
    params, _ = params_from_document(document['params'])
    best, _ = params_from_document(document['best_params'])
    return TrainingState(
        params=params,
        best_params=best,
        adam=AdamState.from_dict(document['adam']),
        epoch=int(document['epoch']),
        best_validation=float(document['best_validation']),
        best_epoch=int(document['best_epoch']),
        stale_validations=int(document['stale_validations']),
        stopped_early=bool(document['stopped_early']),
        rng_state=document['rng_state'],
        records=[EpochRecord.from_dict(r) for r in document['records']],
    )
