"""
Metaclust - Training Configuration
==================================

Settings records for meta-training, prototypical pretraining and the
optimizer, validated on construction.
"""

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, Optional

from ..errors import ContractError
from ..inference import VBConfig
from ..metrics import DistanceKind


class TrainMode(Enum):
    """Pipeline variants compared by the ablation study"""
    FULL = "full"
    NO_FR_INIT = "no_fR_init"              # random simplex R0 instead of fR
    EM_INFERENCE = "em_inference"          # fixed-K EM instead of VB
    PROB_DISTANCE = "prob_distance"        # 1 − r·r′ instead of total variation
    IDENTITY_ENCODER = "identity_encoder"  # z_n = x_n


@dataclass
class AdamConfig:
    """Adam hyperparameters and global-norm gradient clipping"""
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_norm: Optional[float] = 10.0     # None disables clipping

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ContractError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ContractError(f"Adam betas must be in [0, 1), got {self.beta1}, {self.beta2}")
        if self.epsilon <= 0:
            raise ContractError(f"epsilon must be > 0, got {self.epsilon}")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ContractError(f"clip_norm must be > 0 or None, got {self.clip_norm}")


@dataclass
class TrainConfig:
    """Episodic meta-training settings"""
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_norm: Optional[float] = 10.0
    max_epochs: int = 1000                 # one episode per epoch
    patience: int = 50                     # validations without improvement
    validation_interval: int = 10
    validation_tasks: int = 50
    max_clusters: int = 10                 # K′
    vb_steps: int = 10
    alpha: float = 1.0
    assignment_floor: float = 1e-6
    mean_precision: float = 0.02           # broad prior on the centered cluster means
    n_max_per_category: int = 20
    seed: int = 0
    mode: TrainMode = TrainMode.FULL
    log_timing: bool = False

    def __post_init__(self):
        self.mode = TrainMode(self.mode)
        self.adam()
        if self.max_epochs < 0:
            raise ContractError(f"max_epochs must be >= 0, got {self.max_epochs}")
        if self.patience < 1:
            raise ContractError(f"patience must be >= 1, got {self.patience}")
        if self.validation_interval < 1 or self.validation_tasks < 1:
            raise ContractError("validation_interval and validation_tasks must be >= 1")
        if self.n_max_per_category < 1:
            raise ContractError(f"n_max_per_category must be >= 1, got {self.n_max_per_category}")
        self.vb_config(training=True)

    def adam(self) -> AdamConfig:
        return AdamConfig(self.learning_rate, self.beta1, self.beta2, self.epsilon, self.clip_norm)

    def vb_config(self, training: bool, steps: Optional[int] = None) -> VBConfig:
        """Inference settings; the assignment floor applies only while training"""
        return VBConfig(
            max_clusters=self.max_clusters,
            alpha=self.alpha,
            steps=self.vb_steps if steps is None else steps,
            assignment_floor=self.assignment_floor if training else 0.0,
            mean_precision=self.mean_precision,
        )

    @property
    def distance(self) -> DistanceKind:
        if self.mode is TrainMode.PROB_DISTANCE:
            return DistanceKind.PROBABILITY
        return DistanceKind.TOTAL_VARIATION

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['mode'] = self.mode.value
        return data


@dataclass
class PretrainConfig:
    """Prototypical-network pretraining of fZ"""
    episodes: int = 500
    learning_rate: float = 1e-3
    clip_norm: Optional[float] = 10.0
    min_categories: int = 2
    max_categories: int = 10
    n_max_per_category: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.episodes < 0:
            raise ContractError(f"episodes must be >= 0, got {self.episodes}")
        if not (2 <= self.min_categories <= self.max_categories):
            raise ContractError("Need 2 <= min_categories <= max_categories")
        self.adam()

    def adam(self) -> AdamConfig:
        return AdamConfig(learning_rate=self.learning_rate, clip_norm=self.clip_norm)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)
