"""
Metaclust - Run Configuration
=============================

A single JSON document configures every command. Every section rejects
unknown keys; omitted fields take the defaults below. The effective
(post-default) configuration is echoed into every artifact.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..data import SplitSpec, SyntheticSpec
from ..encoder import NETWORKS, EncoderConfig
from ..errors import ConfigError, MetaclustError
from ..inference import VBConfig
from ..training import PretrainConfig, TrainConfig, TrainMode


ModeName = Literal['full', 'no_fR_init', 'em_inference', 'prob_distance', 'identity_encoder']
NetworkName = Literal['fZ', 'fU', 'gU', 'fR']
BaselineName = Literal['raw', 'pca', 'proto']


class Section(BaseModel):
    model_config = ConfigDict(extra='forbid')


class EncoderSection(Section):
    """Network architecture"""
    representation_dim: int = Field(10, ge=1, description="S, extent of z_n")
    hidden: int = Field(256, ge=1)
    depth: int = Field(3, ge=1, description="Weight layers per network")
    dropout_rate: float = Field(0.1, ge=0.0, lt=1.0)
    pooled_dim: int = Field(256, ge=1)
    task_dim: int = Field(256, ge=1)
    dropout_networks: List[NetworkName] = Field(default_factory=lambda: list(NETWORKS))


class VBSection(Section):
    """Unrolled variational inference"""
    max_clusters: int = Field(10, ge=1, description="Truncation level K′")
    alpha: float = Field(1.0, gt=0.0)
    steps: int = Field(10, ge=0)
    assignment_floor: float = Field(1e-6, ge=0.0)
    mean_precision: float = Field(0.02, gt=0.0, description="Precision λ of the prior on centered cluster means")


class TrainSection(Section):
    """Episodic meta-training"""
    learning_rate: float = Field(1e-3, gt=0.0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    epsilon: float = Field(1e-8, gt=0.0)
    clip_norm: Optional[float] = Field(10.0, gt=0.0)
    max_epochs: int = Field(1000, ge=0)
    patience: int = Field(50, ge=1)
    validation_interval: int = Field(10, ge=1)
    validation_tasks: int = Field(50, ge=1)
    n_max_per_category: int = Field(20, ge=1)
    log_timing: bool = False


class PretrainSection(Section):
    """Prototypical pretraining of fZ"""
    enabled: bool = False
    episodes: int = Field(500, ge=0)
    learning_rate: float = Field(1e-3, gt=0.0)
    min_categories: int = Field(2, ge=2)
    max_categories: int = Field(10, ge=2)


class EvaluationSection(Section):
    """Held-out evaluation and the extra studies run by ablate"""
    n_tasks: int = Field(100, ge=1)
    vb_steps_sweep: List[int] = Field(default_factory=list)
    train_category_counts: List[int] = Field(default_factory=list)
    baselines: List[BaselineName] = Field(default_factory=list)
    report_runtime: bool = False
    workers: Optional[int] = Field(None, ge=1)


class SyntheticSection(Section):
    """Generated category collection"""
    family: Literal['blobs', 'scrambled_blobs'] = 'blobs'
    categories: int = Field(30, ge=1)
    instances_per_category: int = Field(20, ge=1)
    dim: int = Field(2, ge=2)
    separation: float = Field(10.0, gt=0.0)
    box: Optional[float] = Field(None, gt=0.0)
    scramble_seed: int = 0


class SplitSection(Section):
    """Category fractions"""
    train: float = Field(0.6, gt=0.0)
    validation: float = Field(0.2, gt=0.0)
    test: float = Field(0.2, gt=0.0)


class DataSection(Section):
    """CSV inputs; a single dataset is split by category, otherwise the synthetic section is used"""
    train: Optional[str] = None
    validation: Optional[str] = None
    test: Optional[str] = None
    dataset: Optional[str] = None


class RunConfig(Section):
    """Complete configuration of a run"""
    encoder: EncoderSection = Field(default_factory=EncoderSection)
    vb: VBSection = Field(default_factory=VBSection)
    train: TrainSection = Field(default_factory=TrainSection)
    pretrain: PretrainSection = Field(default_factory=PretrainSection)
    evaluation: EvaluationSection = Field(default_factory=EvaluationSection)
    synthetic: SyntheticSection = Field(default_factory=SyntheticSection)
    split: SplitSection = Field(default_factory=SplitSection)
    data: DataSection = Field(default_factory=DataSection)
    mode: ModeName = 'full'
    modes: List[ModeName] = Field(default_factory=lambda: ['full'])
    seed: int = 0
    output_dir: str = 'runs/metaclust'
    standardize: bool = True

    @model_validator(mode='after')
    def _cross_check(self) -> 'RunConfig':
        try:
            self.vb_config()
            self.train_config()
            self.pretrain_config()
            self.split_spec()
            self.synthetic_spec()
        except MetaclustError as e:
            raise ValueError(str(e)) from e
        return self

    # === Library records ===

    def encoder_config(self, input_dim: int, mode: Optional[str] = None) -> EncoderConfig:
        identity = TrainMode(mode or self.mode) is TrainMode.IDENTITY_ENCODER
        return EncoderConfig(
            input_dim=input_dim,
            representation_dim=input_dim if identity else self.encoder.representation_dim,
            hidden=self.encoder.hidden,
            depth=self.encoder.depth,
            dropout_rate=self.encoder.dropout_rate,
            max_clusters=self.vb.max_clusters,
            pooled_dim=self.encoder.pooled_dim,
            task_dim=self.encoder.task_dim,
            dropout_networks=tuple(self.encoder.dropout_networks),
            identity_encoder=identity,
        )

    def vb_config(self) -> VBConfig:
        return VBConfig(**self.vb.model_dump())

    def train_config(self, mode: Optional[str] = None) -> TrainConfig:
        return TrainConfig(
            **self.train.model_dump(),
            max_clusters=self.vb.max_clusters,
            vb_steps=self.vb.steps,
            alpha=self.vb.alpha,
            assignment_floor=self.vb.assignment_floor,
            mean_precision=self.vb.mean_precision,
            seed=self.seed,
            mode=TrainMode(mode or self.mode),
        )

    def pretrain_config(self) -> PretrainConfig:
        return PretrainConfig(
            episodes=self.pretrain.episodes,
            learning_rate=self.pretrain.learning_rate,
            clip_norm=self.train.clip_norm,
            min_categories=self.pretrain.min_categories,
            max_categories=self.pretrain.max_categories,
            n_max_per_category=self.train.n_max_per_category,
            seed=self.seed,
        )

    def split_spec(self) -> SplitSpec:
        return SplitSpec(**self.split.model_dump(), seed=self.seed)

    def synthetic_spec(self) -> SyntheticSpec:
        return SyntheticSpec(**self.synthetic.model_dump())

    def effective(self) -> Dict[str, Any]:
        """Post-default configuration as plain JSON data"""
        return self.model_dump(mode='json')


def _field_messages(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = '.'.join(str(p) for p in item['loc']) or '<root>'
        parts.append(f"{location}: {item['msg']}")
    return '; '.join(parts)


def parse_run_config(data: Dict[str, Any]) -> RunConfig:
    """
    Validate a configuration mapping.

    Raises:
        ConfigError: With one field-level message per problem
    """
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_field_messages(e)) from e


def load_run_config(path: Optional[Union[str, Path]], overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Read a JSON configuration file (or defaults when path is None) and apply top-level overrides"""
    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding='utf-8'))
        except FileNotFoundError as e:
            raise ConfigError(f"{path}: configuration file not found") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON at line {e.lineno} ({e.msg})") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: configuration must be a JSON object")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return parse_run_config(data)
