"""
Metaclust - Category-wise Splits
================================

Train / validation / test partitions by category, never by instance,
so evaluation always clusters categories the encoder has not seen.
"""

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from ..errors import ContractError
from .dataset import LabeledDataset


SPLIT_NAMES = ('train', 'validation', 'test')
MIN_CATEGORIES = 5


@dataclass
class SplitSpec:
    """Category fractions per split and the shuffling seed"""
    train: float = 0.6
    validation: float = 0.2
    test: float = 0.2
    seed: int = 0

    def __post_init__(self):
        fractions = (self.train, self.validation, self.test)
        if any(f <= 0 for f in fractions):
            raise ContractError(f"Split fractions must be positive, got {fractions}")
        if abs(sum(fractions) - 1.0) > 1e-9:
            raise ContractError(f"Split fractions must sum to 1, got {sum(fractions)}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class DatasetSplit:
    """The three splits and the category → split assignment"""
    train: LabeledDataset
    validation: LabeledDataset
    test: LabeledDataset
    assignment: Dict[str, str]
    spec: SplitSpec

    def datasets(self) -> Dict[str, LabeledDataset]:
        return {'train': self.train, 'validation': self.validation, 'test': self.test}

    def counts(self) -> Dict[str, int]:
        return {k: d.n_categories for k, d in self.datasets().items()}


def split_by_category(data: LabeledDataset, spec: Optional[SplitSpec] = None) -> DatasetSplit:
    """
    Shuffle categories by seed and partition them by count.

    Validation and test get floor(fraction · K) categories each; the
    remainder goes to train.

    Raises:
        ContractError: Unlabeled data, fewer than 5 categories, or a split
            that would be empty
    """
    spec = spec or SplitSpec()
    if not data.labeled:
        raise ContractError("split_by_category requires labeled data")
    k = data.n_categories
    if k < MIN_CATEGORIES:
        raise ContractError(f"Need at least {MIN_CATEGORIES} categories to split, got {k}")

    n_validation = int(np.floor(spec.validation * k + 1e-9))
    n_test = int(np.floor(spec.test * k + 1e-9))
    n_train = k - n_validation - n_test
    if min(n_train, n_validation, n_test) < 1:
        raise ContractError(
            f"Fractions {spec.train}/{spec.validation}/{spec.test} leave an empty split for {k} categories"
        )

    order = np.random.default_rng(spec.seed).permutation(k)
    groups = {
        'train': sorted(order[:n_train].tolist()),
        'validation': sorted(order[n_train:n_train + n_validation].tolist()),
        'test': sorted(order[n_train + n_validation:].tolist()),
    }
    assignment = {data.label_names[c]: name for name, cats in groups.items() for c in cats}
    return DatasetSplit(
        train=data.subset(groups['train'], name=f"{data.name}-train"),
        validation=data.subset(groups['validation'], name=f"{data.name}-validation"),
        test=data.subset(groups['test'], name=f"{data.name}-test"),
        assignment=assignment,
        spec=spec,
    )


def write_split_manifest(
    split: DatasetSplit,
    path: Union[str, Path],
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """JSON manifest listing the split of every category"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {
        'split': split.spec.to_dict(),
        'counts': split.counts(),
        'categories': split.assignment,
        **(extra or {}),
    }
    path.write_text(json.dumps(document, indent=2, sort_keys=True), encoding='utf-8')
    return path
