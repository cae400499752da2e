"""
Metaclust - Labeled Datasets
============================

Feature matrices with contiguous category labels, read from and written
to CSV with pandas. The CSV schema is a header row, numeric feature
columns, and an optional column named "label".
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..errors import ContractError, DataParseError


logger = logging.getLogger(__name__)

LABEL_COLUMN = 'label'

_PANDAS_LINE = re.compile(r"line (\d+)")


@dataclass
class LabeledDataset:
    """
    N × D features with labels 0..K−1.

    label_names[k] is the original name of category k. y is None for
    unlabeled data (clustering input).
    """
    X: np.ndarray
    y: Optional[np.ndarray] = None
    label_names: List[str] = field(default_factory=list)
    feature_names: List[str] = field(default_factory=list)
    name: str = 'dataset'

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise ContractError(f"Features must be an N x D matrix, got shape {self.X.shape}")
        if not self.feature_names:
            self.feature_names = [f"f{i}" for i in range(self.X.shape[1])]
        if self.y is not None:
            self.y = np.asarray(self.y, dtype=np.int64)
            if self.y.shape != (self.X.shape[0],):
                raise ContractError(f"{self.y.shape[0]} labels for {self.X.shape[0]} instances")
            present = np.unique(self.y)
            if present.size and not np.array_equal(present, np.arange(present.size)):
                raise ContractError("Labels must be contiguous integers 0..K-1")
            if not self.label_names:
                self.label_names = [str(k) for k in range(present.size)]

    @property
    def n_instances(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def labeled(self) -> bool:
        return self.y is not None

    @property
    def n_categories(self) -> int:
        return 0 if self.y is None else len(self.label_names)

    def category_index(self) -> Dict[int, np.ndarray]:
        """Label → row ids"""
        if self.y is None:
            return {}
        return {k: np.flatnonzero(self.y == k) for k in range(self.n_categories)}

    def subset(self, categories: Sequence[int], name: Optional[str] = None) -> 'LabeledDataset':
        """Rows of the given categories, relabelled 0..len(categories)−1 in the given order"""
        if self.y is None:
            raise ContractError("subset requires a labeled dataset")
        categories = list(categories)
        remap = {c: i for i, c in enumerate(categories)}
        rows = np.flatnonzero(np.isin(self.y, categories))
        return LabeledDataset(
            X=self.X[rows],
            y=np.array([remap[c] for c in self.y[rows]], dtype=np.int64),
            label_names=[self.label_names[c] for c in categories],
            feature_names=list(self.feature_names),
            name=name or self.name,
        )

    def with_features(self, X: np.ndarray, name: Optional[str] = None) -> 'LabeledDataset':
        """Same labels over a transformed feature matrix"""
        return LabeledDataset(
            X=X, y=self.y, label_names=list(self.label_names),
            feature_names=[] if X.shape[1] != self.dim else list(self.feature_names),
            name=name or self.name,
        )


def load_csv(path: Union[str, Path], require_labels: bool = True) -> LabeledDataset:
    """
    Read a dataset from CSV.

    Labels are mapped to contiguous integers in order of first appearance.

    Args:
        path: UTF-8 CSV with a header row
        require_labels: Fail when no "label" column is present

    Raises:
        DataParseError: Empty file, missing label column, ragged row, or
            non-numeric feature cell (1-based line numbers, header is line 1)
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, na_values=[], encoding='utf-8')
    except FileNotFoundError as e:
        raise DataParseError(f"{path}: file not found") from e
    except pd.errors.EmptyDataError as e:
        raise DataParseError(f"{path}: empty file", line=1) from e
    except pd.errors.ParserError as e:
        match = _PANDAS_LINE.search(str(e))
        raise DataParseError(f"{path}: ragged row", line=int(match.group(1)) if match else None) from e
    except UnicodeDecodeError as e:
        raise DataParseError(f"{path}: not valid UTF-8") from e

    if frame.shape[0] == 0:
        raise DataParseError(f"{path}: no data rows", line=2)

    has_labels = LABEL_COLUMN in frame.columns
    if require_labels and not has_labels:
        raise DataParseError(f"{path}: missing '{LABEL_COLUMN}' column", line=1)

    missing = frame.isna().to_numpy()
    if missing.any():
        row = int(np.argwhere(missing)[0][0])
        raise DataParseError(f"{path}: ragged row", line=row + 2)

    feature_columns = [c for c in frame.columns if c != LABEL_COLUMN]
    if not feature_columns:
        raise DataParseError(f"{path}: no feature columns", line=1)

    numeric = frame[feature_columns].apply(pd.to_numeric, errors='coerce')
    bad = numeric.isna().to_numpy()
    if bad.any():
        row, col = (int(v) for v in np.argwhere(bad)[0])
        raise DataParseError(
            f"{path}: non-numeric value {frame.iloc[row][feature_columns[col]]!r} "
            f"in column '{feature_columns[col]}'",
            line=row + 2,
        )

    y, names = None, []
    if has_labels:
        codes, uniques = pd.factorize(frame[LABEL_COLUMN])
        y = codes.astype(np.int64)
        names = [str(u) for u in uniques]

    logger.debug("Loaded %s: %d rows, %d features", path, frame.shape[0], len(feature_columns))
    return LabeledDataset(
        X=frame[feature_columns].to_numpy().astype(np.float64),
        y=y,
        label_names=names,
        feature_names=[str(c) for c in feature_columns],
        name=path.stem,
    )


def save_csv(data: LabeledDataset, path: Union[str, Path]) -> Path:
    """Write a dataset in the load_csv schema with 17 significant digits"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(data.X, columns=data.feature_names)
    if data.y is not None:
        frame[LABEL_COLUMN] = [data.label_names[k] for k in data.y]
    frame.to_csv(path, index=False, float_format='%.17g', encoding='utf-8')
    return path
