"""
Metaclust - Feature Preprocessing
=================================

Per-feature standardisation fitted on the training split, and the PCA
baseline embedding.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

import numpy as np

from ..errors import ContractError
from .dataset import LabeledDataset


@dataclass
class Standardizer:
    """x ↦ (x − mean) / scale; zero-variance features keep scale 1 and map to 0"""
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> 'Standardizer':
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] < 2:
            raise ContractError(f"Standardisation needs at least 2 instances, got {X.shape[0]}")
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        return cls(mean=mean, scale=np.where(std > 0, std, 1.0))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.mean.shape[0]:
            raise ContractError(f"Expected {self.mean.shape[0]} features, got {X.shape[1]}")
        return (X - self.mean) / self.scale

    def apply(self, data: LabeledDataset) -> LabeledDataset:
        return data.with_features(self.transform(data.X))

    def to_dict(self) -> Dict[str, Any]:
        return {'mean': self.mean.tolist(), 'scale': self.scale.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Standardizer':
        return cls(mean=np.asarray(data['mean'], dtype=np.float64),
                   scale=np.asarray(data['scale'], dtype=np.float64))


def standardize(train: LabeledDataset, *others: LabeledDataset) -> Tuple[List[LabeledDataset], Standardizer]:
    """
    Fit on train, replay on every dataset.

    Returns:
        ([train, *others] transformed, fitted Standardizer)
    """
    fitted = Standardizer.fit(train.X)
    return [fitted.apply(d) for d in (train, *others)], fitted


@dataclass
class PCAProjection:
    """Top principal directions of the centered training matrix"""
    mean: np.ndarray
    components: np.ndarray           # dims × D, rows orthonormal
    explained_variance: np.ndarray   # descending

    @property
    def dims(self) -> int:
        return self.components.shape[0]

    def project(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) @ self.components.T

    def reconstruct(self, projected: np.ndarray) -> np.ndarray:
        return projected @ self.components + self.mean

    def apply(self, data: LabeledDataset) -> LabeledDataset:
        return data.with_features(self.project(data.X))


def fit_pca(X: np.ndarray, dims: int) -> PCAProjection:
    """
    Principal directions from the eigendecomposition of the covariance.

    Raises:
        ContractError: If dims is not in 1..min(N, D)
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if not (1 <= dims <= min(n, d)):
        raise ContractError(f"dims must be in 1..{min(n, d)}, got {dims}")
    mean = X.mean(axis=0)
    centered = X - mean
    covariance = centered.T @ centered / max(n - 1, 1)
    values, vectors = np.linalg.eigh(covariance)
    order = np.argsort(values)[::-1][:dims]
    return PCAProjection(
        mean=mean,
        components=vectors[:, order].T,
        explained_variance=np.clip(values[order], 0.0, None),
    )


def pca_embed(train: LabeledDataset, dims: int, *others: LabeledDataset) -> Tuple[PCAProjection, List[LabeledDataset]]:
    """Fit PCA on train and project every dataset"""
    projection = fit_pca(train.X, dims)
    return projection, [projection.apply(d) for d in (train, *others)]
