"""
Metaclust - Synthetic Task Families
===================================

Desk-scale stand-ins for real category collections:

- blobs: unit-variance Gaussian categories whose means are at least
  `separation` apart inside a hypercube
- scrambled_blobs: blobs pushed through a fixed invertible nonlinear map
  (rotation, elementwise cube, rotation) so raw Euclidean clustering
  fails while a learned encoder can undo the map
"""

import logging
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np
from scipy.stats import special_ortho_group

from ..errors import SyntheticSpecError
from .dataset import LabeledDataset


logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 100_000


class SyntheticFamily(Enum):
    BLOBS = "blobs"
    SCRAMBLED_BLOBS = "scrambled_blobs"


@dataclass
class SyntheticSpec:
    """Parameters of a generated category collection"""
    family: SyntheticFamily = SyntheticFamily.BLOBS
    categories: int = 10
    instances_per_category: int = 20
    dim: int = 2
    separation: float = 10.0
    box: Optional[float] = None        # hypercube half-width; derived when None
    scramble_seed: int = 0

    def __post_init__(self):
        self.family = SyntheticFamily(self.family)
        if self.separation <= 0:
            raise SyntheticSpecError(f"separation must be > 0, got {self.separation}")
        if self.dim < 2:
            raise SyntheticSpecError(f"dim must be >= 2, got {self.dim}")
        if self.categories < 1 or self.instances_per_category < 1:
            raise SyntheticSpecError("categories and instances_per_category must be >= 1")
        if self.box is not None and self.box <= 0:
            raise SyntheticSpecError(f"box must be > 0, got {self.box}")

    @property
    def half_width(self) -> float:
        if self.box is not None:
            return float(self.box)
        return float(self.separation * max(1.0, self.categories ** (1.0 / self.dim)))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['family'] = self.family.value
        return data


def _category_means(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    """Rejection sampling of means with pairwise distance >= separation"""
    means = np.empty((0, spec.dim))
    attempts = 0
    while means.shape[0] < spec.categories:
        if attempts >= MAX_ATTEMPTS:
            raise SyntheticSpecError(
                f"Could not place {spec.categories} means {spec.separation} apart in "
                f"[-{spec.half_width}, {spec.half_width}]^{spec.dim} within {MAX_ATTEMPTS} attempts"
            )
        attempts += 1
        candidate = rng.uniform(-spec.half_width, spec.half_width, size=spec.dim)
        if means.shape[0] == 0 or np.min(np.linalg.norm(means - candidate, axis=1)) >= spec.separation:
            means = np.vstack([means, candidate])
    logger.debug("Placed %d means in %d attempts", spec.categories, attempts)
    return means


def scramble(X: np.ndarray, spec: SyntheticSpec) -> np.ndarray:
    """The fixed nonlinear map of the scrambled family"""
    first = special_ortho_group.rvs(spec.dim, random_state=spec.scramble_seed)
    second = special_ortho_group.rvs(spec.dim, random_state=spec.scramble_seed + 1)
    return ((X / spec.half_width) @ first.T) ** 3 @ second.T


def gen_synthetic(spec: SyntheticSpec, seed: int = 0) -> LabeledDataset:
    """
    Generate a labeled collection, rows grouped by category.

    Raises:
        SyntheticSpecError: If the means cannot be placed within 1e5 attempts
    """
    rng = np.random.default_rng(seed)
    means = _category_means(spec, rng)
    y = np.repeat(np.arange(spec.categories), spec.instances_per_category)
    X = means[y] + rng.standard_normal((y.shape[0], spec.dim))
    if spec.family is SyntheticFamily.SCRAMBLED_BLOBS:
        X = scramble(X, spec)
    return LabeledDataset(
        X=X,
        y=y,
        label_names=[f"c{k}" for k in range(spec.categories)],
        name=spec.family.value,
    )
