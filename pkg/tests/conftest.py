"""
Metaclust - Shared Test Fixtures
================================
"""

import numpy as np
import pytest

from src.data import LabeledDataset, SyntheticFamily, SyntheticSpec, gen_synthetic
from src.encoder import EncoderConfig, init_params
from src.training import TrainConfig, sample_episode


def blob_episodes(n_episodes: int = 100, max_categories: int = 5, seed: int = 0):
    """Episodes of 2..max_categories default blobs, every instance of each category"""
    data = gen_synthetic(SyntheticSpec(categories=10, instances_per_category=20), seed=seed)
    rng = np.random.default_rng(seed)
    return [sample_episode(data, rng, max_clusters=10, min_categories=2, max_categories=max_categories)
            for _ in range(n_episodes)]


def two_blobs(n_per_blob: int = 10, dim: int = 2, distance: float = 20.0, seed: int = 0):
    """Two unit-variance blobs far apart, rows grouped by blob"""
    rng = np.random.default_rng(seed)
    centers = np.zeros((2, dim))
    centers[1, 0] = distance
    X = np.vstack([rng.normal(size=(n_per_blob, dim)) + c for c in centers])
    y = np.repeat([0, 1], n_per_blob)
    return X, y


@pytest.fixture
def small_config():
    return EncoderConfig(input_dim=2, representation_dim=3, hidden=8, depth=2,
                         max_clusters=4, pooled_dim=5, task_dim=5)


@pytest.fixture
def small_params(small_config):
    return init_params(small_config, seed=0)


@pytest.fixture
def fast_train_config():
    return TrainConfig(max_clusters=4, vb_steps=3, max_epochs=6, validation_interval=2,
                       validation_tasks=3, patience=2, n_max_per_category=6, seed=0)


@pytest.fixture
def blobs():
    spec = SyntheticSpec(family=SyntheticFamily.BLOBS, categories=10, instances_per_category=8)
    return gen_synthetic(spec, seed=0)


@pytest.fixture
def tiny_dataset():
    X = np.array([[0.0, 0.1], [0.2, 0.0], [5.0, 5.1], [5.2, 4.9], [9.9, 0.0], [10.1, 0.2]])
    return LabeledDataset(X=X, y=np.array([0, 0, 1, 1, 2, 2]), label_names=['a', 'b', 'c'], name='tiny')
