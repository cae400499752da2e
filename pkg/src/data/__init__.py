"""
Metaclust - Data
================

Labeled datasets, category-wise splits, synthetic task families and
feature preprocessing.
"""

from .dataset import LABEL_COLUMN, LabeledDataset, load_csv, save_csv
from .split import SPLIT_NAMES, DatasetSplit, SplitSpec, split_by_category, write_split_manifest
from .synthetic import SyntheticFamily, SyntheticSpec, gen_synthetic, scramble
from .preprocess import PCAProjection, Standardizer, fit_pca, pca_embed, standardize

__all__ = [
    # Datasets
    'LABEL_COLUMN',
    'LabeledDataset',
    'load_csv',
    'save_csv',

    # Splits
    'SPLIT_NAMES',
    'SplitSpec',
    'DatasetSplit',
    'split_by_category',
    'write_split_manifest',

    # Synthetic families
    'SyntheticFamily',
    'SyntheticSpec',
    'gen_synthetic',
    'scramble',

    # Preprocessing
    'Standardizer',
    'standardize',
    'PCAProjection',
    'fit_pca',
    'pca_embed',
]
