"""
Metaclust - Data Tests
======================

Tests for CSV loading, category splits, synthetic families and
preprocessing.
"""

import json

import numpy as np
import pytest

from src.data import (
    LabeledDataset,
    SplitSpec,
    Standardizer,
    SyntheticFamily,
    SyntheticSpec,
    fit_pca,
    gen_synthetic,
    load_csv,
    pca_embed,
    save_csv,
    scramble,
    split_by_category,
    standardize,
    write_split_manifest,
)
from src.data.synthetic import _category_means
from src.errors import ContractError, DataParseError, SyntheticSpecError


def write(tmp_path, text, name='data.csv'):
    path = tmp_path / name
    path.write_text(text, encoding='utf-8')
    return path


class TestLoadCSV:
    """Tests for CSV parsing"""

    def test_basic(self, tmp_path):
        data = load_csv(write(tmp_path, "x1,x2,label\n1,2,a\n3,4,a\n5,6,b\n"))
        assert (data.n_instances, data.dim) == (3, 2)
        np.testing.assert_array_equal(data.y, [0, 0, 1])
        assert data.label_names == ['a', 'b']
        assert data.feature_names == ['x1', 'x2']

    def test_label_column_anywhere(self, tmp_path):
        data = load_csv(write(tmp_path, "label,x\nz,1.5\ny,2.5\n"))
        np.testing.assert_array_equal(data.X[:, 0], [1.5, 2.5])
        assert data.label_names == ['z', 'y']

    def test_empty_file(self, tmp_path):
        with pytest.raises(DataParseError) as info:
            load_csv(write(tmp_path, ""))
        assert info.value.line == 1

    def test_header_only(self, tmp_path):
        with pytest.raises(DataParseError):
            load_csv(write(tmp_path, "x,label\n"))

    def test_missing_label_column(self, tmp_path):
        with pytest.raises(DataParseError):
            load_csv(write(tmp_path, "x1,x2\n1,2\n"))

    def test_unlabeled_allowed(self, tmp_path):
        data = load_csv(write(tmp_path, "x1,x2\n1,2\n3,4\n"), require_labels=False)
        assert not data.labeled
        assert data.n_categories == 0

    def test_non_numeric_cell(self, tmp_path):
        """The offending line is reported, header being line 1"""
        with pytest.raises(DataParseError) as info:
            load_csv(write(tmp_path, "x,label\n1,a\noops,b\n"))
        assert info.value.line == 3

    def test_short_row(self, tmp_path):
        with pytest.raises(DataParseError) as info:
            load_csv(write(tmp_path, "x1,x2,label\n1,2,a\n3,b\n"))
        assert info.value.line == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataParseError):
            load_csv(tmp_path / 'absent.csv')

    def test_round_trip(self, tiny_dataset, tmp_path):
        """save then load reproduces features bit for bit"""
        path = save_csv(tiny_dataset, tmp_path / 'tiny.csv')
        loaded = load_csv(path)
        np.testing.assert_array_equal(loaded.X, tiny_dataset.X)
        np.testing.assert_array_equal(loaded.y, tiny_dataset.y)
        assert loaded.label_names == tiny_dataset.label_names

    def test_round_trip_awkward_floats(self, tmp_path):
        X = np.array([[0.1, 1e-300], [np.pi, -2.5e17]])
        data = LabeledDataset(X=X, y=np.array([0, 1]), label_names=['p', 'q'])
        np.testing.assert_array_equal(load_csv(save_csv(data, tmp_path / 'f.csv')).X, X)


class TestLabeledDataset:
    """Tests for the dataset record"""

    def test_non_contiguous_labels(self):
        with pytest.raises(ContractError):
            LabeledDataset(X=np.zeros((2, 1)), y=np.array([0, 2]))

    def test_subset_relabels(self, tiny_dataset):
        subset = tiny_dataset.subset([2, 0])
        np.testing.assert_array_equal(subset.y, [1, 1, 0, 0])
        assert subset.label_names == ['c', 'a']


class TestSplit:
    """Tests for category-wise splits"""

    def test_ten_categories(self, blobs):
        split = split_by_category(blobs, SplitSpec(seed=1))
        assert split.counts() == {'train': 6, 'validation': 2, 'test': 2}

    def test_partition(self, blobs):
        """Splits are disjoint by category and cover every instance"""
        split = split_by_category(blobs)
        names = [set(d.label_names) for d in split.datasets().values()]
        assert not (names[0] & names[1] or names[0] & names[2] or names[1] & names[2])
        assert set().union(*names) == set(blobs.label_names)
        assert sum(d.n_instances for d in split.datasets().values()) == blobs.n_instances

    def test_instances_stay_with_category(self, blobs):
        split = split_by_category(blobs)
        for dataset in split.datasets().values():
            for k, name in enumerate(dataset.label_names):
                original = blobs.label_names.index(name)
                np.testing.assert_array_equal(dataset.X[dataset.y == k], blobs.X[blobs.y == original])

    def test_deterministic(self, blobs):
        assert split_by_category(blobs, SplitSpec(seed=4)).assignment == \
            split_by_category(blobs, SplitSpec(seed=4)).assignment

    def test_too_few_categories(self, tiny_dataset):
        with pytest.raises(ContractError):
            split_by_category(tiny_dataset)

    def test_bad_fractions(self):
        with pytest.raises(ContractError):
            SplitSpec(train=0.5, validation=0.2, test=0.2)

    def test_manifest(self, blobs, tmp_path):
        split = split_by_category(blobs)
        path = write_split_manifest(split, tmp_path / 'manifest.json', extra={'seed': 0})
        document = json.loads(path.read_text(encoding='utf-8'))
        assert document['counts'] == split.counts()
        assert document['seed'] == 0
        assert len(document['categories']) == 10


class TestSynthetic:
    """Tests for generated collections"""

    def test_shape_and_labels(self):
        spec = SyntheticSpec(categories=4, instances_per_category=7, dim=3)
        data = gen_synthetic(spec, seed=0)
        assert (data.n_instances, data.dim, data.n_categories) == (28, 3, 4)
        np.testing.assert_array_equal(np.bincount(data.y), [7, 7, 7, 7])

    def test_deterministic(self):
        spec = SyntheticSpec(family=SyntheticFamily.SCRAMBLED_BLOBS, categories=5)
        np.testing.assert_array_equal(gen_synthetic(spec, 3).X, gen_synthetic(spec, 3).X)
        assert not np.array_equal(gen_synthetic(spec, 3).X, gen_synthetic(spec, 4).X)

    def test_means_separated(self):
        spec = SyntheticSpec(categories=12, separation=10.0)
        means = _category_means(spec, np.random.default_rng(0))
        distances = np.linalg.norm(means[:, None] - means[None], axis=2)
        assert distances[np.triu_indices(12, 1)].min() >= 10.0

    def test_nearest_mean_separability(self):
        """Unit-variance blobs 10 apart are almost always closest to their own mean"""
        spec = SyntheticSpec(categories=10, instances_per_category=200, separation=10.0)
        data = gen_synthetic(spec, seed=5)
        means = _category_means(spec, np.random.default_rng(5))
        nearest = np.argmin(np.linalg.norm(data.X[:, None] - means[None], axis=2), axis=1)
        assert np.mean(nearest == data.y) >= 0.999

    def test_scrambled_is_blobs_through_fixed_map(self):
        blobs = SyntheticSpec(categories=5)
        scrambled = SyntheticSpec(family='scrambled_blobs', categories=5)
        expected = scramble(gen_synthetic(blobs, 2).X, scrambled)
        np.testing.assert_allclose(gen_synthetic(scrambled, 2).X, expected)

    def test_infeasible(self):
        with pytest.raises(SyntheticSpecError):
            gen_synthetic(SyntheticSpec(categories=3, separation=10.0, box=1.0), seed=0)

    def test_invalid_spec(self):
        with pytest.raises(SyntheticSpecError):
            SyntheticSpec(dim=1)
        with pytest.raises(SyntheticSpecError):
            SyntheticSpec(separation=0.0)


class TestStandardize:
    """Tests for training-split standardization"""

    def test_train_statistics(self, blobs):
        (train,), _ = standardize(blobs)
        assert np.max(np.abs(train.X.mean(axis=0))) < 1e-12
        np.testing.assert_allclose(train.X.std(axis=0), 1.0)

    def test_constant_feature(self):
        X = np.column_stack([np.full(5, 3.0), np.arange(5.0)])
        out = Standardizer.fit(X).transform(X)
        np.testing.assert_array_equal(out[:, 0], np.zeros(5))

    def test_idempotent(self, blobs):
        (once,), _ = standardize(blobs)
        (twice,), _ = standardize(once)
        np.testing.assert_allclose(twice.X, once.X, atol=1e-12)

    def test_replayed_on_other_splits(self, blobs):
        split = split_by_category(blobs)
        (train, test), fitted = standardize(split.train, split.test)
        np.testing.assert_allclose(test.X, (split.test.X - fitted.mean) / fitted.scale)
        restored = Standardizer.from_dict(json.loads(json.dumps(fitted.to_dict())))
        np.testing.assert_array_equal(restored.transform(split.test.X), test.X)

    def test_feature_mismatch(self):
        with pytest.raises(ContractError):
            Standardizer.fit(np.ones((3, 2))).transform(np.ones((3, 4)))


class TestPCA:
    """Tests for the PCA baseline"""

    def test_exact_subspace(self):
        """Data in a 2-D affine subspace reconstructs exactly"""
        rng = np.random.default_rng(0)
        basis = np.linalg.qr(rng.normal(size=(5, 2)))[0].T
        X = rng.normal(size=(30, 2)) @ basis + 3.0
        projection = fit_pca(X, 2)
        np.testing.assert_allclose(projection.reconstruct(projection.project(X)), X, atol=1e-9)

    def test_decorrelated(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(50, 4)) @ rng.normal(size=(4, 4))
        Y = fit_pca(X, 3).project(X)
        covariance = np.cov(Y, rowvar=False)
        np.testing.assert_allclose(covariance - np.diag(np.diag(covariance)), 0.0, atol=1e-9)

    def test_ordered_variance(self):
        X = np.random.default_rng(2).normal(size=(40, 6)) * np.arange(1, 7)
        variance = fit_pca(X, 6).explained_variance
        assert np.all(np.diff(variance) <= 0)

    def test_dims_too_large(self):
        with pytest.raises(ContractError):
            fit_pca(np.ones((3, 5)), 4)

    def test_embed_all_splits(self, blobs):
        split = split_by_category(blobs)
        projection, (train, test) = pca_embed(split.train, 1, split.test)
        assert (train.dim, test.dim) == (1, 1)
        np.testing.assert_array_equal(test.y, split.test.y)
        assert projection.dims == 1
