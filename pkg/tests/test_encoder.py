"""
Metaclust - Encoder Tests
=========================

Tests for the instance encoder, the permutation-invariant task encoder,
initial assignments and checkpoints.
"""

import json

import numpy as np
import pytest

from src.autodiff import Tensor
from src.encoder import (
    EncoderConfig,
    encode_instances,
    init_params,
    initial_assignments,
    load_checkpoint,
    save_checkpoint,
    task_representation,
)
from src.errors import ConformanceError, ContractError, DataParseError


class TestInitParams:
    """Tests for parameter initialization"""

    def test_deterministic(self, small_config):
        """Same seed gives bit-identical weights"""
        first = init_params(small_config, seed=3).arrays()
        second = init_params(small_config, seed=3).arrays()
        for name in first:
            np.testing.assert_array_equal(first[name], second[name])

    def test_seeds_differ(self, small_config):
        first = init_params(small_config, seed=0).arrays()
        second = init_params(small_config, seed=1).arrays()
        assert any(not np.array_equal(first[k], second[k]) for k in first)

    def test_shapes(self):
        """S=10, D=5 gives a 10 × 256 final fZ weight"""
        params = init_params(EncoderConfig(input_dim=5), seed=0)
        assert params.fZ.layers[-1].W.shape == (10, 256)
        assert params.fZ.layers[0].W.shape == (256, 5)
        assert params.fR.input_dim == 10 + 256
        assert params.fR.output_dim == 10

    def test_config_validation(self):
        with pytest.raises(ContractError):
            EncoderConfig(input_dim=2, dropout_rate=1.0)
        with pytest.raises(ContractError):
            EncoderConfig(input_dim=2, dropout_networks=('fX',))
        with pytest.raises(ContractError):
            EncoderConfig(input_dim=2, representation_dim=3, identity_encoder=True)

    def test_with_arrays_rejects_unknown(self, small_params):
        with pytest.raises(ContractError):
            small_params.with_arrays({'fQ.0.W': np.zeros(1)})


class TestEncodeInstances:
    """Tests for fZ"""

    def test_zero_weights(self, small_params):
        zeros = {k: np.zeros_like(v) for k, v in small_params.arrays().items()}
        Z = encode_instances(small_params.with_arrays(zeros), np.ones((4, 2)))
        np.testing.assert_array_equal(Z.values, np.zeros((4, 3)))

    def test_single_instance(self, small_params):
        assert encode_instances(small_params, np.ones((1, 2))).shape == (1, 3)

    def test_duplicate_rows(self, small_params):
        """Evaluation mode maps equal inputs to equal outputs"""
        Z = encode_instances(small_params, np.array([[0.3, -1.0], [0.3, -1.0]])).values
        np.testing.assert_array_equal(Z[0], Z[1])

    def test_dimension_mismatch(self, small_params):
        with pytest.raises(ConformanceError):
            encode_instances(small_params, np.ones((3, 5)))

    def test_dropout_reproducible(self, small_params):
        """Training masks depend only on the rng"""
        X = np.random.default_rng(0).normal(size=(6, 2))
        first = encode_instances(small_params, X, training=True, rng=np.random.default_rng(9)).values
        second = encode_instances(small_params, X, training=True, rng=np.random.default_rng(9)).values
        evaluation = encode_instances(small_params, X).values
        np.testing.assert_array_equal(first, second)
        assert not np.allclose(first, evaluation)

    def test_dropout_expectation(self, small_params):
        """Masked passes average to the evaluation output of a single-hidden-layer network"""
        X = Tensor(np.random.default_rng(0).normal(size=(6, 2)))
        rng = np.random.default_rng(1)
        samples = np.stack([small_params.fZ.forward(X, 0.5, rng).values for _ in range(4000)])
        expected = small_params.fZ.forward(X).values
        stderr = samples.std(axis=0, ddof=1) / np.sqrt(len(samples))
        assert np.all(np.abs(samples.mean(axis=0) - expected) <= 5.0 * stderr + 1e-12)


    def test_identity_encoder(self):
        config = EncoderConfig(input_dim=3, representation_dim=3, hidden=4, pooled_dim=4,
                               task_dim=4, max_clusters=2, identity_encoder=True)
        X = np.arange(6.0).reshape(2, 3)
        np.testing.assert_array_equal(encode_instances(init_params(config, 0), X).values, X)


class TestTaskRepresentation:
    """Tests for the deep-sets summary"""

    def test_permutation_invariant(self, small_params):
        Z = encode_instances(small_params, np.random.default_rng(1).normal(size=(7, 2)))
        u = task_representation(small_params, Z).values
        shuffled = Z.values[np.random.default_rng(2).permutation(7)]
        np.testing.assert_allclose(task_representation(small_params, shuffled).values, u, atol=1e-12)

    def test_duplicated_rows(self, small_params):
        """Mean pooling ignores multiplicity"""
        Z = np.random.default_rng(3).normal(size=(4, 3))
        u = task_representation(small_params, Z).values
        doubled = task_representation(small_params, np.repeat(Z, 2, axis=0)).values
        np.testing.assert_allclose(doubled, u, atol=1e-12)

    def test_single_instance(self, small_params):
        """N=1 gives gU(fU(z))"""
        z = np.array([[0.5, -0.2, 1.0]])
        expected = small_params.gU.forward(small_params.fU.forward(z)).values[0]
        np.testing.assert_allclose(task_representation(small_params, z).values, expected, atol=1e-14)

    def test_shape(self, small_params):
        assert task_representation(small_params, np.ones((3, 3))).shape == (5,)


class TestInitialAssignments:
    """Tests for fR"""

    def test_zero_network_uniform(self, small_params):
        arrays = {k: np.zeros_like(v) for k, v in small_params.arrays().items() if k.startswith('fR')}
        params = small_params.with_arrays(arrays)
        Z = np.random.default_rng(4).normal(size=(3, 3))
        R0 = initial_assignments(params, Z, task_representation(params, Z)).values
        np.testing.assert_allclose(R0, 0.25)

    def test_rows_on_simplex(self, small_params):
        Z = encode_instances(small_params, np.random.default_rng(5).normal(size=(8, 2)))
        R0 = initial_assignments(small_params, Z, task_representation(small_params, Z)).values
        np.testing.assert_allclose(R0.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(R0 > 0)

    def test_shift_invariant(self, small_params):
        """Adding a constant to every output bias leaves rows unchanged"""
        last = f"fR.{small_params.config.depth - 1}.b"
        shifted = small_params.with_arrays({last: small_params.arrays()[last] + 4.0})
        Z = np.random.default_rng(6).normal(size=(5, 3))
        u = task_representation(small_params, Z)
        np.testing.assert_allclose(
            initial_assignments(shifted, Z, u).values, initial_assignments(small_params, Z, u).values, atol=1e-12,
        )


class TestCheckpoint:
    """Tests for JSON checkpoints"""

    def test_round_trip(self, small_params, tmp_path):
        """Parameters survive save and load bit for bit"""
        path = save_checkpoint(small_params, tmp_path / 'model.json', extra={'seed': 4})
        loaded, extra = load_checkpoint(path)
        assert extra == {'seed': 4}
        assert loaded.config == small_params.config
        for name, values in small_params.arrays().items():
            np.testing.assert_array_equal(loaded.arrays()[name], values)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{"format": ', encoding='utf-8')
        with pytest.raises(DataParseError):
            load_checkpoint(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataParseError):
            load_checkpoint(tmp_path / 'absent.json')

    def test_wrong_format(self, tmp_path):
        path = tmp_path / 'other.json'
        path.write_text(json.dumps({'format': 'something-else'}), encoding='utf-8')
        with pytest.raises(DataParseError):
            load_checkpoint(path)

    def test_missing_parameter(self, small_params, tmp_path):
        path = save_checkpoint(small_params, tmp_path / 'model.json')
        document = json.loads(path.read_text(encoding='utf-8'))
        del document['params']['fU.0.W']
        path.write_text(json.dumps(document), encoding='utf-8')
        with pytest.raises(DataParseError):
            load_checkpoint(path)
