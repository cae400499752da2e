"""
Metaclust - API Tests
=====================

Tests for the clustering service.
"""

import pytest
from fastapi.testclient import TestClient

import src.api.main as service
from src.encoder import save_checkpoint


@pytest.fixture
def client(monkeypatch):
    monkeypatch.setattr(service, 'store', service.ModelStore())
    monkeypatch.delenv('METACLUST_MODEL', raising=False)
    return TestClient(service.app)


@pytest.fixture
def checkpoint(small_params, tmp_path):
    return str(save_checkpoint(small_params, tmp_path / 'model.json', extra={'mode': 'full'}))


class TestService:
    """Tests for the REST endpoints"""

    def test_health(self, client):
        response = client.get('/health')
        assert response.status_code == 200
        assert response.json()['status'] == 'healthy'
        assert response.json()['model_loaded'] is False

    def test_root(self, client):
        assert client.get('/').json()['service'] == 'Metaclust'

    def test_no_model(self, client):
        response = client.post('/cluster', json={'instances': [[0.0, 1.0]]})
        assert response.status_code == 503

    def test_model_from_environment(self, client, checkpoint, monkeypatch):
        monkeypatch.setenv('METACLUST_MODEL', checkpoint)
        response = client.get('/model')
        assert response.status_code == 200
        assert response.json()['encoder']['input_dim'] == 2
        assert response.json()['mode'] == 'full'

    def test_unreadable_environment_model(self, client, tmp_path, monkeypatch):
        monkeypatch.setenv('METACLUST_MODEL', str(tmp_path / 'absent.json'))
        assert client.get('/model').status_code == 500

    def test_load_and_cluster(self, client, checkpoint):
        assert client.post('/model/load', json={'path': checkpoint}).status_code == 200
        payload = {'instances': [[0.1, 0.2], [0.0, 0.3], [5.1, 4.9], [5.0, 5.2]], 'vb_steps': 4, 'seed': 1}
        body = client.post('/cluster', json=payload).json()
        assert body['n_instances'] == 4
        assert body['seed'] == 1
        assert len(body['assignments']) == 4
        assert all(abs(sum(row) - 1.0) < 1e-9 for row in body['assignments'])
        assert body['labels'][0] == 0
        assert len(body['elbo_trace']) == 4

    def test_load_missing_checkpoint(self, client, tmp_path):
        response = client.post('/model/load', json={'path': str(tmp_path / 'absent.json')})
        assert response.status_code == 422

    def test_ragged_instances(self, client, checkpoint):
        client.post('/model/load', json={'path': checkpoint})
        response = client.post('/cluster', json={'instances': [[0.0, 1.0], [2.0]]})
        assert response.status_code == 422

    def test_feature_mismatch(self, client, checkpoint):
        client.post('/model/load', json={'path': checkpoint})
        response = client.post('/cluster', json={'instances': [[0.0, 1.0, 2.0]]})
        assert response.status_code == 422

    def test_request_validation(self, client, checkpoint):
        client.post('/model/load', json={'path': checkpoint})
        assert client.post('/cluster', json={'instances': []}).status_code == 422
        assert client.post('/cluster', json={'instances': [[0.0, 1.0]], 'vb_steps': -1}).status_code == 422
