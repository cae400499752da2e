"""
Metaclust - Command Line Tests
==============================

End-to-end runs of the metaclust commands on tiny synthetic data,
checking artifacts and exit codes.
"""

import json

import numpy as np
import pytest

from src.cli import main, parse_run_config
from src.errors import ConfigError


def tiny_config(out_dir, **changes):
    config = {
        "encoder": {"representation_dim": 3, "hidden": 8, "depth": 2, "pooled_dim": 4, "task_dim": 4},
        "vb": {"max_clusters": 4, "steps": 3},
        "train": {"max_epochs": 2, "validation_interval": 1, "validation_tasks": 2, "n_max_per_category": 5},
        "pretrain": {"episodes": 2, "max_categories": 4},
        "evaluation": {"n_tasks": 2},
        "synthetic": {"categories": 10, "instances_per_category": 6},
        "output_dir": str(out_dir),
    }
    config.update(changes)
    return config


def write_config(tmp_path, name='run.json', **changes):
    path = tmp_path / name
    path.write_text(json.dumps(tiny_config(tmp_path / 'run', **changes)), encoding='utf-8')
    return str(path)


def read_json(path):
    return json.loads(path.read_text(encoding='utf-8'))


@pytest.fixture
def trained(tmp_path):
    """A two-epoch model plus the synthetic split it was trained on"""
    config = write_config(tmp_path)
    assert main(['synth', '--config', config, '--out', str(tmp_path / 'data')]) == 0
    assert main(['train', '--config', config]) == 0
    return tmp_path / 'run' / 'checkpoint.json', tmp_path / 'data'


class TestRunConfig:
    """Tests for configuration validation"""

    def test_defaults(self):
        config = parse_run_config({})
        assert config.vb.max_clusters == 10
        assert config.train_config().vb_config(training=False).mean_precision == 0.02
        assert config.train_config().validation_interval == 10
        assert config.effective()['modes'] == ['full']

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as info:
            parse_run_config({"vb": {"clusters": 3}})
        assert 'vb.clusters' in str(info.value)

    def test_out_of_range(self):
        with pytest.raises(ConfigError):
            parse_run_config({"vb": {"max_clusters": 0}})

    def test_cross_section_check(self):
        """An assignment floor too large for K′ is rejected"""
        with pytest.raises(ConfigError):
            parse_run_config({"vb": {"max_clusters": 4, "assignment_floor": 0.5}})

    def test_identity_mode_encoder(self):
        encoder = parse_run_config({"mode": "identity_encoder"}).encoder_config(input_dim=7)
        assert encoder.identity_encoder
        assert encoder.representation_dim == 7


class TestExitCodes:
    """Tests for error mapping"""

    def test_unknown_config_key(self, tmp_path):
        assert main(['train', '--config', write_config(tmp_path, colour='blue')]) == 2

    def test_missing_config_file(self, tmp_path):
        assert main(['synth', '--config', str(tmp_path / 'absent.json')]) == 2

    def test_invalid_json(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{"seed": ', encoding='utf-8')
        assert main(['synth', '--config', str(path)]) == 2

    def test_missing_data_path(self, tmp_path):
        config = write_config(tmp_path, data={"dataset": str(tmp_path / 'absent.csv')})
        assert main(['train', '--config', config]) == 3

    def test_missing_model(self, tmp_path):
        points = tmp_path / 'points.csv'
        points.write_text("x1,x2\n0,0\n", encoding='utf-8')
        assert main(['cluster', '--model', str(tmp_path / 'absent.json'), '--data', str(points)]) == 3

    def test_infeasible_synthetic(self, tmp_path):
        config = write_config(tmp_path, synthetic={"categories": 3, "separation": 10.0, "box": 1.0})
        assert main(['synth', '--config', config]) == 5

    def test_feature_mismatch(self, trained, tmp_path):
        model, _ = trained
        points = tmp_path / 'wide.csv'
        points.write_text("a,b,c\n1,2,3\n4,5,6\n", encoding='utf-8')
        assert main(['cluster', '--model', str(model), '--data', str(points)]) == 4


class TestSynth:
    """Tests for 'metaclust synth'"""

    def test_writes_split(self, tmp_path):
        assert main(['synth', '--config', write_config(tmp_path)]) == 0
        out = tmp_path / 'run'
        manifest = read_json(out / 'split_manifest.json')
        assert manifest['counts'] == {'train': 6, 'validation': 2, 'test': 2}
        assert manifest['seed'] == 0
        assert manifest['config']['synthetic']['categories'] == 10
        for name in ('train', 'validation', 'test'):
            assert (out / f'{name}.csv').exists()

    def test_seed_override(self, tmp_path):
        config = write_config(tmp_path)
        assert main(['synth', '--config', config, '--seed', '1', '--out', str(tmp_path / 'a')]) == 0
        assert main(['synth', '--config', config, '--seed', '1', '--out', str(tmp_path / 'b')]) == 0
        assert main(['synth', '--config', config, '--seed', '2', '--out', str(tmp_path / 'c')]) == 0
        first = (tmp_path / 'a' / 'train.csv').read_text(encoding='utf-8')
        assert first == (tmp_path / 'b' / 'train.csv').read_text(encoding='utf-8')
        assert first != (tmp_path / 'c' / 'train.csv').read_text(encoding='utf-8')


class TestTrain:
    """Tests for 'metaclust train'"""

    def test_zero_epochs(self, tmp_path):
        config = write_config(tmp_path, train={"max_epochs": 0})
        assert main(['train', '--config', config]) == 0
        out = tmp_path / 'run'
        assert (out / 'checkpoint.json').exists()
        lines = (out / 'training_log.jsonl').read_text(encoding='utf-8').splitlines()
        assert json.loads(lines[0])['header']['seed'] == 0
        assert [json.loads(line)['epoch'] for line in lines[1:]] == [0]

    def test_artifacts(self, trained):
        model, _ = trained
        out = model.parent
        document = read_json(model)
        assert document['extra']['mode'] == 'full'
        assert document['extra']['config']['vb']['max_clusters'] == 4
        assert document['extra']['standardizer'] is not None
        assert read_json(out / 'config.json')['seed'] == 0
        records = [json.loads(line) for line in (out / 'training_log.jsonl').read_text(encoding='utf-8').splitlines()]
        assert [r['epoch'] for r in records[1:]] == [0, 1, 2]

    def test_resume(self, tmp_path):
        """Resuming a finished two-epoch state to four epochs matches a straight four-epoch run"""
        straight = write_config(tmp_path, 'straight.json', train={
            "max_epochs": 4, "validation_interval": 1, "validation_tasks": 2, "n_max_per_category": 5})
        assert main(['train', '--config', straight, '--out', str(tmp_path / 'straight')]) == 0
        first = write_config(tmp_path)
        assert main(['train', '--config', first, '--out', str(tmp_path / 'first')]) == 0
        assert main(['train', '--config', straight, '--out', str(tmp_path / 'resumed'),
                     '--resume', str(tmp_path / 'first' / 'training_state.json')]) == 0

        def body(name):
            lines = (tmp_path / name / 'training_log.jsonl').read_text(encoding='utf-8').splitlines()
            return lines[1:]

        assert body('resumed') == body('straight')


class TestCluster:
    """Tests for 'metaclust cluster'"""

    def test_rows_on_simplex(self, trained, tmp_path):
        model, data = trained
        out = tmp_path / 'clusters.json'
        assert main(['cluster', '--model', str(model), '--data', str(data / 'test.csv'), '--out', str(out)]) == 0
        document = read_json(out)
        R = np.array(document['assignments'])
        assert R.shape == (document['n_instances'], 4)
        np.testing.assert_allclose(R.sum(axis=1), 1.0, atol=1e-9)
        assert len(document['labels']) == document['n_instances']
        assert document['config']['vb']['steps'] == 3

    def test_single_instance(self, trained, tmp_path):
        model, _ = trained
        points = tmp_path / 'one.csv'
        points.write_text("x1,x2\n0.5,-1.5\n", encoding='utf-8')
        out = tmp_path / 'one.json'
        assert main(['cluster', '--model', str(model), '--data', str(points), '--out', str(out)]) == 0
        document = read_json(out)
        assert document['labels'] == [0]
        assert len(document['assignments']) == 1

    def test_prints_without_out(self, trained, capsys):
        model, data = trained
        capsys.readouterr()
        assert main(['cluster', '--model', str(model), '--data', str(data / 'test.csv'), '--vb-steps', '2']) == 0
        assert len(json.loads(capsys.readouterr().out)['elbo_trace']) == 2


class TestEvaluate:
    """Tests for 'metaclust evaluate'"""

    def test_single_task(self, trained, tmp_path):
        model, data = trained
        out = tmp_path / 'metrics.json'
        assert main(['evaluate', '--model', str(model), '--data', str(data / 'test.csv'),
                     '--n-tasks', '1', '--out', str(out)]) == 0
        document = read_json(out)
        assert document['n_tasks'] == 1
        assert document['stderr'] is None
        assert 'runtime_ms' not in document

    def test_fixed_seed_reproducible(self, trained, tmp_path):
        model, data = trained
        paths = [tmp_path / 'first.json', tmp_path / 'second.json']
        for path in paths:
            assert main(['evaluate', '--model', str(model), '--data', str(data / 'test.csv'),
                         '--n-tasks', '3', '--seed', '4', '--out', str(path)]) == 0
        assert paths[0].read_text(encoding='utf-8') == paths[1].read_text(encoding='utf-8')

    def test_sweep_and_runtime(self, trained, tmp_path):
        model, data = trained
        out = tmp_path / 'sweep.json'
        assert main(['evaluate', '--model', str(model), '--data', str(data / 'test.csv'), '--n-tasks', '2',
                     '--vb-steps-sweep', '0', '5', '--runtime', '--out', str(out)]) == 0
        document = read_json(out)
        assert sorted(document['vb_steps_sweep']) == ['0', '5']
        assert document['runtime_ms'] >= 0.0

    def test_settings_from_config(self, tmp_path):
        """The evaluation section drives the sweep and runtime report unless flags override it"""
        config = write_config(tmp_path, evaluation={"n_tasks": 2, "vb_steps_sweep": [0, 2], "report_runtime": True})
        data = tmp_path / 'data'
        assert main(['synth', '--config', config, '--out', str(data)]) == 0
        assert main(['train', '--config', config]) == 0
        base = ['evaluate', '--model', str(tmp_path / 'run' / 'checkpoint.json'), '--data', str(data / 'test.csv')]

        assert main(base + ['--out', str(tmp_path / 'configured.json')]) == 0
        configured = read_json(tmp_path / 'configured.json')
        assert configured['n_tasks'] == 2
        assert sorted(configured['vb_steps_sweep']) == ['0', '2']
        assert configured['runtime_ms'] >= 0.0

        assert main(base + ['--no-runtime', '--vb-steps-sweep', '--n-tasks', '1',
                            '--out', str(tmp_path / 'flagged.json')]) == 0
        flagged = read_json(tmp_path / 'flagged.json')
        assert flagged['n_tasks'] == 1
        assert 'vb_steps_sweep' not in flagged
        assert 'runtime_ms' not in flagged



class TestAblate:
    """Tests for 'metaclust ablate'"""

    def test_single_mode(self, tmp_path):
        assert main(['ablate', '--config', write_config(tmp_path)]) == 0
        rows = read_json(tmp_path / 'run' / 'ablation.json')['rows']
        assert [(r['name'], r['kind']) for r in rows] == [('full', 'mode')]
        assert rows[0]['n_tasks'] == 2

    @pytest.mark.slow
    def test_modes_baselines_and_category_counts(self, tmp_path):
        config = write_config(
            tmp_path,
            modes=['full', 'no_fR_init', 'em_inference', 'prob_distance', 'identity_encoder'],
            evaluation={"n_tasks": 2, "baselines": ['raw', 'pca', 'proto'], "train_category_counts": [2]},
        )
        assert main(['ablate', '--config', config]) == 0
        rows = read_json(tmp_path / 'run' / 'ablation.json')['rows']
        assert [r['kind'] for r in rows] == ['mode'] * 5 + ['baseline'] * 3 + ['train_categories']
        assert rows[-1]['name'] == 'train_categories=2'
        assert all(-1.0 <= r['mean_ari'] <= 1.0 for r in rows)


class TestPretrain:
    """Tests for 'metaclust pretrain'"""

    def test_writes_checkpoint(self, tmp_path):
        assert main(['pretrain', '--config', write_config(tmp_path)]) == 0
        extra = read_json(tmp_path / 'run' / 'pretrained.json')['extra']
        assert 0.0 <= extra['proto_validation_accuracy'] <= 1.0


class TestGradcheck:
    """Tests for 'metaclust gradcheck'"""

    def test_injected_fault_fails(self, tmp_path):
        out = tmp_path / 'gradcheck.json'
        assert main(['gradcheck', '--size', '6', '--inject-fault', '--out', str(out)]) == 1
        assert read_json(out)['passed'] is False

    @pytest.mark.slow
    def test_default_run_passes(self, tmp_path):
        out = tmp_path / 'gradcheck.json'
        assert main(['gradcheck', '--out', str(out)]) == 0
        document = read_json(out)
        assert [s['stage'] for s in document['stages']] == ['primitives', 'encoder', 'inference', 'pipeline']
        assert document['passed'] is True
