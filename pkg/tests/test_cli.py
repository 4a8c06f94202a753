"""
End-to-end tests for the fqa command line.
"""
import json
import os

import pytest

from src.cli.main import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, build_parser, load_config, main
from src.data_ingestion.synthetic_faces import GeneratorConfig, SyntheticFaceGenerator
from src.models import ConfigError


def small_dataset(root):
    generator = SyntheticFaceGenerator(GeneratorConfig(num_identities=4, images_per_identity=3,
                                                       eval_identities=2, seed=13))
    generator.write_dataset(str(root))
    return str(root / 'manifest.jsonl')


def two_track_scenario(path, frames=10):
    rows = [{'frame': f, 'boxes': [[20.0 + 4 * f, 20.0, 64.0, 70.0], [200.0 - 4 * f, 120.0, 64.0, 70.0]]}
            for f in range(frames)]
    path.write_text(''.join(json.dumps(row) + '\n' for row in rows), encoding='utf-8')
    return str(path)


def write_config(path, **values):
    path.write_text(json.dumps(values), encoding='utf-8')
    return str(path)


class CliFixture:
    """Small dataset plus a fast run configuration."""

    def setup_method(self):
        self.summaries = []

    def make_config(self, tmp_path, **extra):
        manifest = small_dataset(tmp_path / 'data')
        values = {
            'manifest_path': manifest,
            'seed': 3,
            'variants': ['blur'],
            'attacks': ['none', 'blur'],
            'crop_size': 64,
            'augmentation': {'blur_probability': 1.0, 'draws_per_sample': 2},
            'training': {'epochs': 5, 'batch_size': 8, 'lr_milestones': [3]},
            'scenario_path': two_track_scenario(tmp_path / 'scenario.jsonl'),
            'pipeline': {'k': 3},
        }
        values.update(extra)
        return write_config(tmp_path / 'run.json', **values)

    def run(self, capsys, *argv):
        status = main(list(argv))
        out = capsys.readouterr().out
        summary = json.loads(out) if status == EXIT_OK else None
        return status, summary

    def full_flow(self, capsys, config, out):
        for command in ('augment', 'train-head', 'eval'):
            status, summary = self.run(capsys, command, '--config', config, '--out', out)
            assert status == EXIT_OK, command
            self.summaries.append(summary)


class TestCommandFlow(CliFixture):
    """Test cases for the augment -> train-head -> eval -> pipeline-sim -> report flow."""

    def test_full_flow(self, tmp_path, capsys):
        """Test every command writes its artifacts and a run manifest."""
        config = self.make_config(tmp_path)
        out = str(tmp_path / 'out')
        self.full_flow(capsys, config, out)
        augment, train, evaluation = self.summaries

        assert augment['rows'] == 12
        assert augment['skipped'] == 0
        assert os.path.isfile(os.path.join(out, 'augment', 'labels_blur.jsonl'))
        assert train['variants'] == ['blur']
        assert os.path.isfile(os.path.join(out, 'train', 'monet.fqta'))
        assert evaluation['records'] == 6 * 2 * 3
        for name in ('report.json', 'correlation_grid.csv', 'attack_effect.csv', 'records.jsonl'):
            assert os.path.isfile(os.path.join(out, 'eval', name))

        status, pipeline = self.run(capsys, 'pipeline-sim', '--config', config, '--out', out)
        assert status == EXIT_OK
        assert pipeline['head'] == 'blur'
        assert pipeline['tracks'] == 2
        assert pipeline['selections'] == 2 * 3
        assert os.path.isfile(os.path.join(out, 'pipeline', 'timing.json'))

        os.remove(os.path.join(out, 'eval', 'correlation_grid.csv'))
        status, report = self.run(capsys, 'report', '--config', config, '--out', out)
        assert status == EXIT_OK
        assert os.path.isfile(os.path.join(out, 'eval', 'correlation_grid.csv'))

        with open(os.path.join(out, 'run_manifest.json'), encoding='utf-8') as f:
            manifest = json.load(f)
        assert manifest['command'] == 'report'
        assert any(path.endswith('report.json') for path in manifest['inputs'])

    def test_deterministic_reports(self, tmp_path, capsys):
        """Test two runs with the same seed write byte-identical reports."""
        config = self.make_config(tmp_path)
        first, second = str(tmp_path / 'a'), str(tmp_path / 'b')
        self.full_flow(capsys, config, first)
        self.full_flow(capsys, config, second)
        for name in ('report.json', 'correlation_grid.csv', 'attack_effect.csv'):
            with open(os.path.join(first, 'eval', name), 'rb') as a, \
                    open(os.path.join(second, 'eval', name), 'rb') as b:
                assert a.read() == b.read(), name

    def test_oracle_check(self, tmp_path, capsys):
        """Test --oracle-check logs the correlation with the closed-form fit."""
        config = self.make_config(tmp_path)
        out = str(tmp_path / 'out')
        assert self.run(capsys, 'augment', '--config', config, '--out', out)[0] == EXIT_OK
        status, _ = self.run(capsys, 'train-head', '--config', config, '--out', out, '--oracle-check')
        assert status == EXIT_OK
        with open(os.path.join(out, 'train', 'training.json'), encoding='utf-8') as f:
            log = json.load(f)
        assert -1.0 <= log['blur']['oracle_correlation'] <= 1.0

    def test_pipeline_k_one_and_empty_scenario(self, tmp_path, capsys):
        """Test k=1 forwards one face per track and an empty scenario forwards none."""
        config = self.make_config(tmp_path)
        out = str(tmp_path / 'out')
        self.full_flow(capsys, config, out)

        status, summary = self.run(capsys, 'pipeline-sim', '--config', config, '--out', out, '--k', '1')
        assert status == EXIT_OK
        assert summary['selections'] == summary['tracks'] == 2

        scenario = tmp_path / 'empty.jsonl'
        scenario.write_text(''.join(json.dumps({'frame': f, 'boxes': []}) + '\n' for f in range(4)),
                            encoding='utf-8')
        empty = self.make_config(tmp_path, scenario_path=str(scenario))
        status, summary = self.run(capsys, 'pipeline-sim', '--config', empty, '--out', out)
        assert status == EXIT_OK
        assert summary['frames'] == 4
        assert summary['tracks'] == 0
        assert summary['selections'] == 0


class TestExitStatus(CliFixture):
    """Test cases for exit statuses."""

    def test_missing_manifest(self, tmp_path, capsys):
        """Test a missing manifest is a usage error."""
        config = write_config(tmp_path / 'run.json', manifest_path=str(tmp_path / 'none.jsonl'))
        assert main(['augment', '--config', config, '--out', str(tmp_path / 'out')]) == EXIT_USAGE

    def test_manifest_unset(self, tmp_path):
        """Test commands needing a manifest fail without one."""
        assert main(['augment', '--out', str(tmp_path / 'out')]) == EXIT_USAGE

    def test_missing_config_file(self, tmp_path):
        """Test an absent config file is a usage error."""
        assert main(['eval', '--config', str(tmp_path / 'run.json')]) == EXIT_USAGE

    def test_unknown_command(self):
        """Test argparse errors map to exit status 2."""
        assert main(['fly']) == EXIT_USAGE

    def test_eval_without_weights(self, tmp_path):
        """Test eval needs a trained archive."""
        config = self.make_config(tmp_path)
        assert main(['eval', '--config', config, '--out', str(tmp_path / 'out')]) == EXIT_USAGE

    def test_corrupt_labels(self, tmp_path):
        """Test a malformed label table fails the command."""
        labels = tmp_path / 'labels.jsonl'
        labels.write_text('not json\n', encoding='utf-8')
        config = self.make_config(tmp_path, labels_path=str(labels))
        assert main(['train-head', '--config', config, '--out', str(tmp_path / 'out')]) == EXIT_FAILURE

    def test_report_missing(self, tmp_path):
        """Test re-rendering without a report is a usage error."""
        assert main(['report', '--out', str(tmp_path / 'out')]) == EXIT_USAGE


class TestSynth:
    """Test cases for the synth command."""

    def test_writes_desk_set(self, tmp_path, capsys):
        """Test the bundled synthetic set is written with its manifest."""
        assert main(['synth', '--out', str(tmp_path), '--seed', '2']) == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary['samples'] == 200
        assert summary['identities'] == 20
        assert os.path.isfile(os.path.join(str(tmp_path), 'synthetic', 'manifest.jsonl'))


class TestConfigLoading:
    """Test cases for flag handling."""

    def parse(self, *argv):
        return load_config(build_parser().parse_args(list(argv)))

    def test_flags_override_file(self, tmp_path):
        """Test flags win over config file values."""
        config = write_config(tmp_path / 'run.json', seed=1, mode='rot')
        effective = self.parse('augment', '--config', config, '--seed', '9', '--mode', 'blur',
                               '--attacks', 'blur, occlusion', '--k', '2')
        assert effective.seed == 9
        assert effective.training.seed == 9
        assert effective.mode == 'blur'
        assert effective.attacks == ('blur', 'occlusion')
        assert effective.pipeline.k == 2

    def test_invalid_attack(self):
        """Test unknown attacks are configuration errors."""
        with pytest.raises(ConfigError, match="attack must be one of"):
            self.parse('eval', '--attacks', 'rain')

    def test_invalid_k(self):
        """Test k below one is rejected."""
        with pytest.raises(ConfigError, match="k must be >= 1"):
            self.parse('pipeline-sim', '--k', '0')

    def test_precomputed_flag_needs_archive(self):
        """Test --backend precomputed requires a configured archive."""
        with pytest.raises(ConfigError, match="needs a precomputed backend"):
            self.parse('eval', '--backend', 'precomputed')

    def test_config_hash_stable(self, tmp_path):
        """Test equal effective configs hash equally."""
        config = write_config(tmp_path / 'run.json', seed=4)
        assert self.parse('eval', '--config', config).config_hash() == \
            self.parse('eval', '--seed', '4').config_hash()
