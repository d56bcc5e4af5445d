import sys
import json
import logging
import pathlib
import subprocess

import pytest

from romes_closure.cli import main
from romes_closure.utils import utils


def _write_config(tmp_path, name='config.json', **changes):
    data = {'schema_version': 1, 'benchmark': 'linear_diffusion', 'grid_m': 6, 'n': 2, 'n_perp': 1,
            'n_p': 6, 'folds': 3, 'grid_points': 3, 'pod_size': 10, 'dual_size': 5, 'romes_size': 15,
            'online_size': 6, 'n_samples': 20, 'output_dir': str(tmp_path / 'out')}
    data.update(changes)
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def _check_declared_files(out_dir, summary):
    for entry in summary['files']:
        path = out_dir / entry['path']
        assert path.is_file(), entry['path']
        if entry['format'] == 'json':
            utils.read_json(str(path))
        elif entry['format'] == 'matrix_csv':
            utils.read_matrix_csv(str(path))
        else:
            assert utils.read_records_csv(str(path))


def test_run_writes_declared_files(tmp_path):
    config = _write_config(tmp_path)
    assert main(['run', config, '--quiet']) == 0
    out = tmp_path / 'out'
    summary = utils.read_json(str(out / 'summary.json'))
    assert summary['benchmark'] == 'linear_diffusion'
    assert {'scatter_1.csv', 'scatter_3.csv', 'metrics.csv', 'points.csv', 'package/manifest.json'} <= \
        {entry['path'] for entry in summary['files']}
    assert not any(key.endswith('_time') for key in summary['results'])
    _check_declared_files(out, summary)
    scatter = utils.read_records_csv(str(out / 'scatter_1.csv'))
    assert len(scatter) == 6
    assert all(row['lo99'] <= row['mean'] <= row['hi99'] for row in scatter)


def test_rerun_gives_identical_summary(tmp_path):
    config = _write_config(tmp_path)
    assert main(['run', config, '--quiet']) == 0
    first = (tmp_path / 'out' / 'summary.json').read_bytes()
    assert main(['run', config, '--quiet']) == 0
    assert (tmp_path / 'out' / 'summary.json').read_bytes() == first


def test_seed_override_and_out(tmp_path):
    config = _write_config(tmp_path)
    assert main(['run', config, '--quiet', '--seed-override', '5', '--out', str(tmp_path / 'shifted')]) == 0
    summary = utils.read_json(str(tmp_path / 'shifted' / 'summary.json'))
    assert summary['config']['seeds']['pod'] == 16
    assert summary['config']['output_dir'] == str(tmp_path / 'shifted')


def test_pareto_outputs(tmp_path):
    pareto = {'n_values': [2], 'n_p_offsets': [4], 'n_perp_values': [1]}
    config = _write_config(tmp_path, online_size=4, pareto=pareto)
    assert main(['pareto', config, '--quiet']) == 0
    out = tmp_path / 'out'
    points = utils.read_records_csv(str(out / 'pareto_points.csv'))
    fronts = utils.read_records_csv(str(out / 'pareto_fronts.csv'))
    assert [p['method'] for p in points] == ['rom_only', 'romes_inplane', 'romes_full']
    assert points[0]['n_p'] is None
    for row in fronts:
        assert {k: v for k, v in row.items() if k != 'front'} in points
    summary = utils.read_json(str(out / 'pareto_summary.json'))
    _check_declared_files(out, summary)


@pytest.mark.parametrize('contents', ['{"schema_version": 1}', 'schema_version: 1\nbenchmark: [oops\n'])
def test_config_errors_exit_2(tmp_path, capsys, contents):
    path = tmp_path / ('bad.yaml' if 'oops' in contents else 'bad.json')
    path.write_text(contents)
    assert main(['run', str(path)]) == 2
    assert 'config error' in capsys.readouterr().err


def test_numerical_failure_exits_3(tmp_path, capsys):
    config = _write_config(tmp_path, pod_size=3, n=2, n_perp=2)
    assert main(['run', config, '--quiet']) == 3
    assert 'numerical failure' in capsys.readouterr().err


def _run_module(args):
    root = pathlib.Path(__file__).resolve().parents[1]
    return subprocess.run([sys.executable, '-m', 'romes_closure.cli', *args], cwd=root,
                          capture_output=True, text=True, timeout=600)


def test_quiet_silences_component_loggers(tmp_path):
    config = _write_config(tmp_path)
    loud = _run_module(['run', config])
    assert loud.returncode == 0, loud.stderr
    assert 'INFO:OfflineTrainer' in loud.stderr
    quiet = _run_module(['run', config, '--quiet', '--out', str(tmp_path / 'quiet')])
    assert quiet.returncode == 0, quiet.stderr
    assert 'INFO:' not in quiet.stderr


def test_quiet_runner_drops_info_records(tmp_path, caplog):
    config = _write_config(tmp_path)
    assert main(['run', config, '--quiet']) == 0
    assert not [r for r in caplog.records if r.levelno < logging.WARNING]
