import os
import csv
import json
import logging
import subprocess

import numpy as np


CSV_FLOAT_FORMAT = '%.17g'


def write_matrix_csv(path, mat):
    """Write a vector or matrix as comma-delimited, row-major, 17 significant digits"""
    mat = np.atleast_1d(np.asarray(mat, dtype=float))
    if mat.ndim == 1:
        mat = mat.reshape(-1, 1)
    assert mat.ndim == 2, f'can only write 1D/2D arrays, got shape {mat.shape}'
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    header = f'rows={mat.shape[0]},cols={mat.shape[1]}'
    np.savetxt(path, mat, delimiter=',', fmt=CSV_FLOAT_FORMAT, header=header)


def read_matrix_csv(path):
    """Read a matrix written by `write_matrix_csv`, preserving empty shapes"""
    assert os.path.isfile(path), f'{path} not found'
    with open(path) as f:
        header = f.readline().lstrip('#').strip()
    shape = dict(item.split('=') for item in header.split(','))
    rows, cols = int(shape['rows']), int(shape['cols'])
    if rows == 0 or cols == 0:
        return np.zeros((rows, cols))
    mat = np.loadtxt(path, delimiter=',', ndmin=2)
    return mat.reshape(rows, cols)


def format_value(val):
    if val is None:
        return ''
    if isinstance(val, (float, np.floating)):
        return CSV_FLOAT_FORMAT % float(val)
    if isinstance(val, (np.integer,)):
        return str(int(val))
    return str(val)


def write_records_csv(path, rows, fieldnames):
    """Write a table of dict rows with a header row; missing values become empty cells"""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames, extrasaction='ignore', lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({k: format_value(row.get(k)) for k in fieldnames})


def read_records_csv(path):
    """Read a table written by `write_records_csv`; numeric cells become floats, empty cells None"""
    assert os.path.isfile(path), f'{path} not found'
    records = []
    with open(path, newline='') as f:
        for row in csv.DictReader(f):
            parsed = {}
            for key, val in row.items():
                if val == '':
                    parsed[key] = None
                    continue
                try:
                    parsed[key] = float(val)
                except ValueError:
                    parsed[key] = val
            records.append(parsed)
    return records


def _to_builtin(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f'Object of type {type(obj).__name__} is not JSON serializable')


def write_json(path, data):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w') as f:
        json.dump(data, f, indent=2, sort_keys=True, default=_to_builtin)
        f.write('\n')


def read_json(path):
    assert os.path.isfile(path), f'{path} not found'
    with open(path) as f:
        return json.load(f)


def describe_version():
    """git-describe style version string, falling back to the package version"""
    from romes_closure import __version__
    repo_dir = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    try:
        out = subprocess.run(['git', 'describe', '--tags', '--always', '--dirty'],
                             cwd=repo_dir, capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        logging.getLogger('romes_closure').debug('git describe unavailable')
    return f'v{__version__}'


def sample_parameters(box, count, seed):
    """Draw `count` parameter points uniformly from a box domain

    Args:
        box: (array (d, 2)) lower and upper bound per coordinate
        count: (int) number of points
        seed: (int) seed for the generator; distinct sets must use distinct seeds
    Returns:
        params: (array (count, d))
    """
    box = np.asarray(box, dtype=float)
    assert box.ndim == 2 and box.shape[1] == 2, f'box must have shape (d, 2), got {box.shape}'
    rng = np.random.default_rng(seed)
    return box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((count, box.shape[0]))
