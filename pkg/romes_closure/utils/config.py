import os
import json
import dataclasses
from dataclasses import dataclass, field

import yaml

from romes_closure.errors import ConfigError
from romes_closure.models.duals import DUAL_MODES
from romes_closure.models.rom import PROJECTIONS
from romes_closure.models.romes import VARIANCE_WEIGHTINGS


SCHEMA_VERSION = 1
REQUIRED_FIELDS = ('schema_version', 'benchmark')

BENCHMARKS = ('linear_diffusion', 'nonlinear_reaction')
METRICS = ('identity', 'discrete_h1')
LOSSES = ('log_likelihood', 'interval', 'combined', 'ks')
OUT_OF_PLANE_SOURCES = ('discarded_modes', 'projection_error')
PARETO_METHODS = ('rom_only', 'romes_inplane', 'romes_full')


def _default_seeds():
    return {'pod': 11, 'dual': 23, 'romes': 37, 'online': 41, 'cv': 53}


def _default_pareto():
    return {'n_values': [2, 3, 4, 5, 6],
            'n_p_offsets': [4, 10],
            'n_perp_values': [2],
            'methods': list(PARETO_METHODS)}


@dataclass
class ExperimentConfig:
    """Resolved experiment configuration

    Set sizes are desk-scaled versions of the defaults used for the diffusion
    test case (|D_POD| = 500, |D_dual| = 800, |D_online| = 1500).
    """
    schema_version: int = SCHEMA_VERSION
    benchmark: str = 'linear_diffusion'
    grid_m: int = 16
    metric: str = 'identity'
    n: int = 2
    n_perp: int = 0
    n_p: object = 10
    dual_mode: str = 'shared'
    projection: str = 'galerkin'
    dual_projection: str = 'galerkin'
    loss: str = 'interval'
    omega: float = 0.8
    omegas: list = field(default_factory=lambda: [0.8, 0.9, 0.95, 0.99])
    folds: int = 10
    grid_points: int = 12
    pod_size: int = 50
    dual_size: int = 40
    romes_size: int = 200
    online_size: int = 100
    seeds: dict = field(default_factory=_default_seeds)
    tol: float = 1e-10
    max_iters: int = 50
    variance_weighting: str = 'squared'
    out_of_plane_source: str = 'discarded_modes'
    n_samples: int = 100
    pareto: dict = field(default_factory=_default_pareto)
    output_dir: str = './outputs'

    @property
    def full_dual_basis(self):
        return isinstance(self.n_p, str) and self.n_p == 'full'

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def with_seed_offset(self, offset):
        seeds = {k: int(v) + int(offset) for k, v in self.seeds.items()}
        return self.replace(seeds=seeds)

    def to_dict(self):
        return dataclasses.asdict(self)


def _check_choice(name, value, choices):
    if value not in choices:
        raise ConfigError(f'`{value}` is not one of {list(choices)}', field=name)


def _check_int(name, value, minimum):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f'expected an integer, got `{value}`', field=name)
    if value < minimum:
        raise ConfigError(f'must be >= {minimum}, got {value}', field=name)


def _check_omega(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not 0.0 < value < 1.0:
        raise ConfigError(f'omega must lie in (0, 1), got `{value}`', field=name)


def validate_config(cfg):
    if cfg.schema_version != SCHEMA_VERSION:
        raise ConfigError(f'unsupported schema version {cfg.schema_version}, '
                          f'expected {SCHEMA_VERSION}', field='schema_version')
    _check_choice('benchmark', cfg.benchmark, BENCHMARKS)
    _check_choice('metric', cfg.metric, METRICS)
    _check_choice('dual_mode', cfg.dual_mode, DUAL_MODES)
    _check_choice('projection', cfg.projection, PROJECTIONS)
    _check_choice('dual_projection', cfg.dual_projection, PROJECTIONS)
    _check_choice('loss', cfg.loss, LOSSES)
    _check_choice('variance_weighting', cfg.variance_weighting, VARIANCE_WEIGHTINGS)
    _check_choice('out_of_plane_source', cfg.out_of_plane_source, OUT_OF_PLANE_SOURCES)
    for name in ('grid_m', 'n', 'folds', 'grid_points', 'pod_size', 'dual_size',
                 'romes_size', 'online_size', 'max_iters', 'n_samples'):
        _check_int(name, getattr(cfg, name), 1)
    _check_int('n_perp', cfg.n_perp, 0)
    if not cfg.full_dual_basis:
        _check_int('n_p', cfg.n_p, 1)
    if cfg.folds < 2:
        raise ConfigError(f'cross validation needs at least 2 folds, got {cfg.folds}', field='folds')
    if cfg.romes_size < cfg.folds:
        raise ConfigError(f'romes_size ({cfg.romes_size}) must be >= folds ({cfg.folds})',
                          field='romes_size')
    _check_omega('omega', cfg.omega)
    if not cfg.omegas:
        raise ConfigError('at least one validation omega is required', field='omegas')
    for om in cfg.omegas:
        _check_omega('omegas', om)
    if not isinstance(cfg.tol, (int, float)) or cfg.tol <= 0:
        raise ConfigError(f'tolerance must be positive, got `{cfg.tol}`', field='tol')
    missing = set(_default_seeds()) - set(cfg.seeds)
    if missing:
        raise ConfigError(f'missing seeds {sorted(missing)}', field='seeds')
    pareto = cfg.pareto
    for key in _default_pareto():
        if key not in pareto:
            raise ConfigError(f'missing pareto entry `{key}`', field=f'pareto.{key}')
    for method in pareto['methods']:
        _check_choice('pareto.methods', method, PARETO_METHODS)
    return cfg


def config_from_dict(data):
    """Build and validate an ExperimentConfig from a parsed mapping"""
    if not isinstance(data, dict):
        raise ConfigError('config root must be a mapping')
    for name in REQUIRED_FIELDS:
        if name not in data:
            raise ConfigError('missing required field', field=name)
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for name in data:
        if name not in known:
            raise ConfigError('unknown field', field=name)
    data = dict(data)
    if 'seeds' in data:
        data['seeds'] = {**_default_seeds(), **data['seeds']}
    if 'pareto' in data:
        data['pareto'] = {**_default_pareto(), **data['pareto']}
    return validate_config(ExperimentConfig(**data))


def load_config(path):
    """Read an experiment config from JSON (.json) or YAML (.yaml/.yml)"""
    if not os.path.isfile(path):
        raise ConfigError(f'config file `{path}` not found')
    with open(path) as f:
        text = f.read()
    if path.endswith(('.yaml', '.yml')):
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            mark = getattr(e, 'problem_mark', None)
            where = f' at line {mark.line + 1}' if mark is not None else ''
            raise ConfigError(f'could not parse `{path}`{where}: {e}') from e
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f'could not parse `{path}` at line {e.lineno}: {e.msg}') from e
    return config_from_dict(data)
