import os
import time
import logging
from dataclasses import dataclass, field

import tqdm
import numpy as np

from romes_closure.errors import ContractError, RomesError, StageError
from romes_closure.losses.losses import LossKind
from romes_closure.models.duals import DualBasis, build_dual_reduced_basis, solve_dual_rom, compute_indicators
from romes_closure.models.gpr import GpErrorModel, cross_validate, hyperparameter_grid
from romes_closure.models.rom import solve_rom
from romes_closure.models.subspaces import SubspaceSet, build_metric, build_subspaces, error_generalized_coordinates
from romes_closure.problems.problem_base import evaluate_qoi
from romes_closure.problems.solvers import solve_fom
from romes_closure.utils import utils


TRAINING_SETS = ('pod', 'dual', 'romes')
VARIANCE_WEIGHTINGS = ('squared', 'as_written')


class FomCache:
    """Full-order solutions keyed by parameter point, shared between studies"""
    def __init__(self, problem, tol=1e-10, max_iters=50):
        self.problem = problem
        self.tol = tol
        self.max_iters = max_iters
        self._states = {}

    def __len__(self):
        return len(self._states)

    def solve(self, mu):
        mu = self.problem.parameter(mu)
        key = tuple(mu.values.tolist())
        if key not in self._states:
            start = time.perf_counter()
            state = solve_fom(self.problem, mu, tol=self.tol, max_iters=self.max_iters)
            state.wall_time = time.perf_counter() - start
            self._states[key] = state
        return self._states[key]


@dataclass
class StatisticalStateModel:
    """Corrected state x~ = x_ROM + Phi_bar delta~ with independent Gaussian coordinates"""
    rom_state: np.ndarray
    correction_mean: np.ndarray
    entry_variance: np.ndarray
    coordinate_means: np.ndarray = None
    coordinate_variances: np.ndarray = None

    @property
    def mean(self):
        return self.rom_state + self.correction_mean


@dataclass
class QoiModelSample:
    """Monte-Carlo draws of the corrected QoIs, shape (n_samples, s)"""
    samples: np.ndarray
    rom_value: np.ndarray
    labels: list = field(default_factory=list)
    closed_form: list = field(default_factory=list)

    @property
    def error_samples(self):
        return self.samples - self.rom_value[None, :]

    @property
    def n_samples(self):
        return self.samples.shape[0]


@dataclass
class OnlinePrediction:
    rom: object
    duals: object
    indicators: object
    state_model: StatisticalStateModel
    qoi_model: QoiModelSample = None
    op_count: float = 0.0
    rom_time: float = 0.0
    dual_time: float = 0.0


def build_state_model(sub, rom_state, means, variances, weighting='squared'):
    """State model from per-coordinate Gaussian moments

    `squared` weights the variances by Phi_bar_ij^2 (variance of a linear
    map of independent Gaussians); `as_written` by Phi_bar_ij.
    """
    if weighting not in VARIANCE_WEIGHTINGS:
        raise ContractError(f'unknown variance weighting `{weighting}`')
    means = np.asarray(means, dtype=float)
    variances = np.asarray(variances, dtype=float)
    assert means.shape == (sub.n_bar,), f'expected {sub.n_bar} coordinate means, got {means.shape}'
    weights = sub.Phi_bar ** 2 if weighting == 'squared' else sub.Phi_bar
    return StatisticalStateModel(np.asarray(rom_state, dtype=float), sub.Phi_bar @ means,
                                 weights @ variances, means, variances)


def qoi_closed_form(sub, state_model, functional):
    """(mean, variance) of s(x~) for linear functionals, (mean, None) for quadratic ones"""
    v = state_model.coordinate_variances
    if functional.kind == 'linear':
        proj = sub.Phi_bar.T @ functional.weights
        return float(functional.weights @ state_model.mean), float(np.sum(proj ** 2 * v))
    if functional.kind == 'quadratic':
        mx = state_model.mean
        M_phi = functional.matrix @ sub.Phi_bar
        trace_term = float(np.sum(v * np.einsum('ij,ij->j', sub.Phi_bar, M_phi)))
        return float(mx @ functional.matrix @ mx) + trace_term, None
    return None, None


def sample_qoi_model(sub, state_model, functionals, n_samples, seed):
    """Propagate independent Gaussian draws of the error coordinates through each functional"""
    if n_samples < 1:
        raise ContractError(f'n_samples must be >= 1, got {n_samples}')
    rng = np.random.default_rng(seed)
    m, v = state_model.coordinate_means, state_model.coordinate_variances
    draws = m[None, :] + np.sqrt(v)[None, :] * rng.standard_normal((n_samples, m.size))
    states = state_model.rom_state[None, :] + draws @ sub.Phi_bar.T
    samples = np.zeros((n_samples, len(functionals)))
    for k, fn in enumerate(functionals):
        if fn.kind == 'linear':
            samples[:, k] = states @ fn.weights
        elif fn.kind == 'quadratic':
            samples[:, k] = np.einsum('ij,ij->i', states @ fn.matrix, states)
        else:
            samples[:, k] = [evaluate_qoi(fn, x) for x in states]
    rom_value = np.array([evaluate_qoi(fn, state_model.rom_state) for fn in functionals])
    return QoiModelSample(samples, rom_value, [fn.label for fn in functionals],
                          [qoi_closed_form(sub, state_model, fn) for fn in functionals])


class OfflinePackage:
    """Everything the online stage needs: bases, dual bases and one GP per error coordinate

    Args:
        subspaces: (SubspaceSet)
        dual_basis: (DualBasis)
        gp_models: (list) n_bar GpErrorModel instances
        settings: (dict) projection, dual_projection, variance_weighting, loss, ...
        provenance: (dict) training-set sizes and seeds, version string
        training_params: (dict) name -> (k, d) parameter arrays of D_POD, D_dual, D_ROMES
        training_data: (dict, optional) `rho` and `delta` arrays (n_train, n_bar)
    """
    def __init__(self, subspaces, dual_basis, gp_models, settings=None, provenance=None,
                 training_params=None, training_data=None):
        if len(gp_models) != subspaces.n_bar:
            raise ContractError(f'package needs {subspaces.n_bar} GP models, got {len(gp_models)}')
        self.subspaces = subspaces
        self.dual_basis = dual_basis
        self.gp_models = list(gp_models)
        self.settings = {'projection': 'galerkin', 'dual_projection': 'galerkin',
                         'variance_weighting': 'squared', **(settings or {})}
        self.provenance = dict(provenance or {})
        self.training_params = {k: np.asarray(v, dtype=float) for k, v in (training_params or {}).items()}
        self.training_data = training_data or {}

    @property
    def n_bar(self):
        return self.subspaces.n_bar

    def save(self, directory):
        """Write the package as CSV matrices plus a JSON manifest; returns the file names"""
        os.makedirs(directory, exist_ok=True)
        files = self.subspaces.save(directory)
        files += self.dual_basis.save(directory)
        for name, params in sorted(self.training_params.items()):
            fn = f'params_{name}.csv'
            utils.write_matrix_csv(os.path.join(directory, fn), params)
            files.append(fn)
        for name in ('rho', 'delta'):
            if name in self.training_data:
                fn = f'training_{name}.csv'
                utils.write_matrix_csv(os.path.join(directory, fn), self.training_data[name])
                files.append(fn)
        utils.write_json(os.path.join(directory, 'gp_models.json'), [m.to_dict() for m in self.gp_models])
        files.append('gp_models.json')
        manifest = {
            'N': self.subspaces.N,
            'n': self.subspaces.n,
            'n_perp': self.subspaces.n_perp,
            'metric': self.subspaces.metric.kind,
            'dual_mode': self.dual_basis.mode,
            'dual_full': self.dual_basis.full,
            'dual_count': len(self.dual_basis.bases),
            'settings': self.settings,
            'provenance': self.provenance,
            'training_params': sorted(self.training_params),
            'training_data': sorted(self.training_data),
        }
        utils.write_json(os.path.join(directory, 'manifest.json'), manifest)
        files.append('manifest.json')
        return files

    @classmethod
    def load(cls, directory):
        manifest = utils.read_json(os.path.join(directory, 'manifest.json'))
        subspaces = SubspaceSet.load(directory, metric_kind=manifest['metric'])
        dual_basis = DualBasis.load(directory, manifest['dual_mode'], manifest['dual_count'],
                                    full=manifest['dual_full'], N=manifest['N'])
        gp_models = [GpErrorModel.from_dict(d) for d in utils.read_json(os.path.join(directory, 'gp_models.json'))]
        params = {name: utils.read_matrix_csv(os.path.join(directory, f'params_{name}.csv'))
                  for name in manifest['training_params']}
        data = {name: utils.read_matrix_csv(os.path.join(directory, f'training_{name}.csv'))
                for name in manifest['training_data']}
        return cls(subspaces, dual_basis, gp_models, manifest['settings'], manifest['provenance'], params, data)


class OfflineTrainer:
    """Offline stage: POD basis, out-of-plane basis, dual bases, training pairs, GP fits

    Args:
        problem: (FomProblem) full-order problem
        config: (ExperimentConfig) sizes, seeds, dimensions and method choices
        progress: (bool, optional) show tqdm progress bars
        fom_cache: (FomCache, optional) shared full-order solutions
    """
    def __init__(self, problem, config, progress=False, fom_cache=None):
        self.problem = problem
        self.config = config
        self.progress = progress
        self.fom_cache = fom_cache or FomCache(problem, tol=config.tol, max_iters=config.max_iters)
        self.logger = logging.getLogger('OfflineTrainer')
        self.excluded = 0

    def _stage(self, step, name, fn, *args):
        try:
            return fn(*args)
        except RomesError as e:
            raise StageError(f'offline:{name}', e, step=step) from e

    def _fom_states(self, params, desc):
        states, kept = [], []
        for mu in tqdm.tqdm(params, disable=not self.progress, desc=desc):
            state = self.fom_cache.solve(mu)
            if not state.converged:
                self.excluded += 1
                self.logger.warning(f'FOM did not converge at mu={mu.values.tolist()}, point dropped')
                continue
            states.append(state)
            kept.append(mu)
        return states, kept

    def _rom(self, sub, mu):
        cfg = self.config
        return solve_rom(self.problem, sub, mu, projection=cfg.projection, tol=cfg.tol, max_iters=cfg.max_iters)

    def build_subspaces(self, pod_params, romes_params):
        cfg = self.config
        states, _ = self._fom_states(pod_params, 'POD snapshots')
        snapshots = np.stack([s.values for s in states], axis=1)
        metric = build_metric(self.problem, cfg.metric)
        if cfg.out_of_plane_source == 'discarded_modes' or cfg.n_perp == 0:
            return build_subspaces(snapshots, metric, cfg.n, cfg.n_perp)
        # out-of-plane modes from the projection errors of ROM state errors over D_ROMES
        trial = build_subspaces(snapshots, metric, cfg.n, 0)
        fom_states, kept = self._fom_states(romes_params, 'ROM errors')
        errors = np.stack([f.values - self._rom(trial, mu).reconstructed for f, mu in zip(fom_states, kept)], axis=1)
        return build_subspaces(snapshots, metric, cfg.n, cfg.n_perp, error_snapshots=errors)

    def build_duals(self, sub, dual_params):
        cfg = self.config
        return build_dual_reduced_basis(self.problem, sub, dual_params, mode=cfg.dual_mode, n_p=cfg.n_p,
                                        projection=cfg.projection, tol=cfg.tol, max_iters=cfg.max_iters,
                                        progress=self.progress)

    def training_pairs(self, sub, dual_basis, romes_params):
        """(rho_i(mu), delta_i(mu)) for every mu of D_ROMES"""
        rhos, deltas = [], []
        states, kept = self._fom_states(romes_params, 'ROMES training data')
        for state, mu in zip(states, kept):
            rom = self._rom(sub, mu)
            duals = solve_dual_rom(self.problem, sub, dual_basis, rom, mu, projection=self.config.dual_projection)
            rhos.append(compute_indicators(self.problem, duals, rom, mu).values)
            deltas.append(error_generalized_coordinates(sub, state.values, rom.reconstructed).values)
        return np.array(rhos).reshape(-1, sub.n_bar), np.array(deltas).reshape(-1, sub.n_bar)

    def fit_models(self, rhos, deltas):
        cfg = self.config
        kind = LossKind.parse(cfg.loss, omega=cfg.omega)
        models = []
        for i in tqdm.tqdm(range(rhos.shape[1]), disable=not self.progress, desc='GP fits'):
            grid = hyperparameter_grid(deltas[:, i], cfg.grid_points)
            models.append(cross_validate(rhos[:, i], deltas[:, i], grid, K=cfg.folds, kind=kind,
                                         seed=cfg.seeds['cv'] + i))
            self.logger.info(f'coordinate {i}: {models[-1]}')
        return models

    def run(self):
        cfg = self.config
        box = self.problem.parameter_box
        params = {name: utils.sample_parameters(box, getattr(cfg, f'{name}_size'), cfg.seeds[name])
                  for name in TRAINING_SETS}
        points = {name: [self.problem.parameter(p) for p in arr] for name, arr in params.items()}
        self.logger.info(f'offline stage for {self.problem}: n={cfg.n}, n_perp={cfg.n_perp}, n_p={cfg.n_p}')
        sub = self._stage(1, 'pod', self.build_subspaces, points['pod'], points['romes'])
        dual_basis = self._stage(3, 'dual_basis', self.build_duals, sub, points['dual'])
        rhos, deltas = self._stage(4, 'training_data', self.training_pairs, sub, dual_basis, points['romes'])
        models = self._stage(5, 'gp_fit', self.fit_models, rhos, deltas)
        provenance = {name: {'size': getattr(cfg, f'{name}_size'), 'seed': cfg.seeds[name]} for name in TRAINING_SETS}
        provenance['excluded_fom'] = self.excluded
        provenance['version'] = utils.describe_version()
        settings = {'projection': cfg.projection, 'dual_projection': cfg.dual_projection,
                    'variance_weighting': cfg.variance_weighting, 'loss': cfg.loss, 'omega': cfg.omega,
                    'folds': cfg.folds, 'grid_points': cfg.grid_points, 'n_p': cfg.n_p,
                    'tol': cfg.tol, 'max_iters': cfg.max_iters}
        return OfflinePackage(sub, dual_basis, models, settings, provenance, params,
                              {'rho': rhos, 'delta': deltas})


def offline_train(problem, config, progress=False, fom_cache=None):
    return OfflineTrainer(problem, config, progress=progress, fom_cache=fom_cache).run()


def predict_online(problem, package, mu, qoi_functionals=None, n_samples=100, seed=0):
    """Online stage at one parameter point, keeping every intermediate result"""
    settings = package.settings
    sub = package.subspaces
    mu = problem.parameter(mu)
    start = time.perf_counter()
    rom = solve_rom(problem, sub, mu, projection=settings['projection'],
                    tol=settings.get('tol', 1e-10), max_iters=settings.get('max_iters', 50))
    rom_time = time.perf_counter() - start
    start = time.perf_counter()
    duals = solve_dual_rom(problem, sub, package.dual_basis, rom, mu, projection=settings['dual_projection'])
    indicators = compute_indicators(problem, duals, rom, mu)
    dual_time = time.perf_counter() - start
    moments = [model.posterior(rho) for model, rho in zip(package.gp_models, indicators.values)]
    means = np.array([m for m, _ in moments])
    variances = np.array([v for _, v in moments])
    state_model = build_state_model(sub, rom.reconstructed, means, variances, settings['variance_weighting'])
    qoi_model = None
    if qoi_functionals:
        qoi_model = sample_qoi_model(sub, state_model, qoi_functionals, n_samples, seed)
    return OnlinePrediction(rom, duals, indicators, state_model, qoi_model,
                            rom.op_count + duals.op_count, rom_time, dual_time)


def online_predict(problem, package, mu, qoi_functionals=None, n_samples=100, seed=0):
    """Statistical state model and QoI samples at `mu`

    Returns:
        (StatisticalStateModel, QoiModelSample or None)
    """
    pred = predict_online(problem, package, mu, qoi_functionals, n_samples, seed)
    return pred.state_model, pred.qoi_model
