import time
import logging
from dataclasses import dataclass, field

import tqdm
import numpy as np

from romes_closure.errors import ContractError, DegenerateDesignError, SolverError
from romes_closure.losses import metrics
from romes_closure.models.romes import FomCache, OfflineTrainer, offline_train, predict_online
from romes_closure.models.rom import solve_rom
from romes_closure.models.subspaces import error_generalized_coordinates
from romes_closure.problems.problem_base import evaluate_qoi
from romes_closure.utils import schedulers, utils


STATE_ERRORS = ('e_x', 'e_x_tilde_par', 'e_x_par', 'e_x_tilde_full', 'e_x_full')


@dataclass
class MetricTable:
    """Summary metrics, per-point errors and per-coordinate scatter data of a test set"""
    summary: dict
    points: list
    coordinates: dict
    excluded: int = 0
    labels: list = field(default_factory=list)

    @property
    def columns(self):
        return list(self.summary)


def _check_disjoint(problem, package, test_params):
    test = {tuple(problem.parameter(mu).values.tolist()) for mu in test_params}
    for name, params in package.training_params.items():
        overlap = test & {tuple(p.tolist()) for p in np.atleast_2d(params)}
        if overlap:
            raise ContractError(f'{len(overlap)} test points also belong to the `{name}` training set')


def _safe(fn, *args):
    try:
        return fn(*args)
    except (DegenerateDesignError, ContractError):
        return None


def _relative_qoi_error(reference, value):
    if reference == 0.0:
        return None
    return abs(reference - value) / abs(reference)


def error_metrics(problem, package, test_params, qoi_functionals=None, omegas=(0.8, 0.9, 0.95, 0.99),
                  fom_cache=None, n_samples=100, seed=0, progress=False):
    """Validation metrics of a trained package on held-out parameter points

    State errors are empirical means of relative Euclidean errors: the plain
    ROM (e_x), the ROM corrected with GP means in-plane (e_x_tilde_par) and
    in-plane plus out-of-plane (e_x_tilde_full), and the optimal corrections
    with the exact coordinates (e_x_par, e_x_full). Points whose FOM solve
    fails are excluded and counted.

    Returns:
        MetricTable
    """
    logger = logging.getLogger('ErrorMetrics')
    _check_disjoint(problem, package, test_params)
    functionals = problem.qoi_functionals() if qoi_functionals is None else list(qoi_functionals)
    cache = fom_cache or FomCache(problem, tol=package.settings.get('tol', 1e-10),
                                  max_iters=package.settings.get('max_iters', 50))
    sub = package.subspaces
    n = sub.n
    points, rhos, deltas, means, variances = [], [], [], [], []
    excluded = 0
    for k, mu in enumerate(tqdm.tqdm(test_params, disable=not progress, desc='error metrics')):
        try:
            fom = cache.solve(mu)
        except SolverError as e:
            fom = None
            logger.warning(f'FOM solve failed at test point {k}: {e}')
        if fom is None or not fom.converged:
            excluded += 1
            continue
        pred = predict_online(problem, package, mu, functionals, n_samples, seed + k)
        u = fom.values
        x_rom = pred.rom.reconstructed
        coords = error_generalized_coordinates(sub, u, x_rom)
        m = pred.state_model.coordinate_means
        row = {
            'e_x': metrics.relative_error(u, x_rom),
            'e_x_tilde_par': metrics.relative_error(u, x_rom + sub.Phi @ m[:n]),
            'e_x_par': metrics.relative_error(u, x_rom + sub.Phi @ coords.in_plane),
            'e_x_tilde_full': metrics.relative_error(u, x_rom + sub.Phi_bar @ m),
            'e_x_full': metrics.relative_error(u, x_rom + sub.Phi_bar @ coords.values),
            'fom_ops': fom.op_count,
            'rom_ops': pred.rom.op_count,
            'dual_ops': pred.duals.op_count,
            'fom_time': fom.wall_time,
            'rom_time': pred.rom_time,
            'dual_time': pred.dual_time,
        }
        for j, fn in enumerate(functionals):
            q_fom = evaluate_qoi(fn, u)
            closed_mean, _ = pred.qoi_model.closed_form[j]
            q_tilde = closed_mean if closed_mean is not None else float(pred.qoi_model.samples[:, j].mean())
            row[f'e_q_{fn.label}'] = _relative_qoi_error(q_fom, pred.qoi_model.rom_value[j])
            row[f'e_q_tilde_{fn.label}'] = _relative_qoi_error(q_fom, q_tilde)
        points.append(row)
        rhos.append(pred.indicators.values)
        deltas.append(coords.values)
        means.append(m)
        variances.append(pred.state_model.coordinate_variances)
    if excluded:
        logger.warning(f'{excluded} of {len(test_params)} test points excluded after FOM failures')
    if not points:
        raise SolverError('every FOM solve of the test set failed')

    coordinates = {name: np.array(vals).reshape(-1, sub.n_bar)
                   for name, vals in (('rho', rhos), ('delta', deltas), ('mean', means), ('variance', variances))}
    summary = {}
    delta, mean, var = coordinates['delta'], coordinates['mean'], coordinates['variance']
    for i in range(sub.n_bar):
        summary[f'fvu_{i + 1}'] = _safe(metrics.fvu, delta[:, i], mean[:, i])
        for om in omegas:
            summary[f'nu_{om:.2f}_{i + 1}'] = metrics.coverage_frequency(delta[:, i], mean[:, i], var[:, i], om)
        summary[f'ks_{i + 1}'] = metrics.ks_statistic((delta[:, i] - mean[:, i]) / np.sqrt(var[:, i]))
    for key in points[0]:
        vals = [p[key] for p in points if p[key] is not None]
        summary[key] = float(np.mean(vals)) if vals else None
    summary['n_test'] = len(points)
    summary['n_excluded'] = excluded
    return MetricTable(summary, points, coordinates, excluded, [fn.label for fn in functionals])


def rom_only_errors(problem, sub, test_params, fom_cache, projection='galerkin', tol=1e-10, max_iters=50):
    """Mean relative ROM error and operation counts without any error model"""
    errors, rom_ops, fom_ops, rom_time, fom_time = [], [], [], [], []
    for mu in test_params:
        fom = fom_cache.solve(mu)
        if not fom.converged:
            continue
        start = time.perf_counter()
        rom = solve_rom(problem, sub, mu, projection=projection, tol=tol, max_iters=max_iters)
        rom_time.append(time.perf_counter() - start)
        errors.append(metrics.relative_error(fom.values, rom.reconstructed))
        rom_ops.append(rom.op_count)
        fom_ops.append(fom.op_count)
        fom_time.append(fom.wall_time)
    return {'e_x': float(np.mean(errors)), 'rom_ops': float(np.mean(rom_ops)),
            'fom_ops': float(np.mean(fom_ops)), 'rom_time': float(np.mean(rom_time)),
            'fom_time': float(np.mean(fom_time))}


def _pareto_grid(config):
    grid = []
    pareto = config.pareto
    for n in pareto['n_values']:
        for method in pareto['methods']:
            if method == 'rom_only':
                grid.append((method, n, None, 0))
                continue
            perps = [0] if method == 'romes_inplane' else pareto['n_perp_values']
            for n_p in schedulers.offsets(n, pareto['n_p_offsets']):
                for n_perp in perps:
                    grid.append((method, n, n_p, n_perp))
    return grid


def pareto_study(problem, config, test_params=None, fom_cache=None, progress=False):
    """Error/cost trade-off of ROM-only and ROMES-corrected configurations

    Cost is the operation count of the online stage relative to the FOM
    solve; mean wall time relative to the FOM solve is reported alongside.

    Returns:
        (points, fronts): lists of record dicts; fronts are non-dominated per method
    """
    logger = logging.getLogger('ParetoStudy')
    cache = fom_cache or FomCache(problem, tol=config.tol, max_iters=config.max_iters)
    if test_params is None:
        test_params = [problem.parameter(p) for p in
                       utils.sample_parameters(problem.parameter_box, config.online_size, config.seeds['online'])]
    grid = _pareto_grid(config)
    points = []
    for method, n, n_p, n_perp in tqdm.tqdm(grid, disable=not progress, desc='pareto grid'):
        cfg = config.replace(n=n, n_p=n_p if n_p is not None else config.n_p, n_perp=n_perp)
        record = {'method': method, 'n': n, 'n_p': n_p, 'n_perp': n_perp}
        if method == 'rom_only':
            trainer = OfflineTrainer(problem, cfg, fom_cache=cache)
            box = problem.parameter_box
            pod_params = [problem.parameter(p) for p in
                          utils.sample_parameters(box, cfg.pod_size, cfg.seeds['pod'])]
            sub = trainer.build_subspaces(pod_params, [])
            res = rom_only_errors(problem, sub, test_params, cache, cfg.projection, cfg.tol, cfg.max_iters)
            record.update(relative_error=res['e_x'], relative_cost=res['rom_ops'] / res['fom_ops'],
                          relative_time=res['rom_time'] / res['fom_time'] if res['fom_time'] else None)
        else:
            package = offline_train(problem, cfg, fom_cache=cache)
            table = error_metrics(problem, package, test_params, qoi_functionals=[], fom_cache=cache)
            s = table.summary
            err = s['e_x_tilde_par'] if method == 'romes_inplane' else s['e_x_tilde_full']
            record.update(relative_error=err, relative_cost=(s['rom_ops'] + s['dual_ops']) / s['fom_ops'],
                          relative_time=(s['rom_time'] + s['dual_time']) / s['fom_time'] if s['fom_time'] else None)
        logger.info(f'{method} n={n} n_p={n_p} n_perp={n_perp}: error {record["relative_error"]:.3e}, '
                    f'cost {record["relative_cost"]:.3e}')
        points.append(record)
    fronts = []
    for method in config.pareto['methods']:
        rows = [p for p in points if p['method'] == method]
        idx = metrics.pareto_front([(p['relative_error'], p['relative_cost']) for p in rows])
        fronts.extend({**rows[i], 'front': method} for i in idx)
    return points, fronts
