import os
import logging

import numpy as np

from romes_closure.errors import RomesError, StageError
from romes_closure.losses.metrics import interval_half_width
from romes_closure.models.romes import FomCache, offline_train
from romes_closure.problems.benchmarks import make_benchmark
from romes_closure.runners.studies import error_metrics, pareto_study
from romes_closure.utils import utils


PARETO_FIELDS = ['method', 'n', 'n_p', 'n_perp', 'relative_error', 'relative_cost', 'relative_time']
SCATTER_FIELDS = ['rho', 'delta', 'mean', 'lo99', 'hi99']


class RunnerROMES:
    def __init__(self, config, output_dir=None, quiet=False):
        """
        Runs the offline and online stages for one experiment config and
        writes every artifact below `output_dir`

        Args:
            config: (ExperimentConfig) validated experiment config
            output_dir: (str, optional) overrides config.output_dir
            quiet: (bool, optional) log warnings only and hide progress bars
        """
        self.config = config
        self.output_dir = output_dir or config.output_dir
        self.quiet = quiet
        level = logging.WARNING if quiet else logging.INFO
        logging.basicConfig(level=level)
        # component loggers inherit the root level
        logging.getLogger().setLevel(level)
        self.logger = logging.getLogger('RunnerROMES')
        self.problem = make_benchmark(config.benchmark, config.grid_m)
        self.fom_cache = FomCache(self.problem, tol=config.tol, max_iters=config.max_iters)
        self.files = []
        os.makedirs(self.output_dir, exist_ok=True)

    def _path(self, name, fmt):
        self.files.append({'path': name, 'format': fmt})
        return os.path.join(self.output_dir, name)

    def _stage(self, name, fn, *args, **kwargs):
        self.logger.info(f'stage `{name}`')
        try:
            return fn(*args, **kwargs)
        except StageError:
            raise
        except RomesError as e:
            raise StageError(name, e) from e

    def test_parameters(self):
        cfg = self.config
        params = utils.sample_parameters(self.problem.parameter_box, cfg.online_size, cfg.seeds['online'])
        return [self.problem.parameter(p) for p in params]

    def write_scatter(self, table):
        """Per-coordinate indicator/error pairs with GP mean and 99% band"""
        coords = table.coordinates
        for i in range(coords['rho'].shape[1]):
            half = interval_half_width(np.sqrt(coords['variance'][:, i]), 0.99)
            mean = coords['mean'][:, i]
            rows = [{'rho': r, 'delta': d, 'mean': m, 'lo99': m - h, 'hi99': m + h}
                    for r, d, m, h in zip(coords['rho'][:, i], coords['delta'][:, i], mean, half)]
            utils.write_records_csv(self._path(f'scatter_{i + 1}.csv', 'table_csv'), rows, SCATTER_FIELDS)

    def write_summary(self, name, results):
        summary = {
            'version': utils.describe_version(),
            'benchmark': self.config.benchmark,
            'config': self.config.to_dict(),
            'results': results,
        }
        path = self._path(name, 'json')
        summary['files'] = list(self.files)
        utils.write_json(path, summary)
        self.logger.info(f'wrote {len(self.files)} files to {self.output_dir}')
        return summary

    def run(self):
        """Offline training, online validation and all artifacts of one experiment"""
        cfg = self.config
        self.files = []
        package = self._stage('offline', offline_train, self.problem, cfg,
                              progress=not self.quiet, fom_cache=self.fom_cache)
        for fn in package.save(os.path.join(self.output_dir, 'package')):
            fmt = 'json' if fn.endswith('.json') else 'matrix_csv'
            self.files.append({'path': os.path.join('package', fn), 'format': fmt})
        table = self._stage('online', error_metrics, self.problem, package, self.test_parameters(),
                            omegas=cfg.omegas, fom_cache=self.fom_cache, n_samples=cfg.n_samples,
                            seed=cfg.seeds['online'], progress=not self.quiet)
        self.write_scatter(table)
        columns = table.columns
        utils.write_records_csv(self._path('metrics.csv', 'table_csv'), [table.summary], columns)
        utils.write_records_csv(self._path('points.csv', 'table_csv'), table.points, list(table.points[0]))
        deterministic = {k: v for k, v in table.summary.items() if not k.endswith('_time')}
        return self.write_summary('summary.json', deterministic)

    def pareto(self):
        """Pareto study over the configured grid; writes all points and the fronts"""
        self.files = []
        points, fronts = self._stage('pareto', pareto_study, self.problem, self.config,
                                     test_params=self.test_parameters(), fom_cache=self.fom_cache,
                                     progress=not self.quiet)
        utils.write_records_csv(self._path('pareto_points.csv', 'table_csv'), points, PARETO_FIELDS)
        utils.write_records_csv(self._path('pareto_fronts.csv', 'table_csv'), fronts, PARETO_FIELDS + ['front'])
        results = [{k: v for k, v in p.items() if k != 'relative_time'} for p in points]
        return self.write_summary('pareto_summary.json', {'points': results})
