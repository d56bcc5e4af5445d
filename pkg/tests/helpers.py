import numpy as np

from romes_closure.utils import ExperimentConfig


def small_config(**changes):
    """Desk-scale config that trains quickly on the m=6 grids"""
    cfg = ExperimentConfig(grid_m=6, n=2, n_perp=1, n_p=6, folds=3, grid_points=3,
                           pod_size=10, dual_size=5, romes_size=15, online_size=6, n_samples=50)
    return cfg.replace(**changes)


def random_spd(rng, N):
    B = rng.standard_normal((N, N))
    T = B @ B.T + N * np.eye(N)
    return 0.5 * (T + T.T)


def snapshot_matrix(problem, count, seed):
    from romes_closure.problems import solve_fom
    return np.stack([solve_fom(problem, mu).values for mu in problem.sample_parameters(count, seed)], axis=1)
