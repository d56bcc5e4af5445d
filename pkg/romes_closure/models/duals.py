import os
import logging
from dataclasses import dataclass, field

import tqdm
import numpy as np
import scipy.linalg

from romes_closure.errors import ContractError, SolverError
from romes_closure.models.rom import as_state, solve_rom
from romes_closure.models.subspaces import pod_euclidean
from romes_closure.problems.solvers import factorization_ops, substitution_ops
from romes_closure.utils import utils


DUAL_MODES = ('shared', 'unique')


@dataclass
class DualBasis:
    """Reduced dual trial bases: one shared basis or one per error coordinate

    `full` marks the identity basis (n_p = N), for which the reduced dual
    solve coincides with the full dual solve.
    """
    mode: str
    bases: list
    full: bool = False

    def __post_init__(self):
        if self.mode not in DUAL_MODES:
            raise ContractError(f'unknown dual mode `{self.mode}`, choose from {list(DUAL_MODES)}')
        if not self.bases:
            raise ContractError('dual basis needs at least one matrix')
        if self.mode == 'shared' and len(self.bases) != 1:
            raise ContractError(f'shared dual basis holds one matrix, got {len(self.bases)}')
        self.bases = [np.asarray(b, dtype=float) for b in self.bases]
        if self.full:
            return
        for i, basis in enumerate(self.bases):
            if basis.ndim != 2 or basis.shape[1] < 1:
                raise ContractError(f'dual basis {i} must have at least one column, got shape {basis.shape}')
            defect = np.abs(basis.T @ basis - np.eye(basis.shape[1])).max()
            if defect > 1e-10:
                raise ContractError(f'dual basis {i} is not orthonormal (defect {defect:.2e})')

    @classmethod
    def full_basis(cls, N, mode='shared', n_bar=1):
        count = 1 if mode == 'shared' else n_bar
        return cls(mode, [np.eye(N)] * count, full=True)

    @property
    def dimensions(self):
        return [b.shape[1] for b in self.bases]

    def basis_for(self, i):
        return self.bases[0] if self.mode == 'shared' else self.bases[i]

    def save(self, directory):
        files = []
        if self.full:
            return files
        for i, basis in enumerate(self.bases):
            fn = f'dual_basis_{i}.csv'
            utils.write_matrix_csv(os.path.join(directory, fn), basis)
            files.append(fn)
        return files

    @classmethod
    def load(cls, directory, mode, count, full=False, N=None):
        if full:
            return cls.full_basis(N, mode=mode, n_bar=count)
        bases = [utils.read_matrix_csv(os.path.join(directory, f'dual_basis_{i}.csv')) for i in range(count)]
        return cls(mode, bases)


@dataclass
class IndicatorVector:
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()

    def __len__(self):
        return self.values.size

    def __getitem__(self, idx):
        return self.values[idx]


@dataclass
class DualRomSolution:
    """Approximate duals y_hat_i as columns of an (N, n_bar) matrix"""
    duals: np.ndarray
    factorizations: int = 0
    op_count: float = 0.0
    reduced_coords: list = field(default_factory=list)

    def __len__(self):
        return self.duals.shape[1]

    def __getitem__(self, i):
        return self.duals[:, i]


def _lu_factor(matrix, what):
    lu, piv = scipy.linalg.lu_factor(matrix, check_finite=True)
    if np.any(np.diag(lu) == 0.0) or not np.all(np.isfinite(lu)):
        raise SolverError(f'{what} is singular')
    return lu, piv


def solve_dual_fom_all(problem, sub, rom_state, mu):
    """All n_bar full dual solutions J^T Y = -P_bar^T, one factorization of J^T"""
    mu = problem.parameter(mu)
    J = problem.jacobian(as_state(rom_state), mu)
    lu = _lu_factor(J, 'Jacobian transpose')
    return scipy.linalg.lu_solve(lu, -sub.dual_rhs(), trans=1)


def solve_dual_fom(problem, sub, rom_state, mu, i):
    """Full dual y_i solving [dr/dw(x_ROM; mu)]^T y_i = -P_bar^T e_i (i is 0-based)"""
    if not 0 <= i < sub.n_bar:
        raise ContractError(f'dual index {i} outside [0, {sub.n_bar})')
    mu = problem.parameter(mu)
    J = problem.jacobian(as_state(rom_state), mu)
    lu = _lu_factor(J, 'Jacobian transpose')
    return scipy.linalg.lu_solve(lu, -sub.dual_rhs()[:, i], trans=1)


def build_dual_reduced_basis(problem, sub, training_params, mode='shared', n_p=10,
                             projection='galerkin', tol=1e-10, max_iters=50,
                             rom_states=None, progress=False):
    """POD (Euclidean) of full dual snapshots at ROM states over a training set

    Shared mode pools the n_bar duals of every training point into one
    snapshot matrix; unique mode compresses the snapshots of each coordinate
    separately. `n_p = 'full'` returns the identity basis.

    Args:
        problem: (FomProblem)
        sub: (SubspaceSet)
        training_params: (list) parameter points of the dual training set
        mode: (str, optional) `shared` or `unique`
        n_p: (int or 'full', optional) dual basis dimension
        projection: (str, optional) primal ROM projection used for the linearization states
        rom_states: (list, optional) precomputed ROM states matching `training_params`
    Returns:
        DualBasis
    """
    if mode not in DUAL_MODES:
        raise ContractError(f'unknown dual mode `{mode}`, choose from {list(DUAL_MODES)}')
    if isinstance(n_p, str):
        if n_p != 'full':
            raise ContractError(f'n_p must be an integer or `full`, got `{n_p}`')
        return DualBasis.full_basis(problem.dimension, mode=mode, n_bar=sub.n_bar)
    if n_p < 1:
        raise ContractError(f'dual basis dimension must be >= 1, got {n_p}')
    if not training_params:
        raise ContractError('dual training set is empty')
    logger = logging.getLogger('DualBasis')
    snapshots = []
    for k, mu in enumerate(tqdm.tqdm(training_params, disable=not progress, desc='dual snapshots')):
        if rom_states is not None:
            x_rom = as_state(rom_states[k])
        else:
            x_rom = solve_rom(problem, sub, mu, projection=projection, tol=tol, max_iters=max_iters).reconstructed
        snapshots.append(solve_dual_fom_all(problem, sub, x_rom, mu))
    if mode == 'shared':
        basis, _ = pod_euclidean(np.hstack(snapshots), n_p)
        bases = [basis]
    else:
        bases = [pod_euclidean(np.stack([Y[:, i] for Y in snapshots], axis=1), n_p)[0]
                 for i in range(sub.n_bar)]
    logger.info(f'{mode} dual basis: n_p={n_p} from {len(training_params)} training points')
    return DualBasis(mode, bases)


def solve_dual_rom(problem, sub, dual_basis, rom_state, mu, projection='galerkin'):
    """Reduced dual solves for all n_bar coordinates

    Galerkin uses Psi = Phi_p, LSPG uses Psi = J^T Phi_p. In shared mode the
    reduced matrix is factorized once and reused for every right-hand side.

    Returns:
        DualRomSolution
    """
    if projection not in ('galerkin', 'lspg'):
        raise ContractError(f'unknown dual projection `{projection}`')
    if dual_basis.mode == 'unique' and len(dual_basis.bases) != sub.n_bar:
        raise ContractError(f'unique dual basis holds {len(dual_basis.bases)} matrices, expected {sub.n_bar}')
    mu = problem.parameter(mu)
    JT = problem.jacobian(as_state(rom_state), mu).T
    rhs = -sub.dual_rhs()
    n_bar = sub.n_bar
    if dual_basis.full:
        lu = _lu_factor(JT, 'dual system')
        N = JT.shape[0]
        count = 1 if dual_basis.mode == 'shared' else n_bar
        duals = scipy.linalg.lu_solve(lu, rhs)
        return DualRomSolution(duals, count, count * factorization_ops(N) + substitution_ops(N, n_bar))

    def reduced_system(basis):
        JT_basis = JT @ basis
        test = basis if projection == 'galerkin' else JT_basis
        return test.T @ JT_basis, test

    if dual_basis.mode == 'shared':
        basis = dual_basis.bases[0]
        n_p = basis.shape[1]
        matrix, test = reduced_system(basis)
        lu = _lu_factor(matrix, 'reduced dual system')
        coords = scipy.linalg.lu_solve(lu, test.T @ rhs)
        ops = factorization_ops(n_p) + substitution_ops(n_p, n_bar)
        return DualRomSolution(basis @ coords, 1, ops, [coords[:, i] for i in range(n_bar)])

    duals = np.zeros_like(rhs)
    coords, ops = [], 0.0
    for i in range(n_bar):
        basis = dual_basis.bases[i]
        matrix, test = reduced_system(basis)
        lu = _lu_factor(matrix, f'reduced dual system {i}')
        c = scipy.linalg.lu_solve(lu, test.T @ rhs[:, i])
        duals[:, i] = basis @ c
        coords.append(c)
        ops += factorization_ops(basis.shape[1]) + substitution_ops(basis.shape[1])
    return DualRomSolution(duals, n_bar, ops, coords)


def compute_indicators(problem, approximate_duals, rom_state, mu):
    """rho_i = y_hat_i^T r(x_ROM; mu)"""
    duals = approximate_duals.duals if isinstance(approximate_duals, DualRomSolution) else np.asarray(approximate_duals)
    if duals.ndim == 1:
        duals = duals[:, None]
    r = problem.residual(as_state(rom_state), mu)
    return IndicatorVector(duals.T @ r)
