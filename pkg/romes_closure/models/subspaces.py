import os
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from romes_closure.errors import ContractError, RankError
from romes_closure.utils import utils


RANK_CUTOFF = 1e-12


class Metric:
    """Symmetric positive definite inner-product matrix Theta with its Cholesky factor

    Args:
        kind: (str) `identity`, `discrete_h1` or `custom`
        matrix: (array (N, N)) the matrix Theta
    """
    def __init__(self, kind, matrix):
        matrix = np.array(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ContractError(f'metric must be a square matrix, got shape {matrix.shape}')
        asym = np.abs(matrix - matrix.T).max() if matrix.size else 0.0
        if asym > 1e-12 * max(1.0, np.abs(matrix).max()):
            raise ContractError(f'metric is not symmetric (max asymmetry {asym:.3e})')
        try:
            self.cholesky = scipy.linalg.cholesky(matrix, lower=True)
        except np.linalg.LinAlgError as e:
            raise ContractError(f'metric `{kind}` is not positive definite: {e}') from e
        matrix.setflags(write=False)
        self.cholesky.setflags(write=False)
        self.kind = kind
        self.matrix = matrix

    @property
    def dimension(self):
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, N):
        return cls('identity', np.eye(N))

    def apply(self, w):
        return self.matrix @ w

    def inner(self, a, b):
        return float(a @ (self.matrix @ b))

    def norm(self, w):
        return float(np.sqrt(max(self.inner(w, w), 0.0)))


def build_metric(problem, kind, matrix=None):
    """Inner-product matrix Theta for a problem

    `identity` gives I, `discrete_h1` gives mass + stiffness, `custom` wraps
    a caller-supplied SPD matrix (e.g. Theta = A(mu) for a linear problem).
    """
    N = problem.dimension
    if kind == 'identity':
        return Metric.identity(N)
    if kind == 'discrete_h1':
        try:
            mass, stiffness = problem.mass_matrix(), problem.stiffness_matrix()
        except NotImplementedError as e:
            raise ContractError(f'metric `discrete_h1` is not supported by {problem.name}') from e
        return Metric('discrete_h1', mass + stiffness)
    if kind == 'custom':
        if matrix is None:
            raise ContractError('metric `custom` needs a matrix')
        if np.shape(matrix) != (N, N):
            raise ContractError(f'custom metric of shape {np.shape(matrix)} does not match N={N}')
        return Metric('custom', matrix)
    raise ContractError(f'unknown metric kind `{kind}`')


def fix_signs(modes):
    """Flip each column so its entry of largest magnitude is positive"""
    if modes.size == 0:
        return modes
    pivots = np.argmax(np.abs(modes), axis=0)
    signs = np.sign(modes[pivots, np.arange(modes.shape[1])])
    signs[signs == 0] = 1.0
    return modes * signs


def pod_decomposition(snapshots, metric):
    """Theta-weighted POD of a snapshot matrix

    With Theta = L L^T the modes are L^{-T} U where U are the left singular
    vectors of L^T X, so they are Theta-orthonormal by construction.

    Returns:
        modes: (array (N, rank)) modes above the numerical-rank cutoff
        singular_values: (array) all singular values, decreasing
    """
    X = np.asarray(snapshots, dtype=float)
    if X.ndim != 2 or X.shape[0] != metric.dimension:
        raise ContractError(f'snapshots of shape {X.shape} do not match metric dimension {metric.dimension}')
    if X.shape[1] == 0:
        return np.zeros((X.shape[0], 0)), np.zeros(0)
    U, s, _ = scipy.linalg.svd(metric.cholesky.T @ X, full_matrices=False)
    rank = int(np.sum(s > RANK_CUTOFF * s[0])) if s[0] > 0 else 0
    modes = scipy.linalg.solve_triangular(metric.cholesky.T, U[:, :rank], lower=False)
    return fix_signs(modes), s


def _check_rank(requested, rank):
    if requested > rank:
        raise RankError(f'requested {requested} modes but the snapshots have numerical rank {rank}', rank=rank)


def pod(snapshots, metric, n):
    """First `n` Theta-orthonormal POD modes and the full singular-value spectrum"""
    if n < 1:
        raise ContractError(f'number of POD modes must be >= 1, got {n}')
    modes, s = pod_decomposition(snapshots, metric)
    _check_rank(n, modes.shape[1])
    return modes[:, :n], s


def build_out_of_plane_basis(snapshots, metric, n, n_perp):
    """POD modes n+1 ... n+n_perp, the modes discarded by the trial basis"""
    if n_perp < 0:
        raise ContractError(f'n_perp must be >= 0, got {n_perp}')
    if n_perp == 0:
        return np.zeros((metric.dimension, 0))
    modes, _ = pod_decomposition(snapshots, metric)
    _check_rank(n + n_perp, modes.shape[1])
    return modes[:, n:n + n_perp]


def build_out_of_plane_from_errors(error_snapshots, metric, Phi, n_perp):
    """POD of Theta-projection errors (I - P) e of state errors onto range(Phi)

    The errors are projected twice so the modes stay Theta-orthogonal to Phi
    to round-off.
    """
    if n_perp == 0:
        return np.zeros((metric.dimension, 0))
    E = np.asarray(error_snapshots, dtype=float)
    gram = Phi.T @ metric.matrix @ Phi
    for _ in range(2):
        E = E - Phi @ np.linalg.solve(gram, Phi.T @ (metric.matrix @ E))
    modes, _ = pod_decomposition(E, metric)
    _check_rank(n_perp, modes.shape[1])
    modes = modes[:, :n_perp]
    modes = modes - Phi @ np.linalg.solve(gram, Phi.T @ (metric.matrix @ modes))
    # re-normalize after the final sweep
    chol = scipy.linalg.cholesky(modes.T @ metric.matrix @ modes, lower=True)
    modes = scipy.linalg.solve_triangular(chol, modes.T, lower=True).T
    return fix_signs(modes)


@dataclass
class ErrorCoordinates:
    in_plane: np.ndarray
    out_of_plane: np.ndarray

    @property
    def values(self):
        return np.concatenate([self.in_plane, self.out_of_plane])

    @property
    def n_bar(self):
        return self.in_plane.size + self.out_of_plane.size


class SubspaceSet:
    """Trial basis Phi, out-of-plane basis PhiPerp, metric Theta and reference state

    Projectors use the general formula Phi (Phi^T Theta Phi)^{-1} Phi^T Theta,
    so bases that are not Theta-orthonormal (e.g. for Theta = A(mu)) are
    handled as well.

    Args:
        Phi: (array (N, n)) trial basis
        PhiPerp: (array (N, n_perp)) out-of-plane basis, may have zero columns
        metric: (Metric) inner product
        reference_state: (array (N,)) x_ref
        singular_values: (array, optional) POD spectrum kept for checkpoints
    """
    def __init__(self, Phi, PhiPerp, metric, reference_state, singular_values=None):
        N = metric.dimension
        Phi = np.array(Phi, dtype=float)
        PhiPerp = np.zeros((N, 0)) if PhiPerp is None else np.array(PhiPerp, dtype=float).reshape(N, -1)
        reference_state = np.array(reference_state, dtype=float)
        if Phi.ndim != 2 or Phi.shape[0] != N or Phi.shape[1] < 1:
            raise ContractError(f'trial basis of shape {Phi.shape} does not match N={N}')
        if reference_state.shape != (N,):
            raise ContractError(f'reference state of shape {reference_state.shape} does not match N={N}')
        self.Phi = Phi
        self.PhiPerp = PhiPerp
        self.Phi_bar = np.hstack([Phi, PhiPerp])
        self.metric = metric
        self.reference_state = reference_state
        self.singular_values = np.zeros(0) if singular_values is None else np.asarray(singular_values, dtype=float)
        for arr in (self.Phi, self.PhiPerp, self.Phi_bar, self.reference_state, self.singular_values):
            arr.setflags(write=False)
        self._theta_phi = metric.matrix @ Phi
        self._theta_perp = metric.matrix @ PhiPerp
        self._theta_bar = metric.matrix @ self.Phi_bar
        try:
            self._gram = scipy.linalg.cho_factor(Phi.T @ self._theta_phi)
            self._gram_perp = scipy.linalg.cho_factor(PhiPerp.T @ self._theta_perp) if self.n_perp else None
            self._gram_bar = scipy.linalg.cho_factor(self.Phi_bar.T @ self._theta_bar)
        except np.linalg.LinAlgError as e:
            raise RankError(f'basis columns are linearly dependent: {e}') from e

    @property
    def N(self):
        return self.Phi.shape[0]

    @property
    def n(self):
        return self.Phi.shape[1]

    @property
    def n_perp(self):
        return self.PhiPerp.shape[1]

    @property
    def n_bar(self):
        return self.n + self.n_perp

    def _check(self, w):
        w = np.asarray(w, dtype=float)
        if w.shape[0] != self.N:
            raise ContractError(f'vector of length {w.shape[0]} does not match N={self.N}')
        return w

    def in_plane_coordinates(self, w):
        return scipy.linalg.cho_solve(self._gram, self._theta_phi.T @ self._check(w))

    def out_of_plane_coordinates(self, w):
        w = self._check(w)
        if not self.n_perp:
            return np.zeros((0,) + w.shape[1:])
        return scipy.linalg.cho_solve(self._gram_perp, self._theta_perp.T @ w)

    def coordinates(self, w):
        """P-bar w = (Phi_bar^T Theta Phi_bar)^{-1} Phi_bar^T Theta w"""
        return scipy.linalg.cho_solve(self._gram_bar, self._theta_bar.T @ self._check(w))

    def project_in_plane(self, w):
        return self.Phi @ self.in_plane_coordinates(w)

    def project_full(self, w):
        return self.Phi_bar @ self.coordinates(w)

    def dual_rhs(self):
        """Columns P-bar^T e_i = Theta Phi_bar (Phi_bar^T Theta Phi_bar)^{-1} e_i, shape (N, n_bar)"""
        return self._theta_bar @ scipy.linalg.cho_solve(self._gram_bar, np.eye(self.n_bar))

    def reconstruct(self, reduced_coords):
        return self.reference_state + self.Phi @ reduced_coords

    def orthonormality_defect(self):
        """Largest deviation of the three Theta-Gram blocks from I, I and 0"""
        checks = [np.abs(self.Phi.T @ self._theta_phi - np.eye(self.n)).max()]
        if self.n_perp:
            checks.append(np.abs(self.PhiPerp.T @ self._theta_perp - np.eye(self.n_perp)).max())
            checks.append(np.abs(self.Phi.T @ self._theta_perp).max())
        return float(max(checks))

    def save(self, directory):
        utils.write_matrix_csv(os.path.join(directory, 'phi.csv'), self.Phi)
        utils.write_matrix_csv(os.path.join(directory, 'phi_perp.csv'), self.PhiPerp)
        utils.write_matrix_csv(os.path.join(directory, 'metric.csv'), self.metric.matrix)
        utils.write_matrix_csv(os.path.join(directory, 'reference_state.csv'), self.reference_state)
        utils.write_matrix_csv(os.path.join(directory, 'singular_values.csv'), self.singular_values)
        return ['phi.csv', 'phi_perp.csv', 'metric.csv', 'reference_state.csv', 'singular_values.csv']

    @classmethod
    def load(cls, directory, metric_kind='custom'):
        metric = Metric(metric_kind, utils.read_matrix_csv(os.path.join(directory, 'metric.csv')))
        return cls(utils.read_matrix_csv(os.path.join(directory, 'phi.csv')),
                   utils.read_matrix_csv(os.path.join(directory, 'phi_perp.csv')),
                   metric,
                   utils.read_matrix_csv(os.path.join(directory, 'reference_state.csv')).ravel(),
                   utils.read_matrix_csv(os.path.join(directory, 'singular_values.csv')).ravel())


def build_subspaces(snapshots, metric, n, n_perp=0, error_snapshots=None):
    """Reference state, trial basis and out-of-plane basis from snapshots

    The reference state is the snapshot mean; POD acts on the centered
    snapshots. When `error_snapshots` is given the out-of-plane basis comes
    from their projection errors, otherwise from the discarded modes.
    """
    X = np.asarray(snapshots, dtype=float)
    reference_state = X.mean(axis=1)
    centered = X - reference_state[:, None]
    modes, s = pod_decomposition(centered, metric)
    if n < 1:
        raise ContractError(f'number of POD modes must be >= 1, got {n}')
    if error_snapshots is None:
        _check_rank(n + n_perp, modes.shape[1])
        Phi, PhiPerp = modes[:, :n], modes[:, n:n + n_perp]
    else:
        _check_rank(n, modes.shape[1])
        Phi = modes[:, :n]
        PhiPerp = build_out_of_plane_from_errors(error_snapshots, metric, Phi, n_perp)
    logging.getLogger('Subspaces').info(f'POD: rank {modes.shape[1]} of {X.shape[1]} snapshots, '
                                        f'n={n}, n_perp={PhiPerp.shape[1]}')
    return SubspaceSet(Phi, PhiPerp, metric, reference_state, singular_values=s)


def project_in_plane(sub, w):
    return sub.project_in_plane(w)


def error_generalized_coordinates(sub, fom_state, rom_state):
    """In-plane and out-of-plane coordinates of delta = fom_state - rom_state"""
    delta = sub._check(fom_state) - sub._check(rom_state)
    return ErrorCoordinates(sub.in_plane_coordinates(delta), sub.out_of_plane_coordinates(delta))


def pod_euclidean(snapshots, n):
    """Euclidean POD (Theta = I) without forming the identity metric

    Returns:
        modes: (array (N, n)) orthonormal columns
        singular_values: (array) full spectrum
    """
    X = np.asarray(snapshots, dtype=float)
    if n < 1:
        raise ContractError(f'number of POD modes must be >= 1, got {n}')
    if X.ndim != 2 or X.shape[1] == 0:
        raise RankError(f'no snapshots to compress (shape {X.shape})', rank=0)
    U, s, _ = scipy.linalg.svd(X, full_matrices=False)
    rank = int(np.sum(s > RANK_CUTOFF * s[0])) if s[0] > 0 else 0
    _check_rank(n, rank)
    return fix_signs(U[:, :n]), s
