from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from romes_closure.errors import ContractError
from romes_closure.utils import utils


@dataclass(frozen=True)
class ParameterVector:
    """A point mu of the parameter domain D"""
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    def __len__(self):
        return self.values.size

    def __getitem__(self, idx):
        return self.values[idx]

    def __array__(self, dtype=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass
class FomState:
    values: np.ndarray
    converged: bool
    newton_iters: int
    residual_norm: float = 0.0
    op_count: float = 0.0
    wall_time: float = 0.0


@dataclass
class QoiFunctional:
    """Quantity-of-interest functional s(w)

    kind `linear` evaluates gamma^T w, `quadratic` evaluates w^T M w and
    `custom` calls `fn(w)`.
    """
    kind: str
    label: str = ''
    weights: np.ndarray = None
    matrix: np.ndarray = None
    fn: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind == 'linear':
            if self.weights is None:
                raise ContractError('linear functional needs a weight vector')
            self.weights = np.asarray(self.weights, dtype=float).ravel()
        elif self.kind == 'quadratic':
            if self.matrix is None:
                raise ContractError('quadratic functional needs a matrix')
            self.matrix = np.asarray(self.matrix, dtype=float)
            if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
                raise ContractError(f'quadratic functional needs a square matrix, got {self.matrix.shape}')
            asym = np.abs(self.matrix - self.matrix.T).max() if self.matrix.size else 0.0
            if asym > 1e-12:
                raise ContractError(f'quadratic functional matrix is not symmetric (max asymmetry {asym:.3e})')
        elif self.kind == 'custom':
            if not callable(self.fn):
                raise ContractError('custom functional needs a callable `fn`')
        else:
            raise ContractError(f'unknown functional kind `{self.kind}`')

    @property
    def dimension(self):
        if self.kind == 'linear':
            return self.weights.size
        if self.kind == 'quadratic':
            return self.matrix.shape[0]
        return None

    @property
    def is_linear(self):
        return self.kind == 'linear'


def evaluate_qoi(functional, w):
    """Evaluate a QoI functional at state `w`"""
    w = np.asarray(w, dtype=float)
    dim = functional.dimension
    if dim is not None and w.shape != (dim,):
        raise ContractError(f'state of shape {w.shape} does not match functional of dimension {dim}')
    if functional.kind == 'linear':
        return float(functional.weights @ w)
    if functional.kind == 'quadratic':
        return float(w @ functional.matrix @ w)
    return float(functional.fn(w))


class FomProblem(ABC):
    """Parameterized algebraic system r(w; mu) = 0 of dimension N

    Subclasses implement `_residual` and `_jacobian`; the public methods
    check dimensions and the parameter domain first. Instances are treated
    as immutable after construction.

    Args:
        dimension: (int) number of unknowns N
        parameter_box: (array (d, 2)) lower/upper bound of each parameter coordinate
        name: (str, optional) label used in logs and artifacts
    """
    residual_kind = 'nonlinear'

    def __init__(self, dimension, parameter_box, name=None):
        if dimension < 1:
            raise ContractError(f'dimension must be positive, got {dimension}')
        box = np.array(parameter_box, dtype=float)
        if box.ndim != 2 or box.shape[1] != 2 or box.shape[0] < 1:
            raise ContractError(f'parameter box must have shape (d, 2), got {box.shape}')
        if np.any(box[:, 0] > box[:, 1]):
            raise ContractError('parameter box has lower bounds above upper bounds')
        box.setflags(write=False)
        self.dimension = int(dimension)
        self.parameter_box = box
        self.name = name or type(self).__name__

    @property
    def parameter_dim(self):
        return self.parameter_box.shape[0]

    @property
    def qoi_count(self):
        return len(self.qoi_functionals())

    def parameter(self, values):
        """Validate and wrap parameter coordinates as a ParameterVector"""
        mu = values if isinstance(values, ParameterVector) else ParameterVector(values)
        if len(mu) != self.parameter_dim:
            raise ContractError(f'parameter has {len(mu)} coordinates, problem expects {self.parameter_dim}')
        lo, hi = self.parameter_box[:, 0], self.parameter_box[:, 1]
        if np.any(mu.values < lo) or np.any(mu.values > hi) or not np.all(np.isfinite(mu.values)):
            raise ContractError(f'parameter {mu.values.tolist()} lies outside the domain box')
        return mu

    def check_state(self, w):
        w = np.asarray(w, dtype=float)
        if w.shape != (self.dimension,):
            raise ContractError(f'state of shape {w.shape} does not match problem dimension {self.dimension}')
        return w

    def residual(self, w, mu):
        return self._residual(self.check_state(w), self.parameter(mu))

    def jacobian(self, w, mu):
        return self._jacobian(self.check_state(w), self.parameter(mu))

    @abstractmethod
    def _residual(self, w, mu):
        pass

    @abstractmethod
    def _jacobian(self, w, mu):
        pass

    def mass_matrix(self):
        return np.eye(self.dimension)

    def stiffness_matrix(self):
        raise NotImplementedError(f'{self.name} does not define a stiffness matrix')

    def qoi_functionals(self):
        return []

    def sample_parameters(self, count, seed):
        return [self.parameter(v) for v in utils.sample_parameters(self.parameter_box, count, seed)]

    def export_operators(self, w, mu, prefix):
        """Write residual and Jacobian at (w, mu) as CSV for oracle cross-checks"""
        utils.write_matrix_csv(f'{prefix}_residual.csv', self.residual(w, mu))
        utils.write_matrix_csv(f'{prefix}_jacobian.csv', self.jacobian(w, mu))

    def __repr__(self):
        return f'{self.name}(N={self.dimension}, d={self.parameter_dim}, residual_kind={self.residual_kind})'


def residual(problem, w, mu):
    return problem.residual(w, mu)


def jacobian(problem, w, mu):
    return problem.jacobian(w, mu)
