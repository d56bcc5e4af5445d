import numpy as np

from romes_closure.problems.problem_base import FomProblem


class LinearProblem(FomProblem):
    """Problem with residual affine in the state, r(w; mu) = b(mu) - A(mu) w

    Args:
        operator_fn: (callable) mu -> A(mu), dense (N, N)
        rhs_fn: (callable) mu -> b(mu), length N
        dimension: (int) N
        parameter_box: (array (d, 2)) parameter domain
        name: (str, optional)
    """
    residual_kind = 'linear'

    def __init__(self, operator_fn, rhs_fn, dimension, parameter_box, name=None, functionals=None):
        super().__init__(dimension, parameter_box, name=name)
        self._operator_fn = operator_fn
        self._rhs_fn = rhs_fn
        self._functionals = list(functionals or [])

    def operator(self, mu):
        return np.asarray(self._operator_fn(self.parameter(mu)), dtype=float)

    def rhs(self, mu):
        return np.asarray(self._rhs_fn(self.parameter(mu)), dtype=float)

    def _residual(self, w, mu):
        return self.rhs(mu) - self.operator(mu) @ w

    def _jacobian(self, w, mu):
        return -self.operator(mu)

    def qoi_functionals(self):
        return list(self._functionals)
