import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from romes_closure.errors import ContractError, SolverError
from romes_closure.problems.problem_base import FomState


def factorization_ops(k):
    """Flop estimate of one dense LU factorization of a k x k matrix"""
    return 2.0 / 3.0 * k ** 3


def substitution_ops(k, rhs=1):
    """Flop estimate of forward/back substitution with `rhs` right-hand sides"""
    return 2.0 * k ** 2 * rhs


@dataclass
class NewtonResult:
    x: np.ndarray
    converged: bool
    iterations: int
    residual_norm: float
    initial_norm: float
    factorizations: int = 0
    op_count: float = 0.0


class NewtonSolver:
    """Damped Newton and Gauss-Newton iterations with Armijo backtracking

    The step length starts at 1 and is halved until the merit function
    decreases sufficiently; convergence is declared once
    ||r|| <= tol * ||r(x0)||.

    Args:
        tol: (float, optional) relative residual tolerance
        max_iters: (int, optional) maximum number of Newton iterations
        armijo: (float, optional) sufficient-decrease constant
        max_halvings: (int, optional) backtracking steps before giving up
    """
    def __init__(self, tol=1e-10, max_iters=50, armijo=1e-4, max_halvings=30, name='NewtonSolver'):
        if tol <= 0:
            raise ContractError(f'tolerance must be positive, got {tol}')
        if max_iters < 1:
            raise ContractError(f'max_iters must be >= 1, got {max_iters}')
        self.tol = tol
        self.max_iters = max_iters
        self.armijo = armijo
        self.max_halvings = max_halvings
        self.logger = logging.getLogger(name)

    def linear_solve(self, J, rhs, iteration):
        """Newton step J^{-1} rhs; a singular or non-finite solve raises SolverError tagged with `iteration`"""
        try:
            step = scipy.linalg.solve(J, rhs)
        except np.linalg.LinAlgError as e:
            raise SolverError(f'singular Jacobian: {e}', iteration=iteration) from e
        if not np.all(np.isfinite(step)):
            raise SolverError('Newton step is not finite', iteration=iteration)
        return step

    def solve(self, residual_fn, jacobian_fn, x0):
        """Solve residual_fn(x) = 0 for square systems

        Args:
            residual_fn: (callable) x -> r(x)
            jacobian_fn: (callable) x -> dr/dx(x), square
            x0: (array) initial guess
        Returns:
            NewtonResult
        """
        x = np.array(x0, dtype=float)
        r = residual_fn(x)
        r0 = rnorm = float(np.linalg.norm(r))
        k = x.size
        result = NewtonResult(x, True, 0, rnorm, r0)
        if r0 == 0.0:
            return result
        target = self.tol * r0
        for it in range(1, self.max_iters + 1):
            step = self.linear_solve(jacobian_fn(x), -r, it)
            result.factorizations += 1
            result.op_count += factorization_ops(k) + substitution_ops(k)
            alpha, accepted = 1.0, False
            for _ in range(self.max_halvings + 1):
                x_new = x + alpha * step
                r_new = residual_fn(x_new)
                new_norm = float(np.linalg.norm(r_new))
                if np.isfinite(new_norm) and new_norm <= (1.0 - self.armijo * alpha) * rnorm:
                    accepted = True
                    break
                alpha *= 0.5
            result.iterations = it
            if not accepted:
                self.logger.warning(f'line search failed at iteration {it} (||r|| = {rnorm:.3e})')
                break
            x, r, rnorm = x_new, r_new, new_norm
            if rnorm <= target:
                break
        result.x = x
        result.residual_norm = rnorm
        result.converged = rnorm <= target
        return result

    def solve_least_squares(self, residual_fn, jacobian_fn, x0):
        """Gauss-Newton on 0.5 ||r(x)||^2 for tall Jacobians

        Convergence is measured on the gradient J^T r relative to its initial
        value, or on a step that no longer moves x.
        """
        x = np.array(x0, dtype=float)
        r = residual_fn(x)
        J = jacobian_fn(x)
        grad = J.T @ r
        g0 = gnorm = float(np.linalg.norm(grad))
        rnorm = float(np.linalg.norm(r))
        k = x.size
        result = NewtonResult(x, True, 0, rnorm, rnorm)
        if g0 == 0.0:
            return result
        converged = False
        for it in range(1, self.max_iters + 1):
            step, *_ = np.linalg.lstsq(J, -r, rcond=None)
            if not np.all(np.isfinite(step)):
                raise SolverError('Gauss-Newton step is not finite', iteration=it)
            result.factorizations += 1
            # QR of the N x k reduced Jacobian
            result.op_count += 2.0 * J.shape[0] * k ** 2 + substitution_ops(k)
            slope = float(grad @ step)
            merit = 0.5 * rnorm ** 2
            alpha, accepted = 1.0, False
            for _ in range(self.max_halvings + 1):
                x_new = x + alpha * step
                r_new = residual_fn(x_new)
                new_norm = float(np.linalg.norm(r_new))
                if np.isfinite(new_norm) and 0.5 * new_norm ** 2 <= merit + self.armijo * alpha * slope:
                    accepted = True
                    break
                alpha *= 0.5
            result.iterations = it
            if not accepted:
                # no descent left along the Gauss-Newton direction
                converged = np.linalg.norm(step) <= np.sqrt(self.tol) * (1.0 + np.linalg.norm(x))
                if not converged:
                    self.logger.warning(f'line search failed at iteration {it} (||r|| = {rnorm:.3e})')
                break
            moved = alpha * np.linalg.norm(step)
            x, r, rnorm = x_new, r_new, new_norm
            J = jacobian_fn(x)
            grad = J.T @ r
            gnorm = float(np.linalg.norm(grad))
            if gnorm <= self.tol * g0 or moved <= self.tol * (1.0 + np.linalg.norm(x)):
                converged = True
                break
        result.x = x
        result.residual_norm = rnorm
        result.converged = bool(converged)
        return result


def solve_fom(problem, mu, w0=None, tol=1e-10, max_iters=50):
    """Solve r(u; mu) = 0 for the full-order state

    Linear problems take one dense solve; nonlinear problems run damped
    Newton from `w0` (zero by default).

    Returns:
        FomState
    """
    mu = problem.parameter(mu)
    w0 = np.zeros(problem.dimension) if w0 is None else problem.check_state(w0)
    solver = NewtonSolver(tol=tol, max_iters=max_iters)
    if problem.residual_kind == 'linear':
        r = problem.residual(w0, mu)
        r0 = float(np.linalg.norm(r))
        if r0 == 0.0:
            return FomState(w0.copy(), True, 0, 0.0, 0.0)
        u = w0 + solver.linear_solve(problem.jacobian(w0, mu), -r, 1)
        N = problem.dimension
        return FomState(u, True, 1, float(np.linalg.norm(problem.residual(u, mu))),
                        factorization_ops(N) + substitution_ops(N))
    result = solver.solve(lambda w: problem.residual(w, mu), lambda w: problem.jacobian(w, mu), w0)
    if not result.converged:
        solver.logger.warning(f'FOM Newton did not converge at mu={mu.values.tolist()} '
                              f'(||r|| = {result.residual_norm:.3e} after {result.iterations} iterations)')
    return FomState(result.x, result.converged, result.iterations, result.residual_norm, result.op_count)
