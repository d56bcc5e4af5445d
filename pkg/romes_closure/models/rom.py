from dataclasses import dataclass

import numpy as np

from romes_closure.errors import ContractError
from romes_closure.problems.problem_base import FomState, evaluate_qoi
from romes_closure.problems.solvers import NewtonSolver, factorization_ops, substitution_ops


PROJECTIONS = ('galerkin', 'lspg')


@dataclass
class RomSolution:
    reduced_coords: np.ndarray
    reconstructed: np.ndarray
    residual_norm: float
    converged: bool
    newton_iters: int = 0
    projection: str = 'galerkin'
    op_count: float = 0.0


def as_state(x):
    """State vector from a FomState, a RomSolution or a plain array"""
    if isinstance(x, RomSolution):
        return x.reconstructed
    if isinstance(x, FomState):
        return x.values
    return np.asarray(x, dtype=float)


def solve_rom(problem, sub, mu, projection='galerkin', tol=1e-10, max_iters=50):
    """Solve the reduced primal problem on the affine trial subspace x_ref + range(Phi)

    Galerkin enforces Phi^T r = 0; LSPG minimizes ||r||_2 by Gauss-Newton,
    i.e. Psi = (dr/dw) Phi re-linearized every iteration. The reduced
    iteration starts from zero coordinates.

    Args:
        problem: (FomProblem) full-order problem
        sub: (SubspaceSet) trial subspace
        mu: (ParameterVector or array) parameter point
        projection: (str, optional) `galerkin` or `lspg`
        tol: (float, optional) relative tolerance of the reduced iteration
        max_iters: (int, optional)
    Returns:
        RomSolution
    """
    if projection not in PROJECTIONS:
        raise ContractError(f'unknown projection `{projection}`, choose from {list(PROJECTIONS)}')
    if sub.N != problem.dimension:
        raise ContractError(f'subspace dimension {sub.N} does not match problem dimension {problem.dimension}')
    mu = problem.parameter(mu)
    Phi = sub.Phi
    n = sub.n
    solver = NewtonSolver(tol=tol, max_iters=max_iters, name='RomSolver')

    def full_residual(xh):
        return problem.residual(sub.reconstruct(xh), mu)

    def residual_times_basis(xh):
        return problem.jacobian(sub.reconstruct(xh), mu) @ Phi

    xh0 = np.zeros(n)
    if problem.residual_kind == 'linear':
        r0 = full_residual(xh0)
        JPhi = residual_times_basis(xh0)
        if projection == 'galerkin':
            reduced = Phi.T @ JPhi
            xh = xh0 + solver.linear_solve(reduced, -(Phi.T @ r0), 1) if np.any(Phi.T @ r0) else xh0
            ops = factorization_ops(n) + substitution_ops(n)
        else:
            xh = np.linalg.lstsq(JPhi, -r0, rcond=None)[0] if np.any(r0) else xh0
            ops = 2.0 * JPhi.shape[0] * n ** 2 + substitution_ops(n)
        x_rom = sub.reconstruct(xh)
        return RomSolution(xh, x_rom, float(np.linalg.norm(problem.residual(x_rom, mu))), True,
                           1, projection, ops)

    if projection == 'galerkin':
        result = solver.solve(lambda xh: Phi.T @ full_residual(xh),
                              lambda xh: Phi.T @ residual_times_basis(xh), xh0)
    else:
        result = solver.solve_least_squares(full_residual, residual_times_basis, xh0)
    x_rom = sub.reconstruct(result.x)
    if not result.converged:
        solver.logger.warning(f'{projection} ROM did not converge at mu={mu.values.tolist()}')
    return RomSolution(result.x, x_rom, float(np.linalg.norm(problem.residual(x_rom, mu))),
                       result.converged, result.iterations, projection, result.op_count)


def rom_qoi(problem, functional, rom_solution):
    """ROM-predicted output s(x_ROM; mu)"""
    x_rom = as_state(rom_solution)
    problem.check_state(x_rom)
    return evaluate_qoi(functional, x_rom)
