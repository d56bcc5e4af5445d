from .problem_base import (
    ParameterVector,
    FomState,
    QoiFunctional,
    FomProblem,
    evaluate_qoi,
    residual,
    jacobian,
)
from .linear import LinearProblem
from .benchmarks import LinearDiffusion2D, NonlinearReaction2D, make_benchmark, subdomain_functionals
from .solvers import NewtonSolver, NewtonResult, solve_fom, factorization_ops, substitution_ops
