import numpy as np

from romes_closure.errors import ContractError
from romes_closure.problems.linear import LinearProblem
from romes_closure.problems.problem_base import FomProblem, QoiFunctional
from romes_closure.utils.grids import coordinates_2D, block_index, gaussian_bump, harmonic_mean


def _region_mask(x, y, region):
    x0, x1, y0, y1 = region
    return (x >= x0 - 1e-12) & (x <= x1 + 1e-12) & (y >= y0 - 1e-12) & (y <= y1 + 1e-12)


def subdomain_functionals(x, y, areas, region):
    """Mean and mean-square of the state over a rectangular subdomain

    Args:
        x, y: (array (N,)) node coordinates of the unknowns
        areas: (array (N,)) control-volume area of each unknown
        region: (tuple) (x0, x1, y0, y1)
    Returns:
        [QoiFunctional(linear), QoiFunctional(quadratic)]
    """
    mask = _region_mask(x, y, region)
    if not np.any(mask):
        raise ContractError(f'subdomain {region} contains no unknowns')
    weights = np.where(mask, areas, 0.0)
    weights = weights / weights.sum()
    return [QoiFunctional('linear', label='mean_u', weights=weights),
            QoiFunctional('quadratic', label='mean_u_squared', matrix=np.diag(weights))]


class LinearDiffusion2D(LinearProblem):
    """Steady diffusion with a 3 x 3 piecewise-constant conductivity

    Vertex-centered finite volumes on an (m+1) x (m+1) grid of the unit
    square. u = 0 on the top edge (those nodes are eliminated), unit inflow
    flux on the bottom edge and insulated sides. Face conductivities are the
    harmonic mean of the two node values, so A(mu) is symmetric positive
    definite and r(w; mu) = b - A(mu) w.

    Args:
        m: (int, optional) cells per side; N = (m+1) * m unknowns
        region: (tuple, optional) (x0, x1, y0, y1) subdomain of the QoIs
    """
    blocks = 3

    def __init__(self, m=32, region=(1 / 3, 2 / 3, 1 / 3, 2 / 3)):
        if m < 2:
            raise ContractError(f'linear diffusion grid needs m >= 2, got {m}')
        self.m = m
        self.h = 1.0 / m
        x_full, y_full = coordinates_2D(m, as_mat=True)
        # full-grid node numbering [j, i] -> j*(m+1) + i; unknowns are rows j < m
        self._node_block = block_index(x_full.T, y_full.T, self.blocks).ravel()
        n_unknowns = (m + 1) * m
        idx = np.arange((m + 1) * (m + 1)).reshape(m + 1, m + 1)

        wx = np.full(m + 1, self.h)
        wx[[0, m]] = self.h / 2
        wy = np.full(m + 1, self.h)
        wy[0] = self.h / 2
        self.x = x_full.T[:m].ravel()
        self.y = y_full.T[:m].ravel()
        self.areas = np.outer(wy[:m], wx).ravel()

        p_h, q_h = idx[:m, :m].ravel(), idx[:m, 1:].ravel()
        c_h = np.repeat(wy[:m] / self.h, m)
        p_v, q_v = idx[:m - 1, :].ravel(), idx[1:m, :].ravel()
        c_v = np.tile(wx / self.h, m - 1)
        self._faces = (np.concatenate([p_h, p_v]), np.concatenate([q_h, q_v]),
                       np.concatenate([c_h, c_v]))
        self._dirichlet = (idx[m - 1, :], idx[m, :], wx / self.h)

        rhs = np.zeros(n_unknowns)
        rhs[idx[0, :]] = wx
        self._rhs = rhs
        functionals = subdomain_functionals(self.x, self.y, self.areas, region)
        super().__init__(self.assemble, lambda mu: self._rhs.copy(), n_unknowns,
                         [[0.01, 1.0]] * self.blocks ** 2, name='LinearDiffusion2D',
                         functionals=functionals)

    def node_conductivity(self, mu):
        return np.asarray(mu, dtype=float)[self._node_block]

    def assemble(self, mu=None, conductivity=None):
        """Dense system matrix A(mu), or the plain stiffness matrix when `conductivity` is given per node"""
        kappa = self.node_conductivity(mu) if conductivity is None else np.broadcast_to(
            np.asarray(conductivity, dtype=float), self._node_block.shape)
        n_unknowns = (self.m + 1) * self.m
        A = np.zeros((n_unknowns, n_unknowns))
        p, q, c = self._faces
        coef = c * harmonic_mean(kappa[p], kappa[q])
        np.add.at(A, (p, p), coef)
        np.add.at(A, (q, q), coef)
        np.add.at(A, (p, q), -coef)
        np.add.at(A, (q, p), -coef)
        p, q, c = self._dirichlet
        np.add.at(A, (p, p), c * harmonic_mean(kappa[p], kappa[q]))
        return A

    def mass_matrix(self):
        return np.diag(self.areas)

    def stiffness_matrix(self):
        return self.assemble(conductivity=1.0)


class NonlinearReaction2D(FomProblem):
    """-div(mu1 grad u) + mu2 u^3 = mu3 f on the unit square, u = 0 on the boundary

    Five-point finite differences on the (m-1)^2 interior nodes; f is a fixed
    Gaussian bump. r(w; mu) = -mu1 L w - mu2 w^3 + mu3 f.
    """

    def __init__(self, m=32, region=(1 / 3, 2 / 3, 1 / 3, 2 / 3)):
        if m < 3:
            raise ContractError(f'nonlinear reaction grid needs m >= 3, got {m}')
        self.m = m
        self.h = 1.0 / m
        n1 = m - 1
        super().__init__(n1 * n1, [[0.5, 2.0], [0.0, 5.0], [1.0, 3.0]], name='NonlinearReaction2D')
        tri = (2.0 * np.eye(n1) - np.eye(n1, k=1) - np.eye(n1, k=-1)) / self.h ** 2
        self.laplacian = np.kron(np.eye(n1), tri) + np.kron(tri, np.eye(n1))
        self.laplacian.setflags(write=False)
        axis = np.arange(1, m) * self.h
        y_mat, x_mat = np.meshgrid(axis, axis, indexing='ij')
        self.x, self.y = x_mat.ravel(), y_mat.ravel()
        self.forcing = gaussian_bump(self.x, self.y)
        self.areas = np.full(self.dimension, self.h ** 2)
        self._functionals = subdomain_functionals(self.x, self.y, self.areas, region)

    def linear_part(self, mu):
        mu = self.parameter(mu)
        return mu[0] * self.laplacian

    def _residual(self, w, mu):
        return -mu[0] * (self.laplacian @ w) - mu[1] * w ** 3 + mu[2] * self.forcing

    def _jacobian(self, w, mu):
        return -mu[0] * self.laplacian - np.diag(3.0 * mu[1] * w ** 2)

    def mass_matrix(self):
        return np.diag(self.areas)

    def stiffness_matrix(self):
        return self.h ** 2 * self.laplacian

    def qoi_functionals(self):
        return list(self._functionals)


BENCHMARKS = {
    'linear_diffusion': LinearDiffusion2D,
    'nonlinear_reaction': NonlinearReaction2D,
}


def make_benchmark(name, m):
    if name not in BENCHMARKS:
        raise ContractError(f'unknown benchmark `{name}`, choose from {list(BENCHMARKS)}')
    return BENCHMARKS[name](m=m)
