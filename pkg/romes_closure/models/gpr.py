import logging
import itertools
from dataclasses import dataclass, asdict

import numpy as np
import scipy.linalg
from sklearn.model_selection import KFold

from romes_closure.errors import (ContractError, DegenerateDesignError, NumericalGuardError,
                                  SelectionError, SolverError)
from romes_closure.losses.losses import LossKind, LossModule
from romes_closure.losses.metrics import interval_half_width
from romes_closure.utils import schedulers


JITTER = 1e-10


@dataclass(frozen=True)
class GpHyperparameters:
    noise_variance: float
    signal_variance: float
    length_scale: float

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not np.isfinite(value) or value <= 0:
                raise ContractError(f'hyperparameter `{name}` must be positive, got {value}')

    def to_dict(self):
        return asdict(self)


def kernel_matrix(a, b, hyper):
    """Squared-exponential kernel gamma * exp(-(a_i - b_j)^2 / (2 l)), with l as written (not squared)"""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    diff = a[:, None] - b[None, :]
    return hyper.signal_variance * np.exp(-diff ** 2 / (2.0 * hyper.length_scale))


def design_matrix(features):
    features = np.asarray(features, dtype=float)
    return np.column_stack([np.ones_like(features), features])


def factor_noisy_kernel(features, hyper):
    """Cholesky factor of K + sigma^2 I, retried once with a small diagonal jitter

    Returns:
        factor: cho_factor tuple
        jitter: (float) diagonal shift that was added, 0 when none was needed
    """
    W = kernel_matrix(features, features, hyper) + hyper.noise_variance * np.eye(len(features))
    try:
        return scipy.linalg.cho_factor(W, lower=True), 0.0
    except np.linalg.LinAlgError:
        jitter = JITTER * np.trace(W) / len(features)
        logging.getLogger('GpErrorModel').warning(f'K + sigma^2 I not positive definite, adding jitter {jitter:.3e}')
    try:
        return scipy.linalg.cho_factor(W + jitter * np.eye(len(features)), lower=True), jitter
    except np.linalg.LinAlgError as e:
        raise SolverError(f'kernel matrix is not positive definite after jitter: {e}') from e


def fit_beta_mle(features, responses, hyper, factor=None):
    """MLE of the prior-mean coefficients for the basis {1, rho}

    beta = (H^T W^{-1} H)^{-1} H^T W^{-1} y with W = K + sigma^2 I.
    """
    features = np.asarray(features, dtype=float)
    responses = np.asarray(responses, dtype=float)
    if features.size < 3:
        raise ContractError(f'GP fit needs at least 3 training points, got {features.size}')
    if features.shape != responses.shape:
        raise ContractError(f'features {features.shape} and responses {responses.shape} differ in shape')
    if np.ptp(features) == 0.0:
        raise DegenerateDesignError('design matrix [1 rho] is rank deficient: all features are equal')
    if factor is None:
        factor, _ = factor_noisy_kernel(features, hyper)
    H = design_matrix(features)
    WiH = scipy.linalg.cho_solve(factor, H)
    Wiy = scipy.linalg.cho_solve(factor, responses)
    try:
        return scipy.linalg.solve(H.T @ WiH, H.T @ Wiy, assume_a='sym')
    except np.linalg.LinAlgError as e:
        raise DegenerateDesignError(f'normal equations for beta are singular: {e}') from e


class GpErrorModel:
    """Univariate GP regression from an error indicator to one error coordinate

    Prior mean [1 rho] beta, squared-exponential covariance plus noise. The
    posterior mean smooths the residuals y - H beta so that it coincides
    with conditioning the joint Gaussian on the training data.

    Args:
        hyper: (GpHyperparameters) kernel and noise hyperparameters
        train_features: (array (n_train,)) indicators rho
        train_responses: (array (n_train,)) error coordinates delta
        beta: (array (2,), optional) coefficients; fitted by MLE when omitted
    """
    def __init__(self, hyper, train_features, train_responses, beta=None):
        self.hyper = hyper
        self.train_features = np.array(train_features, dtype=float).ravel()
        self.train_responses = np.array(train_responses, dtype=float).ravel()
        self.factor, self.jitter = factor_noisy_kernel(self.train_features, hyper)
        if beta is None:
            beta = fit_beta_mle(self.train_features, self.train_responses, hyper, factor=self.factor)
        self.beta = np.asarray(beta, dtype=float)
        residual = self.train_responses - design_matrix(self.train_features) @ self.beta
        self._alpha = scipy.linalg.cho_solve(self.factor, residual)
        self.cv_loss = None
        self.grid_index = None

    @property
    def n_train(self):
        return self.train_features.size

    def predict(self, rho):
        """Posterior means and variances at an array of indicator values"""
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        k = kernel_matrix(rho, self.train_features, self.hyper)
        means = k @ self._alpha + design_matrix(rho) @ self.beta
        reduction = np.sum(k * scipy.linalg.cho_solve(self.factor, k.T).T, axis=1)
        latent = np.maximum(self.hyper.signal_variance - reduction, 0.0)
        return means, latent + self.hyper.noise_variance

    def posterior(self, rho):
        means, variances = self.predict([rho])
        return float(means[0]), float(variances[0])

    def to_dict(self):
        return {'hyper': self.hyper.to_dict(),
                'beta': self.beta.tolist(),
                'train_features': self.train_features.tolist(),
                'train_responses': self.train_responses.tolist(),
                'cv_loss': self.cv_loss,
                'grid_index': self.grid_index}

    @classmethod
    def from_dict(cls, data):
        model = cls(GpHyperparameters(**data['hyper']), data['train_features'],
                    data['train_responses'], beta=data['beta'])
        model.cv_loss = data.get('cv_loss')
        model.grid_index = data.get('grid_index')
        return model

    def __repr__(self):
        h = self.hyper
        return (f'GpErrorModel(n_train={self.n_train}, sigma2={h.noise_variance:.3e}, '
                f'gamma={h.signal_variance:.3e}, l={h.length_scale:.3e}, beta={self.beta.tolist()})')


def posterior(model, rho):
    return model.posterior(rho)


def prediction_interval(model, rho, omega):
    """omega-prediction interval mean -/+ sqrt(2) std erfinv(omega)"""
    mean, variance = model.posterior(rho)
    half = float(interval_half_width(np.sqrt(variance), omega))
    return mean - half, mean + half


def hyperparameter_grid(responses, points=12):
    """Equispaced grid scaled by the response standard deviation sigma_t

    sigma^2 in [0.01, 0.25] sigma_t, gamma in [0.1, 1] sigma_t and
    l in [0.001, 0.1] sigma_t; sigma_t falls back to 1 for constant data.
    """
    responses = np.asarray(responses, dtype=float)
    sigma_t = float(np.std(responses, ddof=1)) if responses.size > 1 else 0.0
    if not np.isfinite(sigma_t) or sigma_t == 0.0:
        logging.getLogger('CrossValidation').warning('responses have zero spread, scaling grid with sigma_t = 1')
        sigma_t = 1.0
    noise = schedulers.linear(0.01 * sigma_t, 0.25 * sigma_t, points)
    signal = schedulers.linear(0.1 * sigma_t, sigma_t, points)
    length = schedulers.linear(0.001 * sigma_t, 0.1 * sigma_t, points)
    return [GpHyperparameters(float(s2), float(g), float(l)) for s2, g, l in itertools.product(noise, signal, length)]


def fold_indices(n, K, seed):
    """K near-equal folds from a seeded shuffle, as (train, test) index pairs"""
    return list(KFold(n_splits=K, shuffle=True, random_state=seed).split(np.arange(n)))


def grid_losses(features, responses, grid, K, kind, seed):
    """Mean fold loss for every grid point; failed grid points get NaN"""
    features = np.asarray(features, dtype=float).ravel()
    responses = np.asarray(responses, dtype=float).ravel()
    if K < 2:
        raise ContractError(f'cross validation needs K >= 2, got {K}')
    if features.size < K:
        raise ContractError(f'{features.size} training points cannot fill {K} folds')
    if not grid:
        raise ContractError('hyperparameter grid is empty')
    module = kind if isinstance(kind, LossModule) else LossModule.from_kind(
        LossKind.parse(kind) if isinstance(kind, str) else kind)
    folds = fold_indices(features.size, K, seed)
    losses = np.full(len(grid), np.nan)
    for g, hyper in enumerate(grid):
        try:
            fold_losses = []
            for train, test in folds:
                model = GpErrorModel(hyper, features[train], responses[train])
                means, variances = model.predict(features[test])
                fold_losses.append(module(responses[test] - means, variances))
            losses[g] = np.mean(fold_losses)
        except (SolverError, DegenerateDesignError, NumericalGuardError, ContractError) as e:
            logging.getLogger('CrossValidation').debug(f'grid point {g} failed: {e}')
    return losses


def cross_validate(features, responses, grid, K=10, kind='log_likelihood', seed=0):
    """Select hyperparameters by K-fold cross validation, then refit beta on all data

    Ties go to the lowest grid index.

    Returns:
        GpErrorModel with `cv_loss` and `grid_index` set
    """
    losses = grid_losses(features, responses, grid, K, kind, seed)
    finite = np.isfinite(losses)
    if not np.any(finite):
        raise SelectionError(f'all {len(grid)} hyperparameter candidates failed')
    best = int(np.argmin(np.where(finite, losses, np.inf)))
    model = GpErrorModel(grid[best], features, responses)
    model.cv_loss = float(losses[best])
    model.grid_index = best
    logging.getLogger('CrossValidation').debug(f'selected grid point {best}: {model}')
    return model
