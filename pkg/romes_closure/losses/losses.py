from dataclasses import dataclass

import numpy as np

from romes_closure.errors import ContractError, NumericalGuardError
from romes_closure.losses import metrics


COMBINED_OMEGAS = (0.80, 0.90, 0.95, 0.99)
LOSS_NAMES = ('log_likelihood', 'interval', 'combined', 'ks')


@dataclass(frozen=True)
class LossKind:
    """Validation loss used to score hyperparameters; `omega` only for `interval`"""
    name: str
    omega: float = None

    def __post_init__(self):
        if self.name not in LOSS_NAMES:
            raise ContractError(f'unknown loss `{self.name}`, choose from {list(LOSS_NAMES)}')
        if self.name == 'interval':
            if self.omega is None or not 0.0 < self.omega < 1.0:
                raise ContractError(f'interval loss needs omega in (0, 1), got {self.omega}')

    @classmethod
    def parse(cls, text, omega=None):
        """Parse `interval:0.8`-style strings; a bare `interval` takes `omega`"""
        name, _, value = str(text).partition(':')
        if value:
            omega = float(value)
        return cls(name, omega if name == 'interval' else None)

    def __str__(self):
        return f'{self.name}:{self.omega:g}' if self.name == 'interval' else self.name


def _check_fold(residuals, variances):
    residuals = np.asarray(residuals, dtype=float)
    variances = np.asarray(variances, dtype=float)
    if residuals.size == 0:
        raise ContractError('validation fold is empty')
    assert residuals.shape == variances.shape, \
        f'residuals and variances must have the same shape, got {residuals.shape} and {variances.shape}'
    if np.any(variances <= 0.0) or not np.all(np.isfinite(variances)):
        raise NumericalGuardError('predicted variance must be positive and finite')
    return residuals, variances


def log_likelihood_loss(residuals, variances):
    residuals, variances = _check_fold(residuals, variances)
    return float(0.5 * residuals.size * np.log(2 * np.pi)
                 + 0.5 * np.sum(np.log(variances))
                 + 0.5 * np.sum(residuals ** 2 / variances))


def interval_loss(residuals, variances, omega):
    residuals, variances = _check_fold(residuals, variances)
    freq = metrics.coverage_frequency(residuals, 0.0, variances, omega)
    return (omega - freq) ** 2


def combined_loss(residuals, variances, omegas=COMBINED_OMEGAS):
    return sum(interval_loss(residuals, variances, om) for om in omegas)


def ks_loss(residuals, variances):
    residuals, variances = _check_fold(residuals, variances)
    return metrics.ks_statistic(residuals / np.sqrt(variances))


class LossModule:
    """Weighted combination of the validation losses

    Args:
        likelihood_alpha: (float, optional) weight of the negative log-likelihood
        interval_alphas: (dict, optional) {omega: weight} of interval losses
        ks_alpha: (float, optional) weight of the KS loss
    """
    def __init__(self, likelihood_alpha=0.0, interval_alphas=None, ks_alpha=0.0):
        self.likelihood_alpha = likelihood_alpha
        self.interval_alphas = dict(interval_alphas or {})
        self.ks_alpha = ks_alpha
        for om in self.interval_alphas:
            if not 0.0 < om < 1.0:
                raise ContractError(f'interval omega must lie in (0, 1), got {om}')
        if not (likelihood_alpha or ks_alpha or any(self.interval_alphas.values())):
            raise ContractError('LossModule needs at least one nonzero weight')

    @classmethod
    def from_kind(cls, kind):
        if kind.name == 'log_likelihood':
            return cls(likelihood_alpha=1.0)
        if kind.name == 'interval':
            return cls(interval_alphas={kind.omega: 1.0})
        if kind.name == 'combined':
            return cls(interval_alphas={om: 1.0 for om in COMBINED_OMEGAS})
        return cls(ks_alpha=1.0)

    def __call__(self, residuals, variances):
        loss = 0.0
        if self.likelihood_alpha:
            loss += self.likelihood_alpha * log_likelihood_loss(residuals, variances)
        for om, alpha in self.interval_alphas.items():
            if alpha:
                loss += alpha * interval_loss(residuals, variances, om)
        if self.ks_alpha:
            loss += self.ks_alpha * ks_loss(residuals, variances)
        return loss


def evaluate_loss(kind, fold_predictions, fold_data):
    """Loss of one validation fold

    Args:
        kind: (LossKind, LossModule or str) loss to evaluate
        fold_predictions: (tuple) (means, variances) predicted on the fold
        fold_data: (array) true responses of the fold
    """
    means, variances = fold_predictions
    residuals = np.asarray(fold_data, dtype=float) - np.asarray(means, dtype=float)
    if isinstance(kind, str):
        kind = LossKind.parse(kind)
    module = kind if isinstance(kind, LossModule) else LossModule.from_kind(kind)
    return module(residuals, np.asarray(variances, dtype=float))
