import numpy as np
import scipy.stats
import scipy.special

from romes_closure.errors import ContractError, DegenerateDesignError


def erf_inverse(omega):
    """Inverse error function polished by one Newton step on erf"""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0.0) or np.any(omega >= 1.0):
        raise ContractError(f'omega must lie in (0, 1), got {omega}')
    x = scipy.special.erfinv(omega)
    x = x - (scipy.special.erf(x) - omega) / (2.0 / np.sqrt(np.pi) * np.exp(-x ** 2))
    return float(x) if x.ndim == 0 else x


def interval_half_width(std, omega):
    return np.sqrt(2.0) * np.asarray(std) * erf_inverse(omega)


def coverage_frequency(responses, means, variances, omega):
    """Fraction of responses inside the omega-prediction intervals"""
    responses = np.asarray(responses, dtype=float)
    if responses.size == 0:
        raise ContractError('cannot measure coverage of an empty set')
    half = interval_half_width(np.sqrt(variances), omega)
    return float(np.mean(np.abs(responses - np.asarray(means)) <= half))


def fvu(true_values, predicted_means):
    """Fraction of variance unexplained"""
    true_values = np.asarray(true_values, dtype=float)
    predicted_means = np.asarray(predicted_means, dtype=float)
    if true_values.size < 2:
        raise ContractError(f'FVU needs at least 2 values, got {true_values.size}')
    if true_values.shape != predicted_means.shape:
        raise ContractError(f'shape mismatch {true_values.shape} vs {predicted_means.shape}')
    denom = np.sum((true_values - true_values.mean()) ** 2)
    if denom == 0.0:
        raise DegenerateDesignError('FVU undefined: all true values are equal')
    return float(np.sum((true_values - predicted_means) ** 2) / denom)


def validation_frequency(models, test_pairs, omega):
    """Empirical coverage of the omega-prediction interval on held-out pairs

    Args:
        models: (GpErrorModel or list) one model, or one per coordinate
        test_pairs: (tuple) (features, responses); with a list of models both
            arrays are (m, n_bar) and column i belongs to model i
        omega: (float) interval level in (0, 1)
    Returns:
        float, or array with one frequency per model
    """
    features, responses = (np.asarray(a, dtype=float) for a in test_pairs)
    if responses.size == 0:
        raise ContractError('validation set is empty')
    if isinstance(models, (list, tuple)):
        return np.array([validation_frequency(model, (features[:, i], responses[:, i]), omega)
                         for i, model in enumerate(models)])
    means, variances = models.predict(features)
    return coverage_frequency(responses, means, variances, omega)


def ks_statistic(standardized_residuals):
    """Kolmogorov-Smirnov distance between the empirical CDF and N(0, 1)"""
    z = np.asarray(standardized_residuals, dtype=float).ravel()
    if z.size == 0:
        raise ContractError('KS statistic needs at least one residual')
    return float(scipy.stats.kstest(z, 'norm').statistic)


def relative_error(reference, approximation):
    reference = np.asarray(reference, dtype=float)
    denom = np.linalg.norm(reference)
    if denom == 0.0:
        raise DegenerateDesignError('relative error undefined for a zero reference')
    return float(np.linalg.norm(reference - np.asarray(approximation)) / denom)


def dominates(a, b):
    """a dominates b when it is no worse in every objective and better in one"""
    a, b = np.asarray(a), np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def pareto_front(points):
    """Indices of the non-dominated points (all objectives minimized), in input order"""
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        return []
    return [i for i, p in enumerate(points)
            if not any(dominates(q, p) for j, q in enumerate(points) if j != i)]
