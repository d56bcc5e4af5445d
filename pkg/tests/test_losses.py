import numpy as np
import pytest
from scipy.special import erf

from romes_closure.errors import ContractError, DegenerateDesignError, NumericalGuardError
from romes_closure.losses import (COMBINED_OMEGAS, LossKind, LossModule, combined_loss, erf_inverse, evaluate_loss,
                                  fvu, interval_loss, ks_loss, ks_statistic, log_likelihood_loss, pareto_front,
                                  relative_error, validation_frequency)
from romes_closure.losses.metrics import interval_half_width


class FixedModel:
    """Predicts the feature itself with a constant variance"""
    def __init__(self, variance):
        self.variance = variance

    def predict(self, features):
        features = np.asarray(features, dtype=float)
        return features, np.full(features.shape, self.variance)


def _erfinv_bisection(value):
    lo, hi = 0.0, 10.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if erf(mid) < value:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_calibrated_fold_has_small_interval_loss():
    residuals = np.random.default_rng(61).standard_normal(20000)
    assert interval_loss(residuals, np.ones_like(residuals), 0.8) < 0.01


def test_ks_loss_of_zero_residuals():
    assert ks_loss(np.zeros(10), np.ones(10)) == pytest.approx(0.5)


def test_single_point_fold_inside_interval():
    for omega in (0.5, 0.8, 0.99):
        assert interval_loss([0.0], [1.0], omega) == pytest.approx((omega - 1.0) ** 2)


def test_zero_variance_is_guarded():
    with pytest.raises(NumericalGuardError):
        log_likelihood_loss([0.1, 0.2], [1.0, 0.0])
    with pytest.raises(NumericalGuardError):
        evaluate_loss('ks', ([0.0], [0.0]), [1.0])
    with pytest.raises(ContractError):
        log_likelihood_loss([], [])


def test_log_likelihood_by_hand():
    expected = np.log(2 * np.pi) + 0.5 * np.log(4.0) + 0.5 * (1.0 + 0.25)
    assert log_likelihood_loss([1.0, -1.0], [1.0, 4.0]) == pytest.approx(expected, rel=1e-14)


def test_combined_is_sum_of_intervals():
    rng = np.random.default_rng(62)
    residuals, variances = rng.standard_normal(40), rng.uniform(0.5, 2.0, 40)
    expected = sum(interval_loss(residuals, variances, om) for om in COMBINED_OMEGAS)
    assert combined_loss(residuals, variances) == pytest.approx(expected)
    assert evaluate_loss('combined', (np.zeros(40), variances), residuals) == pytest.approx(expected)


def test_loss_kind_parsing():
    kind = LossKind.parse('interval:0.8')
    assert (kind.name, kind.omega, str(kind)) == ('interval', 0.8, 'interval:0.8')
    assert LossKind.parse('interval', omega=0.9).omega == 0.9
    assert str(LossKind.parse('ks')) == 'ks'
    with pytest.raises(ContractError):
        LossKind.parse('interval')
    with pytest.raises(ContractError):
        LossKind.parse('hinge')
    with pytest.raises(ContractError):
        LossKind('interval', 1.5)


def test_loss_module_combines_weights():
    rng = np.random.default_rng(63)
    residuals, variances = rng.standard_normal(30), rng.uniform(0.5, 2.0, 30)
    module = LossModule(likelihood_alpha=0.5, interval_alphas={0.8: 2.0}, ks_alpha=1.0)
    expected = (0.5 * log_likelihood_loss(residuals, variances) + 2.0 * interval_loss(residuals, variances, 0.8)
                + ks_loss(residuals, variances))
    assert module(residuals, variances) == pytest.approx(expected)
    with pytest.raises(ContractError):
        LossModule()


def test_evaluate_loss_uses_residuals():
    means, variances, data = np.array([1.0, 2.0]), np.array([1.0, 1.0]), np.array([1.5, 1.0])
    assert evaluate_loss(LossKind('log_likelihood'), (means, variances), data) == \
        pytest.approx(log_likelihood_loss(data - means, variances))


def test_erf_inverse_is_accurate():
    for omega in (1e-9, 0.1, 0.5, 0.8, 0.95, 0.99, 1 - 1e-9):
        x = erf_inverse(omega)
        assert erf(x) == pytest.approx(omega, rel=1e-12, abs=1e-15)
    with pytest.raises(ContractError):
        erf_inverse(1.0)


def test_interval_half_widths():
    assert interval_half_width(1.0, 0.6827) == pytest.approx(1.0, abs=1e-3)
    expected = 2 * np.sqrt(2) * _erfinv_bisection(0.95)
    assert interval_half_width(2.0, 0.95) == pytest.approx(expected, abs=1e-9)


def test_fvu_hand_values():
    true = np.array([0.0, 1.0, 2.0])
    assert fvu(true, true) == 0.0
    assert fvu(true, np.full(3, true.mean())) == pytest.approx(1.0)
    assert fvu(true, [0.0, 1.0, 1.0]) == pytest.approx(0.5)
    with pytest.raises(DegenerateDesignError):
        fvu([1.0, 1.0, 1.0], [0.0, 1.0, 2.0])
    with pytest.raises(ContractError):
        fvu([1.0], [1.0])


def test_validation_frequency():
    rng = np.random.default_rng(64)
    features = rng.standard_normal(200)
    responses = features + rng.standard_normal(200)
    assert validation_frequency(FixedModel(1e300), (features, responses), 0.8) == 1.0
    assert validation_frequency(FixedModel(1.0), (features, responses), 0.8) == pytest.approx(0.8, abs=0.1)
    pairs = (np.column_stack([features, features]), np.column_stack([responses, features]))
    freqs = validation_frequency([FixedModel(1.0), FixedModel(1.0)], pairs, 0.5)
    assert freqs.shape == (2,)
    assert freqs[1] == 1.0
    with pytest.raises(ContractError):
        validation_frequency(FixedModel(1.0), (np.zeros(0), np.zeros(0)), 0.8)


def test_ks_statistic_of_normal_sample():
    z = np.random.default_rng(65).standard_normal(5000)
    assert ks_statistic(z) < 0.03
    assert ks_statistic(z + 3.0) > 0.8


def test_relative_error():
    assert relative_error([3.0, 4.0], [3.0, 0.0]) == pytest.approx(0.8)
    with pytest.raises(DegenerateDesignError):
        relative_error([0.0, 0.0], [1.0, 1.0])


def test_pareto_front():
    points = [(1.0, 5.0), (2.0, 2.0), (3.0, 3.0), (5.0, 1.0), (2.0, 2.0), (6.0, 6.0)]
    assert pareto_front(points) == [0, 1, 3, 4]
    assert pareto_front([]) == []
