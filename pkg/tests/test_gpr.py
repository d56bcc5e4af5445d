import numpy as np
import pytest

from romes_closure.errors import ContractError, DegenerateDesignError, SelectionError
from romes_closure.losses import LossModule, fvu
from romes_closure.models import (GpErrorModel, GpHyperparameters, cross_validate, fit_beta_mle,
                                  hyperparameter_grid, kernel_matrix, prediction_interval)
from romes_closure.models.gpr import factor_noisy_kernel, fold_indices, grid_losses


def _random_instance(rng):
    n_train = int(rng.integers(3, 21))
    hyper = GpHyperparameters(float(rng.uniform(0.1, 1.0)), float(rng.uniform(0.5, 2.0)),
                              float(rng.uniform(0.05, 1.0)))
    features = rng.uniform(-2.0, 2.0, n_train)
    responses = rng.standard_normal(n_train)
    return hyper, features, responses


def test_posterior_matches_block_gaussian_conditioning():
    rng = np.random.default_rng(41)
    for _ in range(50):
        hyper, features, responses = _random_instance(rng)
        beta = rng.standard_normal(2)
        model = GpErrorModel(hyper, features, responses, beta=beta)
        query = rng.uniform(-3.0, 3.0, 4)

        # joint covariance of noisy training and query outputs
        X = np.concatenate([features, query])
        C = np.array([[hyper.signal_variance * np.exp(-(a - b) ** 2 / (2 * hyper.length_scale)) for b in X] for a in X])
        C += hyper.noise_variance * np.eye(X.size)
        H = np.column_stack([np.ones(X.size), X])
        prior = H @ beta
        t = features.size
        C_tt, C_qt, C_qq = C[:t, :t], C[t:, :t], C[t:, t:]
        mean = prior[t:] + C_qt @ np.linalg.solve(C_tt, responses - prior[:t])
        cov = C_qq - C_qt @ np.linalg.solve(C_tt, C_qt.T)

        means, variances = model.predict(query)
        np.testing.assert_allclose(means, mean, rtol=0, atol=1e-10)
        np.testing.assert_allclose(variances, np.diag(cov), rtol=0, atol=1e-10)


def test_beta_matches_dense_normal_equations():
    rng = np.random.default_rng(42)
    for _ in range(10):
        hyper, features, responses = _random_instance(rng)
        W = kernel_matrix(features, features, hyper) + hyper.noise_variance * np.eye(features.size)
        Wi = np.linalg.inv(W)
        H = np.column_stack([np.ones_like(features), features])
        oracle = np.linalg.solve(H.T @ Wi @ H, H.T @ Wi @ responses)
        np.testing.assert_allclose(fit_beta_mle(features, responses, hyper), oracle, rtol=1e-8, atol=1e-10)


def test_beta_recovers_exact_linear_trend():
    features = np.linspace(-1.0, 1.0, 9)
    hyper = GpHyperparameters(100.0, 1.0, 0.3)
    np.testing.assert_allclose(fit_beta_mle(features, 0.5 - 3.0 * features, hyper), [0.5, -3.0], atol=1e-10)
    np.testing.assert_array_equal(fit_beta_mle(features, np.zeros(9), hyper), [0.0, 0.0])


def test_beta_guards():
    hyper = GpHyperparameters(0.1, 1.0, 0.5)
    with pytest.raises(ContractError):
        fit_beta_mle([0.0, 1.0], [0.0, 1.0], hyper)
    with pytest.raises(DegenerateDesignError):
        fit_beta_mle([0.3, 0.3, 0.3], [0.0, 1.0, 2.0], hyper)


def test_kernel_properties():
    hyper = GpHyperparameters(0.1, 1.0, 0.04)
    assert kernel_matrix([0.0], [0.0], hyper)[0, 0] == 1.0
    assert kernel_matrix([0.0], [20 * np.sqrt(0.04)], hyper)[0, 0] < 1e-12
    a = np.random.default_rng(43).standard_normal(7)
    K = kernel_matrix(a, a, hyper)
    assert np.abs(K - K.T).max() <= 1e-15


def test_hyperparameters_must_be_positive():
    with pytest.raises(ContractError):
        GpHyperparameters(0.0, 1.0, 1.0)
    with pytest.raises(ContractError):
        GpHyperparameters(1.0, -1.0, 1.0)


def test_near_interpolation_at_training_points():
    features = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    responses = np.array([0.3, -0.2, 0.8, 0.1, -0.4])
    model = GpErrorModel(GpHyperparameters(1e-12, 1.0, 0.1), features, responses)
    means, _ = model.predict(features)
    np.testing.assert_allclose(means, responses, atol=1e-4)


def test_far_query_reverts_to_prior():
    rng = np.random.default_rng(44)
    hyper, features, responses = _random_instance(rng)
    model = GpErrorModel(hyper, features, responses)
    mean, variance = model.posterior(1e3)
    assert mean == pytest.approx(model.beta[0] + 1e3 * model.beta[1], rel=1e-12)
    assert variance == pytest.approx(hyper.signal_variance + hyper.noise_variance, rel=1e-12)


def test_variance_is_at_least_noise():
    rng = np.random.default_rng(45)
    hyper, features, responses = _random_instance(rng)
    model = GpErrorModel(hyper, features, responses)
    _, variances = model.predict(np.linspace(-3, 3, 61))
    assert np.all(variances >= hyper.noise_variance - 1e-12)


def test_posterior_is_invariant_to_training_order():
    rng = np.random.default_rng(46)
    hyper, features, responses = _random_instance(rng)
    perm = rng.permutation(features.size)
    query = np.linspace(-2, 2, 9)
    m1, v1 = GpErrorModel(hyper, features, responses).predict(query)
    m2, v2 = GpErrorModel(hyper, features[perm], responses[perm]).predict(query)
    np.testing.assert_allclose(m1, m2, atol=1e-11)
    np.testing.assert_allclose(v1, v2, atol=1e-11)


def test_well_conditioned_kernel_needs_no_jitter():
    _, jitter = factor_noisy_kernel(np.linspace(0, 1, 5), GpHyperparameters(0.5, 1.0, 0.1))
    assert jitter == 0.0


def test_model_dict_round_trip():
    rng = np.random.default_rng(47)
    hyper, features, responses = _random_instance(rng)
    model = GpErrorModel(hyper, features, responses)
    model.cv_loss, model.grid_index = 0.25, 3
    restored = GpErrorModel.from_dict(model.to_dict())
    query = np.linspace(-1, 1, 5)
    np.testing.assert_array_equal(restored.predict(query)[0], model.predict(query)[0])
    assert (restored.cv_loss, restored.grid_index) == (0.25, 3)


def test_prediction_interval():
    model = GpErrorModel(GpHyperparameters(1.0, 1e-8, 1.0), [0.0, 1.0, 2.0], [1.0, 1.0, 1.0])
    mean, variance = model.posterior(0.5)
    lo, hi = prediction_interval(model, 0.5, 0.6827)
    assert (lo + hi) / 2 == pytest.approx(mean)
    assert (hi - lo) / 2 == pytest.approx(np.sqrt(variance), abs=1e-3)
    lo, hi = prediction_interval(model, 0.5, 1e-9)
    assert hi - lo < 1e-8


def test_hyperparameter_grid_bounds():
    responses = np.array([0.0, 1.0, 2.0, 3.0])
    sigma_t = np.std(responses, ddof=1)
    grid = hyperparameter_grid(responses, points=4)
    assert len(grid) == 4 ** 3
    first, last = grid[0], grid[-1]
    assert first.noise_variance == pytest.approx(0.01 * sigma_t)
    assert first.signal_variance == pytest.approx(0.1 * sigma_t)
    assert first.length_scale == pytest.approx(0.001 * sigma_t)
    assert last.noise_variance == pytest.approx(0.25 * sigma_t)
    assert last.signal_variance == pytest.approx(sigma_t)
    assert last.length_scale == pytest.approx(0.1 * sigma_t)
    flat = hyperparameter_grid(np.ones(5), points=2)
    assert flat[0].noise_variance == pytest.approx(0.01)


def test_folds_partition_the_data():
    folds = fold_indices(10, 3, seed=5)
    tests = np.concatenate([test for _, test in folds])
    assert sorted(tests.tolist()) == list(range(10))
    assert sorted(len(test) for _, test in folds) == [3, 3, 4]
    again = fold_indices(10, 3, seed=5)
    assert all(np.array_equal(a[1], b[1]) for a, b in zip(folds, again))


def test_single_candidate_grid():
    rng = np.random.default_rng(48)
    hyper, features, responses = _random_instance(rng)
    features, responses = rng.uniform(-1, 1, 12), rng.standard_normal(12)
    model = cross_validate(features, responses, [hyper], K=3)
    assert model.hyper == hyper and model.grid_index == 0
    np.testing.assert_allclose(model.beta, fit_beta_mle(features, responses, hyper))


def test_noiseless_linear_data_is_learned():
    rng = np.random.default_rng(49)
    features = rng.uniform(-1, 1, 30)
    model = cross_validate(features, 2 * features, hyperparameter_grid(2 * features, points=3), K=5)
    held_out = rng.uniform(-1, 1, 20)
    assert fvu(2 * held_out, model.predict(held_out)[0]) < 1e-6


def test_ties_pick_lowest_index():
    rng = np.random.default_rng(50)
    features, responses = rng.uniform(-1, 1, 12), rng.standard_normal(12)
    hyper = GpHyperparameters(0.2, 1.0, 0.1)
    assert cross_validate(features, responses, [hyper, hyper], K=3).grid_index == 0


def test_selection_invariant_to_loss_scaling():
    rng = np.random.default_rng(51)
    features = rng.uniform(-1, 1, 20)
    responses = features + 0.1 * rng.standard_normal(20)
    grid = hyperparameter_grid(responses, points=3)
    a = cross_validate(features, responses, grid, K=4, kind=LossModule(likelihood_alpha=1.0))
    b = cross_validate(features, responses, grid, K=4, kind=LossModule(likelihood_alpha=7.5))
    assert a.grid_index == b.grid_index


def test_interval_selection_beats_worst_candidate():
    rng = np.random.default_rng(52)
    features = rng.uniform(-1, 1, 30)
    responses = features + 0.2 * rng.standard_normal(30)
    grid = hyperparameter_grid(responses, points=3)
    losses = grid_losses(features, responses, grid, 5, 'interval:0.8', 0)
    model = cross_validate(features, responses, grid, K=5, kind='interval:0.8')
    assert model.cv_loss == np.nanmin(losses)
    assert model.cv_loss <= np.nanmax(losses)


def test_all_candidates_failing_raises():
    with pytest.raises(SelectionError):
        cross_validate(np.full(6, 0.5), np.arange(6.0), [GpHyperparameters(0.1, 1.0, 0.1)], K=3)


def test_cross_validation_guards():
    grid = [GpHyperparameters(0.1, 1.0, 0.1)]
    with pytest.raises(ContractError):
        cross_validate(np.arange(5.0), np.arange(5.0), grid, K=1)
    with pytest.raises(ContractError):
        cross_validate(np.arange(3.0), np.arange(3.0), grid, K=4)
    with pytest.raises(ContractError):
        cross_validate(np.arange(5.0), np.arange(5.0), [], K=2)
