import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaglr.core.data import Dataset
from adaglr.core.nullfit import NullForm, NullModelSpec, OptimizerOptions, fit_null_model
from adaglr.errors import ConfigError, ConvergenceError, DataError, SingularDesignError


def test_linear_fit_recovers_exact_coefficients(rng):
    X = rng.standard_normal((40, 3))
    y = X @ np.array([2.0, -1.0, 0.5]) + 3.0
    fit = fit_null_model(Dataset(X, y), NullModelSpec.linear(3))
    np.testing.assert_allclose(fit.beta_hat, [2.0, -1.0, 0.5], atol=1e-10)
    np.testing.assert_allclose(fit.theta_hat, [3.0], atol=1e-10)
    assert fit.rss0 < 1e-18


def test_linear_residuals_are_orthogonal_to_design(linear_data):
    fit = fit_null_model(linear_data, NullModelSpec.linear(3))
    np.testing.assert_allclose(linear_data.X.T @ fit.residuals, 0.0, atol=1e-9)
    assert abs(fit.residuals.sum()) < 1e-9
    assert fit.rss0 == pytest.approx(float(fit.residuals @ fit.residuals))
    np.testing.assert_allclose(fit.fitted + fit.residuals, linear_data.y)


def test_linear_fit_without_intercept(linear_data):
    fit = fit_null_model(linear_data, NullModelSpec.linear(3, intercept=False))
    assert fit.theta_hat.size == 0
    np.testing.assert_allclose(linear_data.X.T @ fit.residuals, 0.0, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(min_value=-5, max_value=5), min_size=3, max_size=3))
def test_linear_fit_is_equivariant_to_added_linear_terms(shift):
    rng = np.random.default_rng(7)
    X = rng.standard_normal((30, 3))
    y = rng.standard_normal(30)
    spec = NullModelSpec.linear(3)
    base = fit_null_model(Dataset(X, y), spec)
    shifted = fit_null_model(Dataset(X, y + X @ np.array(shift)), spec)
    np.testing.assert_allclose(shifted.beta_hat, base.beta_hat + np.array(shift), atol=1e-8)
    np.testing.assert_allclose(shifted.residuals, base.residuals, atol=1e-8)


def test_rank_deficient_design_raises(rng):
    X = rng.standard_normal((20, 2))
    X = np.column_stack([X, X[:, 0] + X[:, 1]])
    with pytest.raises(SingularDesignError):
        fit_null_model(Dataset(X, rng.standard_normal(20)), NullModelSpec.linear(3))


def test_dimension_mismatch_and_small_samples(rng):
    data = Dataset(rng.standard_normal((10, 2)), rng.standard_normal(10))
    with pytest.raises(ConfigError):
        fit_null_model(data, NullModelSpec.linear(3))
    tiny = Dataset(rng.standard_normal((3, 2)), rng.standard_normal(3))
    with pytest.raises(DataError):
        fit_null_model(tiny, NullModelSpec.linear(2))


def test_scaled_exponential_fit_recovers_parameters(rng):
    p = 4
    beta = np.ones(p) / np.sqrt(p)
    X = rng.standard_normal((150, p))
    y = 1.5 * np.exp(0.5 * X @ beta) + 0.01 * rng.standard_normal(150)
    fit = fit_null_model(Dataset(X, y), NullModelSpec.scaled_exp(p))
    assert fit.converged
    assert np.linalg.norm(fit.beta_hat) == pytest.approx(1.0)
    np.testing.assert_allclose(fit.beta_hat, beta, atol=0.02)
    np.testing.assert_allclose(fit.theta_hat, [1.5, 0.5], atol=0.02)
    spec = NullModelSpec.scaled_exp(p)
    np.testing.assert_allclose(spec.mean(X, fit.beta_hat, fit.theta_hat), fit.fitted, rtol=1e-8)


def _logistic(index, theta):
    return theta[0] / (1.0 + np.exp(-index))


def _logistic_gradient(index, theta):
    s = 1.0 / (1.0 + np.exp(-index))
    return theta[0] * s * (1.0 - s), s[:, None]


def test_custom_fit_with_and_without_gradient_agree(rng):
    X = rng.standard_normal((120, 2))
    y = _logistic(X @ np.array([1.0, -0.5]), [2.0]) + 0.02 * rng.standard_normal(120)
    start = np.array([0.8, -0.3, 1.5])
    options = OptimizerOptions(start=start)
    analytic = fit_null_model(Dataset(X, y), NullModelSpec.custom(2, 1, _logistic, _logistic_gradient), options)
    numeric = fit_null_model(Dataset(X, y), NullModelSpec.custom(2, 1, _logistic), options)
    np.testing.assert_allclose(analytic.beta_hat, [1.0, -0.5], atol=0.1)
    np.testing.assert_allclose(analytic.beta_hat, numeric.beta_hat, atol=1e-5)
    assert analytic.rss0 == pytest.approx(numeric.rss0, rel=1e-6)


def test_custom_spec_requires_mean_function():
    with pytest.raises(ConfigError):
        NullModelSpec(NullForm.CUSTOM, p=2, d=1)


def test_failed_nonlinear_fit_reports_best_iterate(rng):
    X = rng.standard_normal((30, 2))
    y = rng.standard_normal(30)
    options = OptimizerOptions(max_nfev=1, restarts=0)
    with pytest.raises(ConvergenceError) as info:
        fit_null_model(Dataset(X, y), NullModelSpec.scaled_exp(2), options)
    assert info.value.best is not None
    assert info.value.best.converged is False


def test_null_fit_serializes(linear_data):
    payload = fit_null_model(linear_data, NullModelSpec.linear(3)).to_dict()
    assert set(payload) == {"beta_hat", "theta_hat", "rss0", "converged", "iterations"}
    assert len(payload["beta_hat"]) == 3
