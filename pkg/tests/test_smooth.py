import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaglr.core.data import Dataset
from adaglr.core.smooth import kernel_matrix, local_linear_fit, nw_weight_matrix, orthonormalize
from adaglr.errors import DegenerateBandwidthError, InvalidArgumentError, LocalFitError


@pytest.mark.parametrize("loo", [False, True])
def test_weights_rows_sum_to_one(linear_data, loo):
    sw = nw_weight_matrix(linear_data.X, np.eye(3)[:, :2], 2.0, loo=loo)
    np.testing.assert_allclose(sw.weights.sum(axis=1), 1.0, atol=1e-12)
    assert sw.q_used == 2
    assert sw.dropped.size == 0
    assert np.all(sw.weights >= 0)
    if loo:
        np.testing.assert_array_equal(np.diag(sw.weights), 0.0)
    else:
        assert np.all(np.diag(sw.weights) > 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1), st.floats(min_value=0.3, max_value=5.0))
def test_kernel_matrix_is_symmetric(seed, h):
    Z = np.random.default_rng(seed).standard_normal((12, 2))
    K = kernel_matrix(Z, h)
    np.testing.assert_allclose(K, K.T, atol=1e-15)
    np.testing.assert_allclose(np.diag(K), (15 / 16) ** 2)


def test_identity_projection_matches_none(linear_data):
    a = nw_weight_matrix(linear_data.X, None, 1.5)
    b = nw_weight_matrix(linear_data.X, np.eye(3), 1.5)
    np.testing.assert_allclose(a.weights, b.weights)


def test_non_orthonormal_projection_is_fixed_with_warning(linear_data, caplog):
    B = np.array([[2.0], [0.0], [0.0]])
    with caplog.at_level(logging.WARNING, logger="adaglr.core.smooth"):
        sw = nw_weight_matrix(linear_data.X, B, 1.0)
    assert sw.reorthonormalized
    assert "re-orthonormalized" in caplog.text
    reference = nw_weight_matrix(linear_data.X, np.array([[1.0], [0.0], [0.0]]), 1.0)
    np.testing.assert_allclose(sw.weights, reference.weights)


def test_orthonormalize_keeps_orthonormal_input():
    B = np.eye(4)[:, [0, 2]]
    out, changed = orthonormalize(B)
    assert not changed
    np.testing.assert_array_equal(out, B)


@pytest.mark.parametrize("h", [0.0, -1.0, np.inf, np.nan])
def test_bad_bandwidth_raises(linear_data, h):
    with pytest.raises(InvalidArgumentError):
        nw_weight_matrix(linear_data.X, None, h)


def test_isolated_row_falls_back_to_uniform_weights():
    X = np.array([[0.0], [0.1], [0.2], [10.0]])
    sw = nw_weight_matrix(X, None, 0.5, loo=True)
    np.testing.assert_array_equal(sw.dropped, [3])
    np.testing.assert_allclose(sw.weights[3], [1 / 3, 1 / 3, 1 / 3, 0.0])
    assert list(sw.retained) == [True, True, True, False]
    # the point itself keeps it in the full smoother
    assert nw_weight_matrix(X, None, 0.5).dropped.size == 0


def test_every_row_isolated_raises():
    X = np.array([[0.0], [10.0], [20.0]])
    with pytest.raises(DegenerateBandwidthError):
        nw_weight_matrix(X, None, 0.5, loo=True)


def test_smooth_reproduces_constants(linear_data):
    sw = nw_weight_matrix(linear_data.X, None, 2.0, loo=True)
    np.testing.assert_allclose(sw.smooth(np.full(linear_data.n, 4.0)), 4.0)


def test_local_linear_fit_is_exact_for_linear_mean():
    rng = np.random.default_rng(3)
    X = rng.uniform(size=(40, 2))
    y = 2.0 + X @ np.array([1.0, -2.0])
    fit = local_linear_fit(Dataset(X, y), None, 1.0)
    assert fit.flagged.size == 0
    np.testing.assert_allclose(fit.b_hat, np.tile([1.0, -2.0], (40, 1)), atol=1e-8)
    np.testing.assert_allclose(fit.a_hat, y, atol=1e-8)


def test_local_linear_fit_with_projection(single_index_data):
    B = np.array([[1.0], [1.0], [0.0]]) / np.sqrt(2)
    fit = local_linear_fit(single_index_data, B, 0.8)
    assert fit.b_hat.shape == (single_index_data.n, 3)
    assert np.all(np.isfinite(fit.b_hat))


def test_tiny_bandwidth_fails_local_fit():
    X = np.random.default_rng(4).uniform(size=(20, 2))
    with pytest.raises(LocalFitError):
        local_linear_fit(Dataset(X, X.sum(axis=1)), None, 1e-6)
