import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adaglr.core.transforms import standardize, yeo_johnson
from adaglr.errors import DataError, InvalidArgumentError

lambdas = st.floats(min_value=-3.0, max_value=5.0, allow_nan=False)


def test_known_values():
    assert yeo_johnson(5.0, 1.0) == pytest.approx(5.0)
    assert yeo_johnson(math.e - 1.0, 0.0) == pytest.approx(1.0)
    assert yeo_johnson(1.0, 0.3) == pytest.approx((2 ** 0.3 - 1) / 0.3)
    assert yeo_johnson(1.0, 0.3) == pytest.approx(0.7704814, abs=1e-6)
    assert yeo_johnson(-1.0, 2.0) == pytest.approx(-math.log(2.0))
    assert yeo_johnson(-3.0, 1.0) == pytest.approx(-3.0)


def test_scalar_in_scalar_out():
    assert isinstance(yeo_johnson(0.5, 0.3), float)
    out = yeo_johnson(np.array([[-1.0, 0.0], [1.0, 2.0]]), 0.3)
    assert out.shape == (2, 2)


@given(lambdas)
def test_zero_is_fixed(lam):
    assert yeo_johnson(0.0, lam) == 0.0


@given(lambdas)
def test_strictly_increasing(lam):
    grid = np.linspace(-10.0, 10.0, 401)
    assert np.all(np.diff(yeo_johnson(grid, lam)) > 0)


@pytest.mark.parametrize("u, lam", [(3.0, 0.0), (0.5, 0.0), (-3.0, 2.0), (-0.5, 2.0)])
def test_continuous_at_log_branches(u, lam):
    at = yeo_johnson(u, lam)
    for eps in (1e-6, -1e-6):
        assert yeo_johnson(u, lam + eps) == pytest.approx(at, abs=1e-5)


@pytest.mark.parametrize("u, lam", [(np.inf, 1.0), (np.nan, 1.0), (1.0, np.nan)])
def test_non_finite_input(u, lam):
    with pytest.raises(InvalidArgumentError):
        yeo_johnson(u, lam)


def test_standardize_uses_sample_deviation():
    values = np.array([[1.0, 2.0], [2.0, 4.0], [4.5, 5.0]])
    out = standardize(values)
    np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(out.std(axis=0, ddof=1), 1.0, atol=1e-12)


def test_standardize_rejects_degenerate_columns():
    with pytest.raises(DataError):
        standardize(np.array([[1.0, 2.0], [1.0, 3.0]]))
    with pytest.raises(DataError):
        standardize(np.array([[1.0, 2.0]]))
