"""Column transforms applied before testing real data."""

import logging
from typing import Union

import numpy as np
from scipy import stats

from adaglr.errors import DataError, InvalidArgumentError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def yeo_johnson(u: ArrayLike, lam: float) -> ArrayLike:
    """Yeo-Johnson power transform psi(lambda, u) via :func:`scipy.stats.yeojohnson`.

    Branches:
        u >= 0, lambda != 0: ((u + 1)^lambda - 1) / lambda
        u >= 0, lambda == 0: log(u + 1)
        u < 0, lambda != 2: -((1 - u)^(2 - lambda) - 1) / (2 - lambda)
        u < 0, lambda == 2: -log(1 - u)

    Args:
        u: Scalar or array of finite values
        lam: Transformation parameter

    Returns:
        Transformed value(s), scalar in and scalar out

    Raises:
        InvalidArgumentError: If lambda or any u is not finite
    """
    if not np.isfinite(lam):
        raise InvalidArgumentError(f"Yeo-Johnson lambda must be finite, got {lam}")
    arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("Yeo-Johnson input must be finite")

    out = stats.yeojohnson(arr.ravel(), lmbda=float(lam)).reshape(arr.shape)
    if np.ndim(u) == 0:
        return float(out)
    return out


def standardize(values: np.ndarray) -> np.ndarray:
    """Center each column and scale it by its sample standard deviation (divisor n - 1).

    Raises:
        DataError: If a column is constant or there are fewer than two rows
    """
    values = np.asarray(values, dtype=float)
    if values.shape[0] < 2:
        raise DataError("standardization needs at least two rows")
    sd = values.std(axis=0, ddof=1)
    if np.any(sd == 0.0):
        raise DataError("cannot standardize a constant column")
    return (values - values.mean(axis=0)) / sd
