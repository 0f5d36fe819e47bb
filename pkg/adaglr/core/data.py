"""Dataset container shared by every test and estimator."""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from adaglr.errors import ConfigError, DataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dataset:
    """An n×p covariate matrix with a length-n response.

    Attributes:
        X: Covariates, shape (n, p)
        y: Response, shape (n,)
        covariate_names: Optional column names for X
        response_name: Optional name of the response column
    """

    X: np.ndarray
    y: np.ndarray
    covariate_names: List[str] = field(default_factory=list)
    response_name: Optional[str] = None

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise DataError(f"covariates must be a 2-d array, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"covariates have {X.shape[0]} rows but response has {y.shape[0]}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError("dataset contains non-finite values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if not self.covariate_names:
            object.__setattr__(self, "covariate_names", [f"x{k + 1}" for k in range(X.shape[1])])

    @property
    def n(self) -> int:
        """Number of observations."""
        return self.X.shape[0]

    @property
    def p(self) -> int:
        """Number of covariates."""
        return self.X.shape[1]

    def with_response(self, y: np.ndarray) -> "Dataset":
        """Return a copy with the response replaced (used by the bootstrap)."""
        return Dataset(self.X, y, list(self.covariate_names), self.response_name)


@dataclass(frozen=True)
class ColumnSchema:
    """Which CSV columns form the dataset and how they are preprocessed.

    Attributes:
        response: Response column name
        covariates: Ordered covariate column names
        standardize: Center and scale every selected column (divisor n - 1)
        yeo_johnson_lambda: Apply the Yeo-Johnson transform with this lambda first
        intercept: Fit an intercept in the linear null; None picks the default
            (with intercept unless a transform is requested)
    """

    response: str
    covariates: List[str]
    standardize: bool = True
    yeo_johnson_lambda: Optional[float] = None
    intercept: Optional[bool] = None

    def __post_init__(self) -> None:
        if not self.covariates:
            raise ConfigError("at least one covariate column is required")
        if self.response in self.covariates:
            raise ConfigError(f"response column '{self.response}' is also listed as a covariate")
        if len(set(self.covariates)) != len(self.covariates):
            raise ConfigError("covariate columns must be distinct")

    @property
    def columns(self) -> List[str]:
        return [self.response, *self.covariates]

    @property
    def fit_intercept(self) -> bool:
        if self.intercept is not None:
            return self.intercept
        return self.yeo_johnson_lambda is None
