"""Least-squares fit of the parametric single-index null model.

The null model is y = g(beta'x, theta) + e. Linear forms are solved exactly
through a pivoted QR decomposition; nonlinear forms go through the MINPACK
Levenberg-Marquardt driver with random restarts around a linear pilot fit.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
from scipy import linalg, optimize

from adaglr.core.data import Dataset
from adaglr.errors import ConfigError, ConvergenceError, DataError, SingularDesignError

logger = logging.getLogger(__name__)

MeanFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]
GradientFunction = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]


class NullForm(str, Enum):
    """Supported null-model link forms."""

    LINEAR = "linear"
    SCALED_EXP = "scaled-exp"
    CUSTOM = "custom"


@dataclass(frozen=True)
class NullModelSpec:
    """Parametric null model g(beta'x, theta).

    For ``CUSTOM`` forms ``mean_fn(index, theta)`` returns the regression mean
    given the single index X @ beta, and the optional ``gradient_fn`` returns the
    pair (dg/dindex of shape (n,), dg/dtheta of shape (n, d)).
    """

    form: NullForm
    p: int
    d: int = 0
    intercept: bool = True
    mean_fn: Optional[MeanFunction] = None
    gradient_fn: Optional[GradientFunction] = None

    def __post_init__(self) -> None:
        if self.p < 1 or self.d < 0:
            raise ConfigError(f"null model needs p >= 1 and d >= 0, got p={self.p}, d={self.d}")
        if self.form is NullForm.CUSTOM and self.mean_fn is None:
            raise ConfigError("custom null model requires a mean function")

    @classmethod
    def linear(cls, p: int, intercept: bool = True) -> "NullModelSpec":
        return cls(NullForm.LINEAR, p, 1 if intercept else 0, intercept)

    @classmethod
    def scaled_exp(cls, p: int) -> "NullModelSpec":
        """theta1 * exp(theta2 * beta'x) with unit-norm beta."""
        return cls(NullForm.SCALED_EXP, p, 2, False)

    @classmethod
    def custom(
        cls,
        p: int,
        d: int,
        mean_fn: MeanFunction,
        gradient_fn: Optional[GradientFunction] = None,
    ) -> "NullModelSpec":
        return cls(NullForm.CUSTOM, p, d, False, mean_fn, gradient_fn)

    def mean(self, X: np.ndarray, beta: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Evaluate g(beta'x, theta) row-wise."""
        index = X @ beta
        if self.form is NullForm.LINEAR:
            return index + (theta[0] if self.intercept else 0.0)
        if self.form is NullForm.SCALED_EXP:
            return theta[0] * np.exp(theta[1] * index)
        return np.asarray(self.mean_fn(index, theta), dtype=float)


@dataclass(frozen=True)
class OptimizerOptions:
    """Settings for nonlinear null fits.

    Attributes:
        max_nfev: Function-evaluation cap per Levenberg-Marquardt run
        restarts: Random restarts attempted after a failed run
        seed: Seed for the restart directions
        tol: ftol/xtol/gtol passed to the driver
        start: Optional starting vector in the optimizer's parametrization
    """

    max_nfev: int = 2000
    restarts: int = 5
    seed: int = 0
    tol: float = 1e-12
    start: Optional[np.ndarray] = None


@dataclass(frozen=True)
class NullModelFit:
    """Fitted null model."""

    beta_hat: np.ndarray
    theta_hat: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    rss0: float
    converged: bool = True
    iterations: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "beta_hat": self.beta_hat.tolist(),
            "theta_hat": self.theta_hat.tolist(),
            "rss0": self.rss0,
            "converged": self.converged,
            "iterations": self.iterations,
        }


def _make_fit(data: Dataset, fitted: np.ndarray, beta, theta, converged=True, iterations=0) -> NullModelFit:
    residuals = data.y - fitted
    return NullModelFit(
        beta_hat=np.asarray(beta, dtype=float),
        theta_hat=np.asarray(theta, dtype=float),
        residuals=residuals,
        fitted=fitted,
        rss0=float(residuals @ residuals),
        converged=converged,
        iterations=iterations,
    )


def _fit_linear(data: Dataset, intercept: bool) -> NullModelFit:
    design = np.column_stack([data.X, np.ones(data.n)]) if intercept else data.X
    Q, R, piv = linalg.qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = max(design.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    if diag.size == 0 or diag[0] == 0.0 or diag[-1] <= tol:
        rank = int(np.sum(diag > tol))
        raise SingularDesignError(f"linear design has rank {rank} < {design.shape[1]} columns")
    coef = np.empty(design.shape[1])
    coef[piv] = linalg.solve_triangular(R, Q.T @ data.y)
    fitted = design @ coef
    theta = coef[data.p:] if intercept else np.empty(0)
    return _make_fit(data, fitted, coef[: data.p], theta)


class _Problem:
    """Residuals and Jacobian of a nonlinear null fit in optimizer coordinates."""

    def __init__(self, data: Dataset, spec: NullModelSpec) -> None:
        self.X = data.X
        self.y = data.y
        self.spec = spec

    def mean(self, z: np.ndarray) -> np.ndarray:
        if self.spec.form is NullForm.SCALED_EXP:
            return z[0] * np.exp(self.X @ z[1:])
        p = self.spec.p
        return np.asarray(self.spec.mean_fn(self.X @ z[:p], z[p:]), dtype=float)

    def residuals(self, z: np.ndarray) -> np.ndarray:
        return self.mean(z) - self.y

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        if self.spec.form is NullForm.SCALED_EXP:
            e = np.exp(self.X @ z[1:])
            return np.column_stack([e, (z[0] * e)[:, None] * self.X])
        p = self.spec.p
        if self.spec.gradient_fn is not None:
            g_index, g_theta = self.spec.gradient_fn(self.X @ z[:p], z[p:])
            g_theta = np.asarray(g_theta, dtype=float).reshape(self.X.shape[0], -1)
            return np.column_stack([np.asarray(g_index)[:, None] * self.X, g_theta])
        return self._central_differences(z)

    def _central_differences(self, z: np.ndarray) -> np.ndarray:
        J = np.empty((self.X.shape[0], z.size))
        for k in range(z.size):
            step = 1e-6 * (1.0 + abs(z[k]))
            up, down = z.copy(), z.copy()
            up[k] += step
            down[k] -= step
            J[:, k] = (self.mean(up) - self.mean(down)) / (2.0 * step)
        return J

    def start(self, data: Dataset) -> np.ndarray:
        pilot = _fit_linear(data, intercept=True)
        if self.spec.form is NullForm.SCALED_EXP:
            level = float(np.mean(data.y))
            if abs(level) < 1e-8:
                level = 1.0
            return np.concatenate([[level], pilot.beta_hat / level])
        return np.concatenate([pilot.beta_hat, np.zeros(self.spec.d)])

    def to_parameters(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        if self.spec.form is NullForm.CUSTOM:
            return z[: self.spec.p].copy(), z[self.spec.p:].copy()
        gamma = z[1:]
        scale = float(np.linalg.norm(gamma))
        if scale == 0.0:
            beta = np.zeros_like(gamma)
            beta[0] = 1.0
            return beta, np.array([z[0], 0.0])
        beta = gamma / scale
        first = beta[np.flatnonzero(beta)[0]]
        if first < 0:
            beta, scale = -beta, -scale
        return beta, np.array([z[0], scale])


def _fit_nonlinear(data: Dataset, spec: NullModelSpec, options: OptimizerOptions) -> NullModelFit:
    problem = _Problem(data, spec)
    z0 = np.asarray(options.start, dtype=float) if options.start is not None else problem.start(data)
    rng = np.random.default_rng(options.seed)

    best = None
    total_nfev = 0
    for attempt in range(options.restarts + 1):
        if attempt == 0:
            z_start = z0
        else:
            direction = rng.standard_normal(z0.size)
            direction *= rng.uniform() ** (1.0 / z0.size) / np.linalg.norm(direction)
            z_start = z0 + direction
            logger.debug(f"null fit restart {attempt} from {z_start}")
        try:
            result = optimize.least_squares(
                problem.residuals,
                z_start,
                jac=problem.jacobian,
                method="lm",
                xtol=options.tol,
                ftol=options.tol,
                gtol=options.tol,
                max_nfev=options.max_nfev,
            )
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as e:
            logger.debug(f"null fit attempt {attempt} raised {e}")
            continue
        total_nfev += result.nfev
        if not np.all(np.isfinite(result.x)):
            continue
        if best is None or result.cost < best.cost:
            best = result
        if result.success:
            break

    if best is None:
        raise ConvergenceError("nonlinear null fit failed on every start", best=None)
    beta, theta = problem.to_parameters(best.x)
    fit = _make_fit(data, problem.mean(best.x), beta, theta, bool(best.success), total_nfev)
    if not best.success:
        raise ConvergenceError(
            f"nonlinear null fit did not converge after {options.restarts} restarts: {best.message}",
            best=fit,
        )
    return fit


def fit_null_model(
    data: Dataset,
    spec: NullModelSpec,
    options: Optional[OptimizerOptions] = None,
) -> NullModelFit:
    """Fit the null model by least squares.

    Args:
        data: Dataset to fit
        spec: Null model specification
        options: Optimizer settings for nonlinear forms

    Returns:
        NullModelFit with residuals and RSS0

    Raises:
        ConfigError: If spec.p does not match the data
        DataError: If n <= p + d
        SingularDesignError: If a linear design is rank deficient
        ConvergenceError: If a nonlinear fit fails after all restarts
    """
    if spec.p != data.p:
        raise ConfigError(f"null model has p={spec.p} but data has {data.p} covariates")
    if data.n <= spec.p + spec.d:
        raise DataError(f"need n > p + d = {spec.p + spec.d} observations, got {data.n}")
    if spec.form is NullForm.LINEAR:
        fit = _fit_linear(data, spec.intercept)
    else:
        fit = _fit_nonlinear(data, spec, options or OptimizerOptions())
    logger.debug(f"null fit ({spec.form.value}): rss0={fit.rss0:.6g}, nfev={fit.iterations}")
    return fit
