"""Quartic kernel and its constants.

This module provides the quartic (biweight) kernel used by every smoother in
the package, its coordinate-wise product form for projected covariates, and
the kernel integrals that enter the Wilks-type null limits.
"""

import logging
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Dict

import numpy as np
from scipy import integrate

from adaglr.errors import InvalidArgumentError, QuadratureError

logger = logging.getLogger(__name__)

K_AT_ZERO = 15.0 / 16.0


@dataclass(frozen=True)
class KernelConstants:
    """Kernel integrals appearing in the bias and variance of the statistics.

    Attributes:
        k_at_zero: Kernel value at the origin
        int_k_squared: Integral of the squared kernel
        int_two_k_minus_conv_squared: Integral of (2K - K*K)^2
        quadrature_tolerance: Absolute tolerance requested from the quadrature
    """

    k_at_zero: float
    int_k_squared: float
    int_two_k_minus_conv_squared: float
    quadrature_tolerance: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def quartic(u: np.ndarray) -> np.ndarray:
    """Vectorized quartic kernel 15/16 (1 - u^2)^2 on [-1, 1], zero outside."""
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) <= 1.0
    return np.where(inside, K_AT_ZERO * (1.0 - u * u) ** 2, 0.0)


def kernel_eval(u: float) -> float:
    """Evaluate the univariate quartic kernel.

    Args:
        u: Evaluation point

    Returns:
        Kernel value at u

    Raises:
        InvalidArgumentError: If u is not finite
    """
    if not np.isfinite(u):
        raise InvalidArgumentError(f"kernel argument must be finite, got {u}")
    return float(quartic(u))


def product_kernel(U: np.ndarray) -> np.ndarray:
    """Product of quartic kernels over the last axis of U."""
    U = np.asarray(U, dtype=float)
    return np.prod(quartic(U), axis=-1)


def product_kernel_eval(u: np.ndarray) -> float:
    """Evaluate the q-dimensional product quartic kernel at one point.

    Args:
        u: Coordinates, length q >= 1

    Returns:
        Product of the coordinate-wise kernel values

    Raises:
        InvalidArgumentError: If u is empty or has non-finite entries
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.size == 0:
        raise InvalidArgumentError("product kernel needs at least one coordinate")
    if not np.all(np.isfinite(u)):
        raise InvalidArgumentError("product kernel coordinates must be finite")
    return float(product_kernel(u))


def _checked_quad(func, lower: float, upper: float, tolerance: float, points=None) -> float:
    value, abserr = integrate.quad(
        func, lower, upper, epsabs=tolerance, epsrel=tolerance, points=points, limit=200
    )
    if abserr > max(tolerance, tolerance * abs(value)) * 10.0:
        raise QuadratureError(
            f"quadrature on [{lower}, {upper}] reached error {abserr:.3e}, requested {tolerance:.1e}"
        )
    return value


@lru_cache(maxsize=4096)
def _convolution(x: float, tolerance: float) -> float:
    lower, upper = max(-1.0, x - 1.0), min(1.0, x + 1.0)
    if lower >= upper:
        return 0.0
    return _checked_quad(lambda t: kernel_eval(t) * kernel_eval(x - t), lower, upper, tolerance)


def kernel_convolution(x: float, tolerance: float = 1e-10) -> float:
    """Self-convolution K*K(x) = int K(t) K(x - t) dt, supported on [-2, 2]."""
    return _convolution(float(x), float(tolerance))


def kernel_constants(tolerance: float = 1e-10) -> KernelConstants:
    """Compute the kernel constants by adaptive quadrature.

    Args:
        tolerance: Absolute and relative quadrature tolerance

    Returns:
        KernelConstants for the quartic kernel

    Raises:
        InvalidArgumentError: If tolerance is not positive
        QuadratureError: If an integral does not converge
    """
    if not tolerance > 0:
        raise InvalidArgumentError(f"tolerance must be positive, got {tolerance}")

    int_k_squared = _checked_quad(lambda u: kernel_eval(u) ** 2, -1.0, 1.0, tolerance)

    def integrand(x: float) -> float:
        return (2.0 * kernel_eval(x) - _convolution(x, tolerance)) ** 2

    # the integrand has kinks where the supports of K and K*K meet
    int_two_k = _checked_quad(integrand, -2.0, 2.0, tolerance, points=[-1.0, 0.0, 1.0])

    logger.debug(f"kernel constants: int K^2={int_k_squared:.12f}, int (2K-K*K)^2={int_two_k:.12f}")
    return KernelConstants(
        k_at_zero=K_AT_ZERO,
        int_k_squared=int_k_squared,
        int_two_k_minus_conv_squared=int_two_k,
        quadrature_tolerance=tolerance,
    )
