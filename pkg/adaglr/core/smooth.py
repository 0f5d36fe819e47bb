"""Kernel smoothing engine.

Nadaraya-Watson weight matrices over projected covariates (full and
leave-one-out) and local-linear gradient fits. The same routines drive the
test statistics and the OPG/MAVE direction estimates.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from adaglr.core.data import Dataset
from adaglr.core.kernels import quartic
from adaglr.errors import DegenerateBandwidthError, InvalidArgumentError, LocalFitError

logger = logging.getLogger(__name__)

DENOMINATOR_FLOOR = 1e-12
LOCAL_RIDGE = 1e-8


@dataclass(frozen=True)
class SmootherWeights:
    """Row-normalized kernel weights.

    Attributes:
        weights: n×n matrix, row i holds the weights used to estimate m at x_i
        loo: Whether the diagonal was excluded (leave-one-out)
        bandwidth: Bandwidth h
        q_used: Dimension of the projected covariates
        dropped: Rows whose raw kernel sum fell below the floor
        reorthonormalized: Whether the projection had to be re-orthonormalized
    """

    weights: np.ndarray
    loo: bool
    bandwidth: float
    q_used: int
    dropped: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    reorthonormalized: bool = False

    @property
    def retained(self) -> np.ndarray:
        """Boolean mask of rows not dropped."""
        mask = np.ones(self.weights.shape[0], dtype=bool)
        mask[self.dropped] = False
        return mask

    def smooth(self, y: np.ndarray) -> np.ndarray:
        """Kernel estimate sum_j w_ij y_j for every row i."""
        return self.weights @ y


@dataclass(frozen=True)
class LocalLinearFit:
    """Local-linear intercepts and gradients at every sample point."""

    a_hat: np.ndarray
    b_hat: np.ndarray
    bandwidth: float
    flagged: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))


def orthonormalize(B: np.ndarray, atol: float = 1e-6) -> Tuple[np.ndarray, bool]:
    """Return B with orthonormal columns and whether it had to be changed.

    Columns are Gram-Schmidt orthonormalized (QR with a positive diagonal) when
    B'B differs from the identity by more than atol.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    if np.allclose(B.T @ B, np.eye(B.shape[1]), atol=atol, rtol=0.0):
        return B, False
    Q, R = np.linalg.qr(B)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs, True


def kernel_matrix(Z: np.ndarray, h: float) -> np.ndarray:
    """Raw product-kernel matrix K[i, j] = prod_c K((z_ic - z_jc) / h)."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z.reshape(-1, 1)
    K = np.ones((Z.shape[0], Z.shape[0]))
    for c in range(Z.shape[1]):
        K *= quartic((Z[:, None, c] - Z[None, :, c]) / h)
    return K


def _check_bandwidth(h: float) -> None:
    if not (np.isfinite(h) and h > 0):
        raise InvalidArgumentError(f"bandwidth must be positive and finite, got {h}")


def nw_weight_matrix(
    X: np.ndarray,
    B: Optional[np.ndarray],
    h: float,
    loo: bool = False,
) -> SmootherWeights:
    """Build Nadaraya-Watson weights on the projected covariates B'x.

    Args:
        X: Covariates, shape (n, p)
        B: Projection with (near) orthonormal columns, shape (p, q); None means identity
        h: Bandwidth
        loo: Exclude the diagonal (leave-one-out weights)

    Returns:
        SmootherWeights with rows summing to one

    Raises:
        InvalidArgumentError: If h is not positive
        DegenerateBandwidthError: If every row falls below the denominator floor
    """
    _check_bandwidth(h)
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    changed = False
    if B is None:
        Z = X
    else:
        B, changed = orthonormalize(B)
        if changed:
            logger.warning("projection matrix was not orthonormal; re-orthonormalized")
        Z = X @ B

    K = kernel_matrix(Z, h)
    if loo:
        np.fill_diagonal(K, 0.0)
    denominators = K.sum(axis=1)
    dropped = np.flatnonzero(denominators < n * DENOMINATOR_FLOOR)
    if dropped.size == n:
        raise DegenerateBandwidthError(f"bandwidth {h:.4g} leaves every row without neighbours")

    safe = np.where(denominators < n * DENOMINATOR_FLOOR, 1.0, denominators)
    W = K / safe[:, None]
    if dropped.size:
        logger.debug(f"{dropped.size} of {n} rows dropped at bandwidth {h:.4g}")
        fallback = np.full(n, 1.0 / max(n - 1, 1))
        for i in dropped:
            W[i] = fallback
            W[i, i] = 0.0
    return SmootherWeights(
        weights=W,
        loo=loo,
        bandwidth=float(h),
        q_used=Z.shape[1],
        dropped=dropped,
        reorthonormalized=changed,
    )


def weighted_local_fit(
    design: np.ndarray, k: np.ndarray, y: np.ndarray
) -> Tuple[np.ndarray, bool]:
    """Solve one kernel-weighted least-squares problem.

    Args:
        design: Local design matrix, shape (n, m)
        k: Nonnegative kernel weights, shape (n,)
        y: Response, shape (n,)

    Returns:
        Tuple of (coefficients, flagged). Flagged fits had too few supporting
        points or a rank-deficient weighted design and were solved with a ridge
        pseudo-inverse.
    """
    m = design.shape[1]
    weighted = design * k[:, None]
    G = design.T @ weighted
    r = weighted.T @ y
    flagged = np.count_nonzero(k > 0) < m + 1
    if not flagged:
        coef, _, rank, _ = linalg.lstsq(G, r)
        if rank == m:
            return coef, False
        flagged = True
    ridge = LOCAL_RIDGE * np.trace(G)
    if ridge <= 0:
        ridge = LOCAL_RIDGE
    return linalg.pinv(G + ridge * np.eye(m)) @ r, flagged


def local_linear_fit(
    data: Dataset,
    B: Optional[np.ndarray],
    h: float,
    orthonormal: bool = True,
) -> LocalLinearFit:
    """Local-linear intercepts and gradients at every sample point.

    The kernel acts on B'(x_i - x_j) (the full p-dimensional product kernel when
    B is None); the local design is (1, x_i - x_j).

    Args:
        data: Dataset
        B: Projection for the kernel argument, or None for the identity
        h: Bandwidth
        orthonormal: Orthonormalize B first; False keeps a scaled metric as given

    Returns:
        LocalLinearFit with a_hat (n,) and b_hat (n, p)

    Raises:
        InvalidArgumentError: If h is not positive
        LocalFitError: If more than half of the local fits were flagged
    """
    _check_bandwidth(h)
    X, y = data.X, data.y
    n, p = X.shape
    if B is None:
        Z = X
    else:
        Z = X @ (orthonormalize(B)[0] if orthonormal else np.asarray(B, dtype=float))
    K = kernel_matrix(Z, h)

    a_hat = np.empty(n)
    b_hat = np.empty((n, p))
    flagged = []
    ones = np.ones((n, 1))
    for j in range(n):
        coef, bad = weighted_local_fit(np.hstack([ones, X - X[j]]), K[j], y)
        a_hat[j] = coef[0]
        b_hat[j] = coef[1:]
        if bad:
            flagged.append(j)

    if len(flagged) > n / 2:
        raise LocalFitError(f"{len(flagged)} of {n} local-linear fits are rank deficient at h={h:.4g}")
    if flagged:
        logger.warning(f"{len(flagged)} of {n} local-linear fits used the ridge fallback")
    return LocalLinearFit(a_hat, b_hat, float(h), np.asarray(flagged, dtype=int))
