"""Sufficient dimension reduction for the projection matrix B.

Outer product of gradients (OPG) and minimum average variance estimation
(MAVE) estimate the column space of B; the structural dimension q is chosen
by the ridge-type eigenvalue ratio (RRE) or by a modified BIC over MAVE fits.
"""

import logging
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist

from adaglr.core.data import Dataset
from adaglr.core.smooth import kernel_matrix, local_linear_fit, orthonormalize, weighted_local_fit
from adaglr.errors import ConfigError, DataError, InvalidArgumentError, NumericalError

logger = logging.getLogger(__name__)

EXACT_FIT_SHARE = 1e-6


class ProjectionMethod(str, Enum):
    OPG = "opg"
    MAVE = "mave"


class DimensionSelector(str, Enum):
    RRE = "rre"
    BIC = "bic"
    FIXED = "fixed"


@dataclass(frozen=True)
class ProjectionConfig:
    """How B and q are estimated.

    Attributes:
        method: OPG or MAVE directions
        selector: RRE, BIC or a fixed dimension
        fixed_q: Dimension used with the FIXED selector
        bandwidth_scale: Constant c in h = c * n^(-1/(4 + dim))
        pilot_min_neighbors: Minimum neighbours guaranteed by the OPG pilot
            bandwidth; None means 2(p + 1), 0 disables the floor
        opg_refinements: Refinement passes of the OPG kernel metric; 0 keeps
            the plain p-dimensional pilot
        opg_tol: Stop refining when Sigma_hat / lambda_1 moves by less than
            this (spectral norm) between successive passes
        bic_min_neighbors: Minimum neighbours guaranteed by the BIC bandwidth
            at dimension k; None means 2(k + 1), 0 disables the floor
        mave_max_iter: MAVE sweep cap
        mave_tol: MAVE stopping tolerance on the largest principal angle
    """

    method: ProjectionMethod = ProjectionMethod.OPG
    selector: DimensionSelector = DimensionSelector.RRE
    fixed_q: Optional[int] = None
    bandwidth_scale: float = 1.5
    pilot_min_neighbors: Optional[int] = None
    opg_refinements: int = 5
    opg_tol: float = 1e-3
    bic_min_neighbors: Optional[int] = None
    mave_max_iter: int = 50
    mave_tol: float = 1e-4


@dataclass(frozen=True)
class OpgResult:
    """Averaged outer product of local gradients and its eigen-decomposition.

    ``refinements`` counts the metric refinement passes behind the result
    (0 for the plain pilot).
    """

    sigma_hat: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    bandwidth: float
    refinements: int = 0


@dataclass(frozen=True)
class BicStep:
    """One candidate dimension of the BIC search."""

    k: int
    bandwidth: float
    rss: float
    penalty: float
    criterion: float
    failed: bool = False


@dataclass(frozen=True)
class ProjectionEstimate:
    """Estimated projection B(q) and its provenance."""

    b_hat: np.ndarray
    q_hat: int
    method: ProjectionMethod
    selector: DimensionSelector
    eigenvalues: Optional[np.ndarray] = None
    iterations: int = 0
    converged: bool = True
    objective: Optional[float] = None
    pilot_bandwidth: Optional[float] = None
    opg_refinements: int = 0
    bic_path: List[BicStep] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "q_hat": self.q_hat,
            "method": self.method.value,
            "selector": self.selector.value,
            "b_hat": self.b_hat.tolist(),
            "eigenvalues": None if self.eigenvalues is None else self.eigenvalues.tolist(),
            "iterations": self.iterations,
            "converged": self.converged,
            "pilot_bandwidth": self.pilot_bandwidth,
            "opg_refinements": self.opg_refinements,
            "bic_path": [asdict(step) for step in self.bic_path],
        }


def rule_bandwidth(n: int, dim: int, scale: float = 1.5) -> float:
    """Bandwidth h = scale * n^(-1/(4 + dim))."""
    return scale * n ** (-1.0 / (4.0 + dim))


def _neighbour_floor(Z: np.ndarray, min_neighbors: int) -> float:
    """Smallest h giving 90% of the rows ``min_neighbors`` others in the kernel support."""
    if min_neighbors <= 0 or Z.shape[0] <= min_neighbors:
        return 0.0
    distances = np.sort(cdist(Z, Z, "chebyshev"), axis=1)[:, min_neighbors]
    return float(np.quantile(distances, 0.9)) * 1.01


def pilot_bandwidth(X: np.ndarray, scale: float = 1.5, min_neighbors: Optional[int] = None) -> float:
    """Bandwidth of the p-dimensional OPG pilot.

    Starts from the rule with dim = p and widens it until 90% of the points see
    at least ``min_neighbors`` others inside the product-kernel support.
    """
    n, p = X.shape
    h0 = rule_bandwidth(n, p, scale)
    needed = _neighbour_floor(X, 2 * (p + 1) if min_neighbors is None else min_neighbors)
    if needed > h0:
        logger.debug(f"pilot bandwidth widened from {h0:.4g} to {needed:.4g}")
    return max(h0, needed)


def _descending_eigh(S: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    values, vectors = linalg.eigh(S)
    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]
    tol = 1e-8 * max(1.0, abs(values[0]))
    values[(values < 0) & (values > -tol)] = 0.0
    return values, vectors


def opg_estimate(data: Dataset, h: float, metric: Optional[np.ndarray] = None) -> OpgResult:
    """Outer product of gradients.

    Args:
        data: Dataset
        h: Bandwidth of the p-dimensional local-linear pilot
        metric: Optional (p, p) matrix; the kernel then acts on metric'(x_i - x_j)
            instead of the raw covariates

    Returns:
        OpgResult with Sigma_hat = mean of b_j b_j' and its descending eigenpairs

    Raises:
        DataError: If n <= 2(p + 1)
        LocalFitError: Propagated from the local-linear fit
    """
    if data.n <= 2 * (data.p + 1):
        raise DataError(f"OPG needs n > 2(p + 1) = {2 * (data.p + 1)}, got n={data.n}")
    fit = local_linear_fit(data, metric, h, orthonormal=False)
    sigma = fit.b_hat.T @ fit.b_hat / data.n
    sigma = 0.5 * (sigma + sigma.T)
    values, vectors = _descending_eigh(sigma)
    logger.debug(f"OPG eigenvalues at h={h:.4g}: {np.array2string(values, precision=4)}")
    return OpgResult(sigma, values, vectors, float(h))


def refined_opg(
    data: Dataset,
    scale: float = 1.5,
    min_neighbors: Optional[int] = None,
    max_iter: int = 5,
    tol: float = 1e-3,
) -> OpgResult:
    """OPG with an iteratively refined kernel metric.

    Each pass rescales the covariates by the current eigenvectors times
    sqrt(lambda_k / lambda_1), so directions with small average gradients get
    wide kernels, then re-estimates the gradients on that metric. The pilot is
    the plain p-dimensional OPG at ``pilot_bandwidth``.

    Args:
        data: Dataset with p >= 2
        scale: Bandwidth rule constant
        min_neighbors: Neighbour floor of every pass; None means 2(p + 1)
        max_iter: Refinement passes after the pilot; 0 returns the pilot
        tol: Stop when Sigma_hat / lambda_1 moves by less than tol in spectral
            norm between two passes

    Returns:
        OpgResult of the last pass; ``bandwidth`` is the bandwidth of that pass
    """
    opg = opg_estimate(data, pilot_bandwidth(data.X, scale, min_neighbors))
    passes = 0
    while data.p >= 2 and passes < max_iter and opg.eigenvalues[0] > 0:
        passes += 1
        metric = opg.eigenvectors * np.sqrt(np.clip(opg.eigenvalues, 0.0, None) / opg.eigenvalues[0])
        h = pilot_bandwidth(data.X @ metric, scale, min_neighbors)
        refined = opg_estimate(data, h, metric=metric)
        if not refined.eigenvalues[0] > 0:
            break
        change = float(
            np.linalg.norm(refined.sigma_hat / refined.eigenvalues[0] - opg.sigma_hat / opg.eigenvalues[0], 2)
        )
        logger.debug(f"OPG refinement {passes}: h={h:.4g}, change={change:.3g}")
        opg = refined
        if change < tol:
            break
    return replace(opg, refinements=passes)


def rre_ratios(eigenvalues: np.ndarray, c: float) -> np.ndarray:
    """Ridge-regularized consecutive eigenvalue ratios (lambda_{k+1} + c) / (lambda_k + c)."""
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size < 2:
        raise InvalidArgumentError("ratio selection needs at least two eigenvalues")
    if np.any(lam < -1e-8):
        raise InvalidArgumentError(f"eigenvalues must be nonnegative, got min {lam.min():.3e}")
    if np.any(np.diff(lam) > 1e-12 * max(1.0, abs(lam[0]))):
        raise InvalidArgumentError("eigenvalues must be sorted in descending order")
    lam = np.clip(lam, 0.0, None)
    return (lam[1:] + c) / (lam[:-1] + c)


def rre_select_q(eigenvalues: np.ndarray, n: int, h: float) -> int:
    """Ridge-type ratio estimate of the structural dimension.

    Args:
        eigenvalues: Descending eigenvalues of Sigma_hat, length p >= 2
        n: Sample size
        h: Bandwidth used to build Sigma_hat

    Returns:
        q_hat in 1..p-1, smallest k on ties
    """
    if n <= 0 or h <= 0:
        raise InvalidArgumentError(f"n and h must be positive, got n={n}, h={h}")
    c = 1.0 / np.sqrt(n * h)
    return int(np.argmin(rre_ratios(eigenvalues, c))) + 1


def _qr_basis(B: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(B)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def _mave_local_step(
    X: np.ndarray, y: np.ndarray, B: np.ndarray, h: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Given B, local-linear (a_j, d_j) on B'x with row-normalized weights."""
    n = X.shape[0]
    q = B.shape[1]
    Z = X @ B
    K = kernel_matrix(Z, h)
    sums = K.sum(axis=1)
    W = K / np.where(sums > 0, sums, 1.0)[:, None]

    a = np.empty(n)
    d = np.empty((n, q))
    objective = 0.0
    ones = np.ones((n, 1))
    for j in range(n):
        design = np.hstack([ones, Z - Z[j]])
        coef, _ = weighted_local_fit(design, W[j], y)
        a[j] = coef[0]
        d[j] = coef[1:]
        resid = y - design @ coef
        objective += float(W[j] @ (resid * resid))
    return a, d, W, objective


def _mave_direction_step(
    X: np.ndarray, y: np.ndarray, a: np.ndarray, d: np.ndarray, W: np.ndarray
) -> Optional[np.ndarray]:
    """Given (a_j, d_j) and weights, least squares in vec(B)."""
    n, p = X.shape
    q = d.shape[1]
    M = np.zeros((p * q, p * q))
    r = np.zeros(p * q)
    for j in range(n):
        w = W[j]
        if not np.any(w):
            continue
        Xd = X - X[j]
        S = Xd.T @ (Xd * w[:, None])
        M += np.kron(np.outer(d[j], d[j]), S)
        r += np.kron(d[j], Xd.T @ (w * (y - a[j])))
    vec, _, rank, _ = linalg.lstsq(M, r)
    B = vec.reshape((p, q), order="F")
    if rank < p * q or not np.all(np.isfinite(B)) or np.linalg.matrix_rank(B) < q:
        return None
    return _qr_basis(B)


def mave_estimate(
    data: Dataset,
    q: int,
    h: float,
    init: Optional[np.ndarray] = None,
    max_iter: int = 50,
    tol: float = 1e-4,
) -> ProjectionEstimate:
    """Minimum average variance estimation of a q-dimensional projection.

    Alternates local-linear fits given B with a least-squares update of B given
    the local intercepts and slopes, re-orthonormalizing after every update.

    Args:
        data: Dataset
        q: Target dimension, 1 <= q <= p
        h: Bandwidth for the q-dimensional kernel
        init: Starting projection (p, q); defaults to the leading refined OPG directions
        max_iter: Sweep cap
        tol: Stop when the largest principal angle between iterates is below tol

    Returns:
        ProjectionEstimate with the best iterate; ``objective`` holds the
        weighted residual sum of squares at that iterate
    """
    X, y = data.X, data.y
    n, p = X.shape
    if not 1 <= q <= p:
        raise InvalidArgumentError(f"MAVE dimension must lie in 1..{p}, got {q}")
    if init is None:
        init = refined_opg(data).eigenvectors[:, :q]
    init = np.asarray(init, dtype=float).reshape(p, -1)
    if init.shape[1] != q or np.linalg.matrix_rank(init) < q:
        raise InvalidArgumentError(f"MAVE init must have {q} independent columns")
    B = _qr_basis(init)

    if q == p:
        objective = _mave_local_step(X, y, B, h)[3]
        return ProjectionEstimate(B, q, ProjectionMethod.MAVE, DimensionSelector.FIXED, objective=objective)

    best_B, best_objective = B, np.inf
    rises = 0
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        a, d, W, objective = _mave_local_step(X, y, B, h)
        logger.debug(f"MAVE sweep {iterations}: objective={objective:.6g}")
        if objective <= best_objective:
            best_B, best_objective = B, objective
            rises = 0
        else:
            rises += 1
            if rises >= 3:
                logger.warning(f"MAVE objective rose for 3 sweeps; returning best of {iterations} sweeps")
                break
        B_new = _mave_direction_step(X, y, a, d, W)
        if B_new is None:
            logger.warning(f"MAVE direction update is rank deficient at sweep {iterations}; returning best iterate")
            break
        angle = float(np.max(linalg.subspace_angles(B, B_new)))
        B = B_new
        if angle < tol:
            objective = _mave_local_step(X, y, B, h)[3]
            if objective <= best_objective:
                best_B, best_objective = B, objective
            converged = True
            break

    return ProjectionEstimate(
        b_hat=best_B,
        q_hat=q,
        method=ProjectionMethod.MAVE,
        selector=DimensionSelector.FIXED,
        iterations=iterations,
        converged=converged,
        objective=float(best_objective),
    )


def bic_penalty(n: int, k: int, h: float) -> float:
    """Penalty log(n) k / min(n h^k, sqrt(n))."""
    return np.log(n) * k / min(n * h ** k, np.sqrt(n))


def bic_path(
    data: Dataset,
    scale: float = 1.5,
    init: Optional[np.ndarray] = None,
    max_iter: int = 50,
    tol: float = 1e-4,
    min_neighbors: Optional[int] = None,
) -> Tuple[List[BicStep], Dict[int, ProjectionEstimate]]:
    """Run MAVE for every k = 1..p and evaluate the modified BIC.

    The residual term is log(RSS_k / n) with RSS_k the in-sample MAVE objective
    under row-normalized weights. The bandwidth h_k is the rule
    scale * n^(-1/(4 + k)), widened until 90% of the points see ``min_neighbors``
    others in the k-dimensional support on init[:, :k]'x. RSS_k / n is floored at
    1e-6 var(y) so exact fits tie and the penalty decides.

    Args:
        data: Dataset
        scale: Bandwidth rule constant
        init: p×p matrix whose leading k columns start MAVE at dimension k;
            defaults to the refined OPG eigenvectors
        max_iter: MAVE sweep cap
        tol: MAVE principal-angle tolerance
        min_neighbors: Neighbour floor; None means 2(k + 1), 0 keeps the rule

    Returns:
        Tuple of (steps, estimates by k)
    """
    n, p = data.X.shape
    if n < 2 * (p + 2):
        raise DataError(f"BIC selection needs n >= 2(p + 2) = {2 * (p + 2)}, got n={n}")
    if init is None:
        init = refined_opg(data, scale).eigenvectors
    init = _qr_basis(np.asarray(init, dtype=float))
    floor = EXACT_FIT_SHARE * max(float(np.var(data.y)), np.finfo(float).tiny)

    steps: List[BicStep] = []
    estimates: Dict[int, ProjectionEstimate] = {}
    for k in range(1, p + 1):
        neighbours = 2 * (k + 1) if min_neighbors is None else min_neighbors
        h_k = max(rule_bandwidth(n, k, scale), _neighbour_floor(data.X @ init[:, :k], neighbours))
        penalty = bic_penalty(n, k, h_k)
        try:
            estimate = mave_estimate(data, k, h_k, init=init[:, :k], max_iter=max_iter, tol=tol)
        except NumericalError as e:
            logger.warning(f"MAVE failed at k={k}: {e}")
            steps.append(BicStep(k, h_k, float("nan"), penalty, float("inf"), failed=True))
            continue
        estimates[k] = estimate
        criterion = float(np.log(max(estimate.objective / n, floor)) + penalty)
        logger.debug(f"BIC k={k}: h={h_k:.4g}, rss={estimate.objective:.6g}, criterion={criterion:.4f}")
        steps.append(BicStep(k, h_k, estimate.objective, penalty, criterion))
    if not estimates:
        raise NumericalError("MAVE failed for every candidate dimension")
    return steps, estimates


def bic_select_q(data: Dataset, scale: float = 1.5, **mave_options: Any) -> int:
    """Modified-BIC estimate of the structural dimension (smallest k on ties)."""
    steps, _ = bic_path(data, scale, **mave_options)
    return _bic_argmin(steps)


def _bic_argmin(steps: List[BicStep]) -> int:
    criteria = np.array([step.criterion for step in steps])
    return steps[int(np.argmin(criteria))].k


def estimate_projection(data: Dataset, config: Optional[ProjectionConfig] = None) -> ProjectionEstimate:
    """Estimate B(q_hat) with the configured method and dimension selector.

    Args:
        data: Dataset
        config: Method, selector and tuning constants

    Returns:
        ProjectionEstimate
    """
    config = config or ProjectionConfig()
    n, p = data.X.shape
    if config.selector is DimensionSelector.FIXED:
        if config.fixed_q is None or not 1 <= config.fixed_q <= p:
            raise ConfigError(f"fixed dimension must lie in 1..{p}, got {config.fixed_q}")
    if p == 1:
        return ProjectionEstimate(np.ones((1, 1)), 1, config.method, config.selector)

    opg = refined_opg(
        data, config.bandwidth_scale, config.pilot_min_neighbors, config.opg_refinements, config.opg_tol
    )

    steps: List[BicStep] = []
    estimates: Dict[int, ProjectionEstimate] = {}
    if config.selector is DimensionSelector.FIXED:
        q = config.fixed_q
    elif config.selector is DimensionSelector.RRE:
        q = rre_select_q(opg.eigenvalues, n, opg.bandwidth)
    else:
        steps, estimates = bic_path(
            data,
            config.bandwidth_scale,
            opg.eigenvectors,
            config.mave_max_iter,
            config.mave_tol,
            config.bic_min_neighbors,
        )
        q = _bic_argmin(steps)

    if config.method is ProjectionMethod.OPG:
        B, iterations, converged, objective = opg.eigenvectors[:, :q], 0, True, None
    else:
        mave = estimates.get(q) or mave_estimate(
            data,
            q,
            rule_bandwidth(n, q, config.bandwidth_scale),
            init=opg.eigenvectors[:, :q],
            max_iter=config.mave_max_iter,
            tol=config.mave_tol,
        )
        B, iterations, converged, objective = mave.b_hat, mave.iterations, mave.converged, mave.objective

    logger.debug(f"{config.method.value}/{config.selector.value}: q_hat={q}")
    return ProjectionEstimate(
        b_hat=orthonormalize(B)[0],
        q_hat=q,
        method=config.method,
        selector=config.selector,
        eigenvalues=opg.eigenvalues,
        iterations=iterations,
        converged=converged,
        objective=objective,
        pilot_bandwidth=opg.bandwidth,
        opg_refinements=opg.refinements,
        bic_path=steps,
    )
