"""Model-adaptive generalized likelihood ratio tests.

Implements the uncorrected statistic T_n with its plug-in bias and variance
(standardized S_n), the bias-corrected statistic built on leave-one-out
residual products (standardized R_n), the finite-sample size adjustment and
the end-to-end :func:`run_test` pipeline.
"""

import contextlib
import logging
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Iterator, Optional

import numpy as np
from scipy import stats

from adaglr.core.data import Dataset
from adaglr.core.dimred import ProjectionConfig, ProjectionEstimate, estimate_projection, rule_bandwidth
from adaglr.core.nullfit import NullModelFit, NullModelSpec, OptimizerOptions, fit_null_model
from adaglr.core.smooth import SmootherWeights, nw_weight_matrix
from adaglr.errors import AdaGlrError, DegenerateStatisticError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

# RSS0 below this share of the total sum of squares counts as an exact null fit.
EXACT_FIT_SHARE = 1e-20


class Variant(str, Enum):
    """Reported statistic."""

    SN = "Sn"
    RN = "Rn"
    SN_ADJUSTED = "SnAdjusted"
    RN_ADJUSTED = "RnAdjusted"
    FZZ_ASYMPTOTIC = "FZZAsymptotic"
    FZZ_BOOTSTRAP = "FZZBootstrap"

    @property
    def adjusted(self) -> bool:
        return self in (Variant.SN_ADJUSTED, Variant.RN_ADJUSTED)

    @property
    def bias_corrected(self) -> bool:
        return self in (Variant.RN, Variant.RN_ADJUSTED)


@dataclass(frozen=True)
class NuisanceEstimates:
    """Plug-in estimates entering the standardization of the statistics."""

    l1_hat: float = 0.0
    l2_hat: float = 0.0
    l3_hat: float = 0.0
    eta0_sq_hat: float = 0.0
    q1_hat: float = 0.0
    v0_hat: float = 0.0
    v1_hat: float = 0.0


@dataclass(frozen=True)
class TnResult:
    """Uncorrected statistic and the pieces needed downstream."""

    t_n: float
    rss0: float
    rss1: float
    n_used: int
    weights: SmootherWeights
    residuals_np: np.ndarray


@dataclass(frozen=True)
class TestReport:
    """Outcome of one specification test."""

    __test__ = False

    variant: Variant
    raw_statistic: float
    standardized: float
    adjusted: float
    p_value: float
    reject: bool
    alpha: float
    q_hat: int
    bandwidth: float
    nuisance: NuisanceEstimates = field(default_factory=NuisanceEstimates)
    dropped_rows: int = 0
    n: int = 0
    one_sided: bool = False
    null_fit: Optional[NullModelFit] = None
    projection: Optional[ProjectionEstimate] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def statistic(self) -> float:
        """The value the p-value was computed from."""
        return self.adjusted if self.variant.adjusted else self.standardized

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "variant": self.variant.value,
            "statistic": self.statistic,
            "raw_statistic": self.raw_statistic,
            "standardized": self.standardized,
            "adjusted": self.adjusted,
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha": self.alpha,
            "one_sided": self.one_sided,
            "q_hat": self.q_hat,
            "bandwidth": self.bandwidth,
            "n": self.n,
            "dropped_rows": self.dropped_rows,
            "nuisance": asdict(self.nuisance),
            "null_fit": None if self.null_fit is None else self.null_fit.to_dict(),
            "projection": None if self.projection is None else self.projection.to_dict(),
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True)
class TestConfig:
    """End-to-end test configuration.

    Attributes:
        projection: How B and q are estimated
        variant: Sn/Rn, adjusted or not
        alpha: Significance level
        one_sided: Use the upper-tail p-value instead of the two-sided one
        optimizer: Settings for nonlinear null fits
    """

    __test__ = False

    projection: ProjectionConfig = field(default_factory=ProjectionConfig)
    variant: Variant = Variant.RN_ADJUSTED
    alpha: float = 0.05
    one_sided: bool = False
    optimizer: OptimizerOptions = field(default_factory=OptimizerOptions)


def size_adjustment(n: int) -> float:
    """Finite-sample divisor 1 + 4 n^(-4/5)."""
    return 1.0 + 4.0 * n ** (-0.8)


def normal_p_value(z: float, one_sided: bool = False) -> float:
    """Standard normal p-value, two-sided 2(1 - Phi(|z|)) unless one_sided."""
    if one_sided:
        return float(stats.norm.sf(z))
    return float(min(1.0, 2.0 * stats.norm.sf(abs(z))))


def _check_null_residuals(rss0: float, y: np.ndarray) -> None:
    total = float(np.sum((y - y.mean()) ** 2))
    if rss0 <= EXACT_FIT_SHARE * max(total, np.finfo(float).tiny):
        raise DegenerateStatisticError("null model fits the data exactly (RSS0 = 0); nothing to test")


def statistic_tn(data: Dataset, fit: NullModelFit, proj: ProjectionEstimate, h: float) -> TnResult:
    """Uncorrected statistic T_n = (n/2) log(RSS0 / RSS1).

    RSS1 uses full (diagonal-inclusive) Nadaraya-Watson weights on B'x. Rows
    dropped by the smoother are excluded from both residual sums.

    Raises:
        DegenerateStatisticError: If RSS1 is zero or the null model fits exactly
    """
    weights = nw_weight_matrix(data.X, proj.b_hat, h, loo=False)
    keep = weights.retained
    residuals_np = data.y - weights.smooth(data.y)
    rss1 = float(np.sum(residuals_np[keep] ** 2))
    rss0 = float(np.sum(fit.residuals[keep] ** 2))
    n_used = int(np.count_nonzero(keep))
    if rss1 <= 0.0:
        raise DegenerateStatisticError("nonparametric fit interpolates the data (RSS1 = 0)")
    _check_null_residuals(rss0, data.y[keep])
    t_n = 0.5 * n_used * np.log(rss0 / rss1)
    return TnResult(float(t_n), rss0, rss1, n_used, weights, residuals_np)


def nuisance_estimates(
    weights: SmootherWeights,
    residuals_np: np.ndarray,
    h: float,
) -> NuisanceEstimates:
    """Plug-in L1, L2, L3, eta0^2, Q1 and V0 from full weights.

    Args:
        weights: Full smoother weights from :func:`statistic_tn`
        residuals_np: Nonparametric residuals y_i - m_hat_i
        h: Bandwidth normalizer (h^p for the full-dimensional baseline)

    Returns:
        NuisanceEstimates (v1_hat left at zero)

    Raises:
        DegenerateStatisticError: If L1 is zero
    """
    keep = weights.retained
    W = weights.weights[np.ix_(keep, keep)]
    e2 = residuals_np[keep] ** 2

    l1 = float(np.mean(e2))
    if l1 <= 0.0:
        raise DegenerateStatisticError("nonparametric residuals are all zero (L1 = 0)")
    l2 = h * float(np.sum(W * W, axis=0) @ e2)
    l3 = h * float(np.diag(W) @ e2)
    M = W + W.T - W.T @ W
    np.fill_diagonal(M, 0.0)
    eta0_sq = 2.0 * h * float(e2 @ (M * M) @ e2)
    return NuisanceEstimates(
        l1_hat=l1,
        l2_hat=l2,
        l3_hat=l3,
        eta0_sq_hat=eta0_sq,
        q1_hat=(l3 - 0.5 * l2) / l1,
        v0_hat=eta0_sq / (4.0 * l1 * l1),
    )


def _decide(variant: Variant, standardized: float, n: int, alpha: float, one_sided: bool):
    adjusted = standardized / size_adjustment(n)
    z = adjusted if variant.adjusted else standardized
    p_value = normal_p_value(z, one_sided)
    return adjusted, p_value, p_value <= alpha


def statistic_sn(
    t_n: float,
    nuisance: NuisanceEstimates,
    h: float,
    n: int,
    alpha: float = 0.05,
    adjusted: bool = True,
    one_sided: bool = False,
) -> TestReport:
    """Standardize T_n: S_n = sqrt(h / V0) (T_n - Q1 / h), plus the size adjustment.

    Raises:
        DegenerateStatisticError: If V0 is not positive
    """
    if not nuisance.v0_hat > 0.0:
        raise DegenerateStatisticError(f"variance estimate V0 must be positive, got {nuisance.v0_hat}")
    s_n = float(np.sqrt(h / nuisance.v0_hat) * (t_n - nuisance.q1_hat / h))
    variant = Variant.SN_ADJUSTED if adjusted else Variant.SN
    s_adj, p_value, reject = _decide(variant, s_n, n, alpha, one_sided)
    return TestReport(
        variant=variant,
        raw_statistic=t_n,
        standardized=s_n,
        adjusted=s_adj,
        p_value=p_value,
        reject=reject,
        alpha=alpha,
        q_hat=0,
        bandwidth=h,
        nuisance=nuisance,
        n=n,
        one_sided=one_sided,
    )


def statistic_rn(
    data: Dataset,
    fit: NullModelFit,
    proj: ProjectionEstimate,
    h: float,
    alpha: float = 0.05,
    adjusted: bool = True,
    one_sided: bool = False,
) -> TestReport:
    """Bias-corrected statistic on leave-one-out residual products.

    R_n = sum |e_i| (|e_i| - |y_i - m~_i|) / sqrt(2 sum_{i != j} w~_ij^2 e_i^2 e_j^2),
    where e are the null residuals and m~ the leave-one-out kernel estimate.

    Raises:
        DegenerateStatisticError: If the denominator is zero
    """
    weights = nw_weight_matrix(data.X, proj.b_hat, h, loo=True)
    keep = weights.retained
    e = fit.residuals[keep]
    r = (data.y - weights.smooth(data.y))[keep]
    W = weights.weights[np.ix_(keep, keep)]
    n_used = int(np.count_nonzero(keep))

    rss0 = float(e @ e)
    _check_null_residuals(rss0, data.y[keep])
    abs_e = np.abs(e)
    numerator = float(abs_e @ (abs_e - np.abs(r)))
    e2 = e * e
    cross = float(e2 @ (W * W) @ e2)
    if cross <= 0.0:
        raise DegenerateStatisticError("bias-corrected statistic has zero variance estimate")
    r_n = numerator / np.sqrt(2.0 * cross)

    rss1_tilde = float(np.sum(np.abs(e * r)))
    t_tilde = 0.5 * n_used * (rss0 - rss1_tilde) / rss1_tilde if rss1_tilde > 0 else float("inf")
    v1 = h * cross / (2.0 * (rss1_tilde / n_used) ** 2) if rss1_tilde > 0 else float("inf")

    variant = Variant.RN_ADJUSTED if adjusted else Variant.RN
    r_adj, p_value, reject = _decide(variant, r_n, n_used, alpha, one_sided)
    return TestReport(
        variant=variant,
        raw_statistic=float(t_tilde),
        standardized=float(r_n),
        adjusted=r_adj,
        p_value=p_value,
        reject=reject,
        alpha=alpha,
        q_hat=proj.q_hat,
        bandwidth=h,
        nuisance=NuisanceEstimates(v1_hat=float(v1)),
        dropped_rows=int(weights.dropped.size),
        n=n_used,
        one_sided=one_sided,
        null_fit=fit,
        projection=proj,
        diagnostics={"rss0": rss0, "rss1_tilde": rss1_tilde},
    )


@contextlib.contextmanager
def stage(name: str) -> Iterator[None]:
    """Tag library errors raised inside the block with the pipeline stage."""
    try:
        yield
    except AdaGlrError as e:
        if e.stage is None:
            e.stage = name
        raise


def run_test(data: Dataset, spec: NullModelSpec, config: Optional[TestConfig] = None) -> TestReport:
    """Fit the null, estimate B(q_hat), pick h and compute the configured statistic.

    Args:
        data: Dataset
        spec: Null model
        config: Test configuration

    Returns:
        TestReport

    Raises:
        AdaGlrError: From any stage, with ``stage`` set to null-fit, projection
            or statistic
    """
    config = config or TestConfig()
    with stage("null-fit"):
        fit = fit_null_model(data, spec, config.optimizer)
    with stage("projection"):
        proj = estimate_projection(data, config.projection)
    h = rule_bandwidth(data.n, proj.q_hat, config.projection.bandwidth_scale)
    logger.debug(f"test bandwidth h={h:.4g} for q_hat={proj.q_hat}")

    with stage("statistic"):
        if config.variant.bias_corrected:
            return statistic_rn(
                data, fit, proj, h, config.alpha, config.variant.adjusted, config.one_sided
            )
        tn = statistic_tn(data, fit, proj, h)
        nuisance = nuisance_estimates(tn.weights, tn.residuals_np, h)
        report = statistic_sn(
            tn.t_n, nuisance, h, tn.n_used, config.alpha, config.variant.adjusted, config.one_sided
        )
    return replace(
        report,
        q_hat=proj.q_hat,
        dropped_rows=int(tn.weights.dropped.size),
        null_fit=fit,
        projection=proj,
        diagnostics={"rss0": tn.rss0, "rss1": tn.rss1, "t_n": tn.t_n},
    )
