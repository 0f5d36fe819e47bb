"""Classical full-dimensional NGLR test.

The baseline smooths on all p covariates at once. It is calibrated either by
the same plug-in standardization used for the adaptive test (with h^p as the
normalizer) or by a wild bootstrap that imposes the fitted null model.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np
from joblib import Parallel, delayed

from adaglr.core.data import Dataset
from adaglr.core.dimred import DimensionSelector, ProjectionEstimate, ProjectionMethod, rule_bandwidth
from adaglr.core.glrtest import TestReport, TnResult, Variant, nuisance_estimates, statistic_sn, statistic_tn
from adaglr.core.nullfit import NullModelFit, NullModelSpec, OptimizerOptions, fit_null_model
from adaglr.core.streams import stream
from adaglr.errors import AdaGlrError, BootstrapUnstableError, ConfigError

logger = logging.getLogger(__name__)

StatisticFunction = Callable[[Dataset, NullModelFit], float]

SQRT5 = np.sqrt(5.0)
MAMMEN_LOW = (1.0 - SQRT5) / 2.0
MAMMEN_HIGH = (1.0 + SQRT5) / 2.0
MAMMEN_P_LOW = (SQRT5 + 1.0) / (2.0 * SQRT5)


class WeightScheme(str, Enum):
    MAMMEN = "mammen"
    RADEMACHER = "rademacher"


@dataclass(frozen=True)
class BootstrapConfig:
    """Wild bootstrap settings.

    Attributes:
        b_resamples: Number of resamples (at least 100)
        weight_scheme: Multiplier distribution
        seed: Master seed; resample b uses the stream (seed, b)
        n_jobs: joblib workers for the resamples
    """

    b_resamples: int = 250
    weight_scheme: WeightScheme = WeightScheme.MAMMEN
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.b_resamples < 100:
            raise ConfigError(f"bootstrap needs at least 100 resamples, got {self.b_resamples}")


@dataclass(frozen=True)
class BootstrapResult:
    p_value: float
    observed: float
    draws: np.ndarray
    failures: int


def multiplier_weights(rng: np.random.Generator, n: int, scheme: WeightScheme) -> np.ndarray:
    """Draw n i.i.d. wild-bootstrap multipliers with mean 0 and variance 1."""
    u = rng.uniform(size=n)
    if scheme is WeightScheme.MAMMEN:
        return np.where(u < MAMMEN_P_LOW, MAMMEN_LOW, MAMMEN_HIGH)
    return np.where(u < 0.5, -1.0, 1.0)


def full_bandwidth(n: int, p: int, scale: float = 1.5) -> float:
    """Bandwidth of the p-dimensional smoother, the usual rule with dim = p."""
    return rule_bandwidth(n, p, scale)


def _identity_projection(p: int) -> ProjectionEstimate:
    return ProjectionEstimate(np.eye(p), p, ProjectionMethod.OPG, DimensionSelector.FIXED)


def _fzz_tn(data: Dataset, fit: NullModelFit, h_full: float) -> TnResult:
    return statistic_tn(data, fit, _identity_projection(data.p), h_full)


def fzz_statistic(data: Dataset, fit: NullModelFit, h_full: float) -> float:
    """NGLR statistic (n/2) log(RSS0 / RSS1) with a p-dimensional kernel on raw x."""
    return _fzz_tn(data, fit, h_full).t_n


def fzz_asymptotic_test(
    data: Dataset, fit: NullModelFit, h_full: float, alpha: float = 0.05, one_sided: bool = False
) -> TestReport:
    """Baseline calibrated by the plug-in normal limit with normalizer h^p."""
    tn = _fzz_tn(data, fit, h_full)
    h_norm = h_full ** data.p
    nuisance = nuisance_estimates(tn.weights, tn.residuals_np, h_norm)
    report = statistic_sn(tn.t_n, nuisance, h_norm, tn.n_used, alpha, adjusted=False, one_sided=one_sided)
    return replace(
        report,
        variant=Variant.FZZ_ASYMPTOTIC,
        q_hat=data.p,
        bandwidth=h_full,
        dropped_rows=int(tn.weights.dropped.size),
        null_fit=fit,
        diagnostics={"rss0": tn.rss0, "rss1": tn.rss1},
    )


def _resample(
    data: Dataset,
    fit: NullModelFit,
    spec: NullModelSpec,
    statistic_fn: StatisticFunction,
    config: BootstrapConfig,
    optimizer: Optional[OptimizerOptions],
    b: int,
) -> float:
    v = multiplier_weights(stream(config.seed, b), data.n, config.weight_scheme)
    resampled = data.with_response(fit.fitted + fit.residuals * v)
    try:
        refit = fit_null_model(resampled, spec, optimizer)
        return float(statistic_fn(resampled, refit))
    except AdaGlrError as e:
        logger.debug(f"bootstrap resample {b} failed: {e}")
        return float("nan")


def wild_bootstrap(
    data: Dataset,
    fit: NullModelFit,
    spec: NullModelSpec,
    statistic_fn: StatisticFunction,
    config: Optional[BootstrapConfig] = None,
    optimizer: Optional[OptimizerOptions] = None,
) -> BootstrapResult:
    """Wild bootstrap distribution of a statistic under the fitted null.

    Resample b uses y* = g(beta_hat'x, theta_hat) + e_hat * v with i.i.d.
    multipliers v, refits the null model and recomputes the statistic.

    Raises:
        BootstrapUnstableError: If more than 10% of the resamples fail
    """
    config = config or BootstrapConfig()
    observed = float(statistic_fn(data, fit))
    draws = Parallel(n_jobs=config.n_jobs)(
        delayed(_resample)(data, fit, spec, statistic_fn, config, optimizer, b)
        for b in range(config.b_resamples)
    )
    draws = np.asarray(draws, dtype=float)
    valid = draws[np.isfinite(draws)]
    failures = draws.size - valid.size
    if failures > 0.1 * config.b_resamples:
        raise BootstrapUnstableError(f"{failures} of {config.b_resamples} bootstrap resamples failed")
    exceed = int(np.count_nonzero(np.abs(valid) >= abs(observed)))
    p_value = (1.0 + exceed) / (valid.size + 1.0)
    return BootstrapResult(p_value, observed, draws, failures)


def wild_bootstrap_pvalue(
    data: Dataset,
    fit: NullModelFit,
    spec: NullModelSpec,
    statistic_fn: StatisticFunction,
    config: Optional[BootstrapConfig] = None,
    optimizer: Optional[OptimizerOptions] = None,
) -> float:
    """Bootstrap p-value (1 + #{|T*| >= |T_obs|}) / (B + 1)."""
    return wild_bootstrap(data, fit, spec, statistic_fn, config, optimizer).p_value


def fzz_bootstrap_test(
    data: Dataset,
    spec: NullModelSpec,
    fit: NullModelFit,
    h_full: float,
    config: Optional[BootstrapConfig] = None,
    alpha: float = 0.05,
    optimizer: Optional[OptimizerOptions] = None,
) -> TestReport:
    """Baseline calibrated by the wild bootstrap."""

    def statistic(sample: Dataset, sample_fit: NullModelFit) -> float:
        return fzz_statistic(sample, sample_fit, h_full)

    result = wild_bootstrap(data, fit, spec, statistic, config, optimizer)
    return TestReport(
        variant=Variant.FZZ_BOOTSTRAP,
        raw_statistic=result.observed,
        standardized=result.observed,
        adjusted=result.observed,
        p_value=result.p_value,
        reject=result.p_value <= alpha,
        alpha=alpha,
        q_hat=data.p,
        bandwidth=h_full,
        n=data.n,
        null_fit=fit,
        diagnostics={"bootstrap_failures": result.failures, "b_resamples": int(result.draws.size)},
    )
