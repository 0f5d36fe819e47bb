"""Monte Carlo laboratory.

Data-generating processes for the single-index (H11-H14), two-index
(H21, H22) and low-frequency (H31, H32) alternatives, a replication engine
that tallies rejections per test method, and emission of result tables and
power-curve data.
"""

import logging
import math
import re
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from adaglr.core.baseline import BootstrapConfig, full_bandwidth, fzz_asymptotic_test, fzz_bootstrap_test
from adaglr.core.data import Dataset
from adaglr.core.dimred import DimensionSelector, ProjectionConfig, ProjectionMethod
from adaglr.core.glrtest import TestConfig, TestReport, Variant, run_test
from adaglr.core.nullfit import NullModelSpec, fit_null_model
from adaglr.core.streams import stream, substream_seed
from adaglr.errors import AdaGlrError, ConfigError
from adaglr.utils.file_ops import write_table

logger = logging.getLogger(__name__)

UNRELIABLE_FAILURE_SHARE = 0.05
TABLE_COLUMNS = ["family", "error", "n", "a", "method", "rate", "stderr"]
CURVE_COLUMNS = ["family", "p", "x_cov", "error", "n", "method", "a", "rate", "stderr"]


class Family(str, Enum):
    H11 = "H11"
    H12 = "H12"
    H13 = "H13"
    H14 = "H14"
    H21 = "H21"
    H22 = "H22"
    H31 = "H31"
    H32 = "H32"


class ErrorLaw(str, Enum):
    NORMAL = "normal"
    STUDENT_T = "t5"
    LAPLACE = "laplace"


class CovarianceKind(str, Enum):
    IDENTITY = "identity"
    AR02 = "ar02"


# Families whose directions split the coordinates into two halves.
_HALF_SPLIT = {Family.H12, Family.H21, Family.H22, Family.H31, Family.H32}


@dataclass(frozen=True)
class DgpSpec:
    """One data-generating process.

    Attributes:
        family: Alternative family
        p: Covariate dimension
        a: Departure amplitude; a = 0 is the null model
        error: Error law
        sigma: Standard deviation of normal errors (ignored for t5 and Laplace)
        x_cov: Covariance of the normal covariates
    """

    family: Family
    p: int
    a: float = 0.0
    error: ErrorLaw = ErrorLaw.NORMAL
    sigma: float = 1.0
    x_cov: CovarianceKind = CovarianceKind.IDENTITY

    def __post_init__(self) -> None:
        if self.p < 1:
            raise ConfigError(f"p must be positive, got {self.p}")
        if self.family is Family.H11 and self.p < 3:
            raise ConfigError(f"H11 needs p >= 3, got {self.p}")
        if self.family in _HALF_SPLIT and self.p % 2:
            raise ConfigError(f"{self.family.value} needs an even p, got {self.p}")
        if not math.isfinite(self.a):
            raise ConfigError(f"amplitude must be finite, got {self.a}")
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")

    @property
    def label(self) -> str:
        return f"{self.family.value}/p={self.p}/{self.error.value}/{self.x_cov.value}/a={self.a:g}"


def _ones(p: int) -> np.ndarray:
    return np.ones(p) / np.sqrt(p)


def _second_half(p: int) -> np.ndarray:
    beta = np.zeros(p)
    beta[p // 2:] = 1.0
    return beta / np.sqrt(p // 2)


def directions(family: Family, p: int) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Index directions (beta1, beta2) of a family; beta2 is None for single-index families."""
    if family is Family.H11:
        beta = np.ones(p)
        beta[-2:] = 0.0
        return beta / np.sqrt(p - 2), None
    if family is Family.H12:
        return _second_half(p), None
    if family in (Family.H13, Family.H14):
        return _ones(p), None
    if family in (Family.H21, Family.H22):
        return _ones(p), _second_half(p)
    return _second_half(p), _ones(p)


def regression_mean(spec: DgpSpec, X: np.ndarray) -> np.ndarray:
    """E[y | x] of the family at amplitude ``spec.a``."""
    beta1, beta2 = directions(spec.family, spec.p)
    t = X @ beta1
    a = spec.a
    family = spec.family
    if family is Family.H11:
        return t + a * np.exp(-0.1 * t)
    if family is Family.H12:
        return t + 1.25 * a * np.power(2.0, -t)
    if family is Family.H13:
        return t + a * np.cos(0.6 * np.pi * t)
    if family is Family.H14:
        return 1.5 * np.exp(0.5 * t) + a * np.cos(0.6 * np.pi * t)

    s = X @ beta2
    if family is Family.H21:
        return t + a * s ** 2
    if family is Family.H22:
        return t + a * np.sqrt(np.abs(s))
    if family is Family.H31:
        return t + a * t ** 2
    return t + a * s ** 3


def default_p(family: Family) -> int:
    """Dimension used for the family in the reference studies."""
    return 4 if family in (Family.H21, Family.H22) else 8


def null_spec_for(family: Family, p: int) -> NullModelSpec:
    """Null model the family collapses to at a = 0."""
    if family is Family.H14:
        return NullModelSpec.scaled_exp(p)
    return NullModelSpec.linear(p, intercept=True)


def covariance(kind: CovarianceKind, p: int) -> np.ndarray:
    if kind is CovarianceKind.IDENTITY:
        return np.eye(p)
    idx = np.arange(p)
    return 0.2 ** np.abs(idx[:, None] - idx[None, :])


def draw_errors(rng: np.random.Generator, n: int, law: ErrorLaw, sigma: float = 1.0) -> np.ndarray:
    if law is ErrorLaw.NORMAL:
        return sigma * rng.standard_normal(n)
    if law is ErrorLaw.STUDENT_T:
        return rng.standard_t(5, size=n)
    return rng.laplace(0.0, 1.0, size=n)


def dgp_generate(spec: DgpSpec, n: int, seed: int, replication: int = 0) -> Dataset:
    """Draw one dataset of size n.

    Args:
        spec: Data-generating process
        n: Sample size
        seed: Master seed
        replication: Replication counter; (seed, replication) fixes the draw

    Returns:
        Dataset with X ~ N(0, x_cov) and y = m(x) + e
    """
    if n < 1:
        raise ConfigError(f"n must be positive, got {n}")
    rng = stream(seed, replication)
    if spec.x_cov is CovarianceKind.IDENTITY:
        X = rng.standard_normal((n, spec.p))
    else:
        X = rng.multivariate_normal(np.zeros(spec.p), covariance(spec.x_cov, spec.p), size=n, method="cholesky")
    e = draw_errors(rng, n, spec.error, spec.sigma)
    return Dataset(X, regression_mean(spec, X) + e)


_TOKEN = re.compile(r"^(sn|rn)-(opg|mave)(?:-(rre|bic|fixed(\d+)))?(-unadj)?$")


@dataclass(frozen=True)
class MethodConfig:
    """A test method applied in every replication.

    Tokens are ``<sn|rn>-<opg|mave>[-<rre|bic|fixedK>][-unadj]`` for the
    adaptive tests and ``fzz-a`` / ``fzz-b`` for the baseline with asymptotic
    or bootstrap calibration.
    """

    token: str
    variant: Variant
    projection: ProjectionConfig = field(default_factory=ProjectionConfig)
    bootstrap_b: int = 250
    one_sided: bool = False

    @classmethod
    def parse(
        cls, token: str, bandwidth_scale: float = 1.5, bootstrap_b: int = 250, one_sided: bool = False
    ) -> "MethodConfig":
        token = token.strip().lower()
        if token == "fzz-a":
            return cls(
                token, Variant.FZZ_ASYMPTOTIC, ProjectionConfig(bandwidth_scale=bandwidth_scale), one_sided=one_sided
            )
        if token == "fzz-b":
            return cls(
                token, Variant.FZZ_BOOTSTRAP, ProjectionConfig(bandwidth_scale=bandwidth_scale), bootstrap_b
            )
        match = _TOKEN.match(token)
        if match is None:
            raise ConfigError(f"unknown method token '{token}'")
        stat, method, selector, fixed_q, unadjusted = match.groups()
        method = ProjectionMethod(method)
        if selector is None:
            selector = "rre" if method is ProjectionMethod.OPG else "bic"
        projection = ProjectionConfig(
            method=method,
            selector=DimensionSelector.FIXED if fixed_q else DimensionSelector(selector),
            fixed_q=int(fixed_q) if fixed_q else None,
            bandwidth_scale=bandwidth_scale,
        )
        variants = {
            ("sn", False): Variant.SN_ADJUSTED,
            ("sn", True): Variant.SN,
            ("rn", False): Variant.RN_ADJUSTED,
            ("rn", True): Variant.RN,
        }
        return cls(token, variants[(stat, bool(unadjusted))], projection, one_sided=one_sided)

    def run(self, data: Dataset, spec: NullModelSpec, alpha: float, seed: int, n_jobs: int = 1) -> TestReport:
        """Apply the method to one dataset; ``n_jobs`` workers run bootstrap resamples."""
        if self.variant is Variant.FZZ_ASYMPTOTIC or self.variant is Variant.FZZ_BOOTSTRAP:
            fit = fit_null_model(data, spec)
            h_full = full_bandwidth(data.n, data.p, self.projection.bandwidth_scale)
            if self.variant is Variant.FZZ_ASYMPTOTIC:
                return fzz_asymptotic_test(data, fit, h_full, alpha, self.one_sided)
            boot = BootstrapConfig(b_resamples=self.bootstrap_b, seed=seed, n_jobs=n_jobs)
            return fzz_bootstrap_test(data, spec, fit, h_full, boot, alpha)
        config = TestConfig(self.projection, self.variant, alpha, self.one_sided)
        return run_test(data, spec, config)


@dataclass
class ExperimentResult:
    """Tallies of one experiment cell.

    Attributes:
        spec: Data-generating process
        n: Sample size
        reps: Replications
        methods: Method tokens in run order
        counts: Rejections per method
        failures: Failed replications per method
        statistics: Per-replication statistics per method (NaN on failure), when kept
        q_hats: Per-replication q_hat per method (-1 on failure), when kept
        wall_time: Seconds spent; not part of any emitted table
    """

    spec: DgpSpec
    n: int
    reps: int
    methods: List[str]
    counts: Dict[str, int]
    failures: Dict[str, int]
    statistics: Dict[str, np.ndarray] = field(default_factory=dict)
    q_hats: Dict[str, np.ndarray] = field(default_factory=dict)
    wall_time: float = 0.0

    def rate(self, method: str) -> float:
        return self.counts[method] / self.reps

    def stderr(self, method: str) -> float:
        r = self.rate(method)
        return math.sqrt(r * (1.0 - r) / self.reps)

    @property
    def unreliable(self) -> bool:
        return any(f > UNRELIABLE_FAILURE_SHARE * self.reps for f in self.failures.values())

    def rows(self) -> List[Dict[str, Union[str, int, float]]]:
        return [
            {
                "family": self.spec.family.value,
                "p": self.spec.p,
                "x_cov": self.spec.x_cov.value,
                "error": self.spec.error.value,
                "n": self.n,
                "a": self.spec.a,
                "method": method,
                "rate": self.rate(method),
                "stderr": self.stderr(method),
            }
            for method in self.methods
        ]


ReplicationOutcome = List[Tuple[Optional[bool], float, int]]


def _replicate(
    spec: DgpSpec,
    n: int,
    methods: Sequence[MethodConfig],
    null_spec: NullModelSpec,
    seed: int,
    r: int,
    alpha: float,
) -> ReplicationOutcome:
    data = dgp_generate(spec, n, seed, r)
    outcome = []
    for k, method in enumerate(methods):
        try:
            report = method.run(data, null_spec, alpha, substream_seed(seed, r, k + 1))
        except AdaGlrError as e:
            logger.warning(f"{spec.label} n={n} rep {r} {method.token} failed: {e}")
            outcome.append((None, float("nan"), -1))
            continue
        outcome.append((bool(report.reject), float(report.statistic), int(report.q_hat)))
    return outcome


def run_experiment(
    spec: DgpSpec,
    n: int,
    reps: int,
    methods: Sequence[MethodConfig],
    seed: int = 0,
    alpha: float = 0.05,
    n_jobs: int = 1,
    keep_statistics: bool = False,
) -> ExperimentResult:
    """Replicate the DGP ``reps`` times and tally rejections per method.

    Replication r draws its data from the stream (seed, r), so results do not
    depend on ``n_jobs``.

    Raises:
        ConfigError: If reps < 1 or no methods are given
    """
    if reps < 1:
        raise ConfigError(f"reps must be at least 1, got {reps}")
    if not methods:
        raise ConfigError("at least one method is required")
    null_spec = null_spec_for(spec.family, spec.p)
    logger.info(f"experiment {spec.label} n={n} reps={reps} methods={[m.token for m in methods]}")

    start = time.perf_counter()
    outcomes = Parallel(n_jobs=n_jobs)(
        delayed(_replicate)(spec, n, methods, null_spec, seed, r, alpha) for r in range(reps)
    )
    elapsed = time.perf_counter() - start

    tokens = [m.token for m in methods]
    counts = {t: 0 for t in tokens}
    failures = {t: 0 for t in tokens}
    statistics = {t: np.full(reps, np.nan) for t in tokens}
    q_hats = {t: np.full(reps, -1, dtype=int) for t in tokens}
    for r, outcome in enumerate(outcomes):
        for token, (reject, value, q_hat) in zip(tokens, outcome):
            if reject is None:
                failures[token] += 1
                continue
            counts[token] += int(reject)
            statistics[token][r] = value
            q_hats[token][r] = q_hat

    result = ExperimentResult(
        spec,
        n,
        reps,
        tokens,
        counts,
        failures,
        statistics if keep_statistics else {},
        q_hats if keep_statistics else {},
        elapsed,
    )
    if result.unreliable:
        logger.warning(f"experiment {spec.label} n={n} is unreliable: failures {failures}")
    return result


@dataclass(frozen=True)
class ExperimentGrid:
    """A declarative grid of experiment cells.

    Cells are the product p x error x n x a; every cell reuses the master seed,
    so cells differing only in ``a`` share their covariates and errors.
    """

    family: Family
    p: Tuple[int, ...]
    a: Tuple[float, ...]
    n: Tuple[int, ...]
    error: Tuple[ErrorLaw, ...]
    methods: Tuple[str, ...]
    x_cov: CovarianceKind = CovarianceKind.IDENTITY
    sigma: float = 1.0
    reps: int = 500
    seed: int = 0
    alpha: float = 0.05
    bandwidth_scale: float = 1.5
    bootstrap_b: int = 250
    one_sided: bool = False
    output: Optional[Path] = None

    def specs(self) -> List[DgpSpec]:
        return [
            DgpSpec(self.family, p, a, error, self.sigma, self.x_cov)
            for p in self.p
            for error in self.error
            for a in self.a
        ]

    def method_configs(self) -> List[MethodConfig]:
        return [MethodConfig.parse(t, self.bandwidth_scale, self.bootstrap_b, self.one_sided) for t in self.methods]


def run_grid(grid: ExperimentGrid, n_jobs: int = 1, keep_statistics: bool = False) -> List[ExperimentResult]:
    """Run every cell of the grid in a fixed order."""
    methods = grid.method_configs()
    results = []
    for spec in grid.specs():
        for n in grid.n:
            results.append(
                run_experiment(spec, n, grid.reps, methods, grid.seed, grid.alpha, n_jobs, keep_statistics)
            )
    return results


def results_frame(results: Sequence[ExperimentResult]) -> pd.DataFrame:
    return pd.DataFrame([row for result in results for row in result.rows()], columns=CURVE_COLUMNS)


def curves_path(path: Path) -> Path:
    return path.with_name(f"{path.stem}_curves{path.suffix}")


def emit_table(results: Sequence[ExperimentResult], path: Union[str, Path], fmt: str = "csv") -> List[Path]:
    """Write the rejection-rate table and the power-curve data.

    Args:
        results: Experiment results
        path: Table path; the curve data goes next to it with a ``_curves`` suffix
        fmt: ``csv`` or ``json``

    Returns:
        The two paths written

    Raises:
        ConfigError: If results is empty or the format is unknown
        IOError: If a file cannot be written
    """
    if not results:
        raise ConfigError("no experiment results to emit")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown table format '{fmt}'")
    path = Path(path)
    frame = results_frame(results)
    table = frame[TABLE_COLUMNS]
    curves = frame.sort_values(
        ["family", "p", "x_cov", "error", "n", "method", "a"], kind="mergesort"
    ).reset_index(drop=True)
    write_table(table, path, fmt)
    write_table(curves, curves_path(path), fmt)
    return [path, curves_path(path)]
