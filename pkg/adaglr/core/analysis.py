"""Real-data pipeline: load a CSV, fit the linear null, run the adaptive test."""

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Union

from adaglr.core.data import ColumnSchema, Dataset
from adaglr.core.glrtest import TestConfig, TestReport, run_test, stage
from adaglr.core.nullfit import NullModelSpec
from adaglr.utils.file_ops import find_dataset, load_dataset, write_json_report

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnalysisResult:
    report: TestReport
    summary: str
    data: Dataset
    source: Path


def summarize(report: TestReport, data: Optional[Dataset] = None) -> str:
    """Human-readable summary of a test report."""
    lines = [f"Test: {report.variant.value}"]
    if data is not None:
        lines.append(f"Data: n={data.n}, p={data.p} ({', '.join(data.covariate_names)} -> {data.response_name})")
    lines += [
        f"Statistic: {report.statistic:.4f} (standardized {report.standardized:.4f}, raw {report.raw_statistic:.4f})",
        f"p-value: {report.p_value:.4f} ({'one' if report.one_sided else 'two'}-sided)",
        f"Decision at alpha={report.alpha:g}: {'reject' if report.reject else 'do not reject'} the null model",
        f"q_hat: {report.q_hat}, bandwidth: {report.bandwidth:.4f}",
    ]
    if report.null_fit is not None:
        beta = ", ".join(f"{b:.3f}" for b in report.null_fit.beta_hat)
        lines.append(f"Null fit: beta_hat=({beta}), rss0={report.null_fit.rss0:.4f}")
    if report.dropped_rows:
        lines.append(f"Rows without kernel neighbours: {report.dropped_rows}")
    return "\n".join(lines)


def analyze(
    file_path: Union[str, Path],
    schema: ColumnSchema,
    config: Optional[TestConfig] = None,
    report_path: Optional[Union[str, Path]] = None,
) -> AnalysisResult:
    """Test a linear null model on a CSV dataset.

    Args:
        file_path: Dataset path or name (see :func:`find_dataset`)
        schema: Columns and preprocessing
        config: Test configuration
        report_path: Where to write the JSON report, if anywhere

    Returns:
        AnalysisResult with the report and its summary

    Raises:
        FileNotFoundError: If the dataset cannot be found
        AdaGlrError: From loading or any test stage
    """
    config = config or TestConfig()
    source = find_dataset(file_path)
    with stage("load"):
        data = load_dataset(source, schema)
    spec = NullModelSpec.linear(data.p, intercept=schema.fit_intercept)
    logger.info(f"Analyzing {source}: n={data.n}, p={data.p}, intercept={schema.fit_intercept}")

    report = run_test(data, spec, config)
    if report_path is not None:
        payload = report.to_dict()
        payload["dataset"] = str(source)
        payload["schema"] = asdict(schema)
        write_json_report(Path(report_path), payload)
    return AnalysisResult(report, summarize(report, data), data, source)
