"""Command-line parser.

This module builds the argparse surface: one sub-command per verb
(``constants``, ``simulate``, ``test``, ``analyze``) sharing the test and
output options.
"""

import argparse
from typing import List, Optional

from adaglr import __version__
from adaglr.core.simlab import CovarianceKind, ErrorLaw, Family
from adaglr.utils.config import UserSettings

ADAPTIVE_STATS = ["sn-opg", "sn-mave", "rn-opg", "rn-mave"]
ALL_STATS = ADAPTIVE_STATS + ["fzz-a", "fzz-b"]
NULL_FORMS = ["linear", "linear-noint", "scaled-exp"]


def parse_selector(value: str) -> str:
    """Turn ``rre``, ``bic`` or ``fixed:K`` into the method-token suffix."""
    value = value.strip().lower()
    if value in ("rre", "bic"):
        return value
    if value.startswith("fixed:"):
        k = value.split(":", 1)[1]
        if k.isdigit() and int(k) >= 1:
            return f"fixed{int(k)}"
    raise argparse.ArgumentTypeError(f"selector must be rre, bic or fixed:K, got '{value}'")


def method_token(stat: str, selector: Optional[str] = None, unadjusted: bool = False) -> str:
    """Combine --stat, --selector and --unadjusted into a method token.

    The baseline tokens take neither a selector nor the size adjustment.
    """
    if stat.startswith("fzz"):
        return stat
    token = stat if selector is None else f"{stat}-{selector}"
    return f"{token}-unadj" if unadjusted else token


def _float_list(value: str) -> List[float]:
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{value}'") from e


def _int_list(value: str) -> List[int]:
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{value}'") from e


def _add_test_options(parser: argparse.ArgumentParser, settings: UserSettings, stats: List[str]) -> None:
    group = parser.add_argument_group("test options")
    group.add_argument("--selector", type=parse_selector, help="dimension selector: rre, bic or fixed:K")
    group.add_argument("--unadjusted", action="store_true", help="skip the finite-sample size adjustment")
    group.add_argument("--alpha", type=float, default=settings.alpha, help="significance level")
    group.add_argument("--one-sided", action="store_true", help="upper-tail p-values")
    group.add_argument(
        "--bandwidth-scale", type=float, default=settings.bandwidth_scale, help="c in h = c n^(-1/(4+q))"
    )
    group.add_argument("--seed", type=int, default=0, help="master seed")
    if "fzz-b" in stats:
        group.add_argument("--bootstrap-b", type=int, default=settings.bootstrap_b, help="bootstrap resamples")


def _add_data_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("data options")
    group.add_argument("--data", default="mussels.csv", help="CSV dataset name or path")
    group.add_argument("--response", default="M", help="response column")
    group.add_argument("--covariates", default="H,L,W,S", help="comma-separated covariate columns")
    group.add_argument("--yeo-johnson", type=float, default=None, metavar="LAMBDA", help="Yeo-Johnson transform")
    scaling = group.add_mutually_exclusive_group()
    scaling.add_argument("--standardize", dest="standardize", action="store_true", default=None)
    scaling.add_argument("--raw", dest="standardize", action="store_false", help="do not standardize")
    intercept = group.add_mutually_exclusive_group()
    intercept.add_argument("--intercept", dest="intercept", action="store_true", default=None)
    intercept.add_argument("--no-intercept", dest="intercept", action="store_false")


def _add_model_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("model options")
    group.add_argument("--model", type=str.upper, choices=[f.value for f in Family], help="DGP family")
    group.add_argument("--p", type=_int_list, default=None, help="dimension(s)")
    group.add_argument("--n", type=_int_list, default=[100], help="sample size(s)")
    group.add_argument("--a", type=_float_list, default=[0.0], help="amplitude(s)")
    group.add_argument("--error", type=str.lower, action="append", choices=[e.value for e in ErrorLaw])
    group.add_argument("--x-cov", type=str.lower, default="identity", choices=[c.value for c in CovarianceKind])
    group.add_argument("--sigma", type=float, default=1.0, help="sd of normal errors")


def create_parser(settings: Optional[UserSettings] = None) -> argparse.ArgumentParser:
    """Create the command-line parser.

    Args:
        settings: User settings supplying option defaults

    Returns:
        ArgumentParser with one sub-command per verb
    """
    settings = settings or UserSettings()
    parser = argparse.ArgumentParser(
        prog="adaglr",
        description="Model-adaptive generalized likelihood ratio tests for parametric regression.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    parser.add_argument("--threads", type=int, default=settings.threads, help="parallel workers")
    verbs = parser.add_subparsers(dest="command", metavar="COMMAND")
    verbs.required = True

    constants = verbs.add_parser("constants", help="kernel constants by quadrature")
    constants.add_argument("--format", choices=["text", "json"], default="text")
    constants.add_argument("--out", default=None, help="write JSON here")

    simulate = verbs.add_parser("simulate", help="Monte Carlo size and power")
    simulate.add_argument("--grid", default=None, help="JSON experiment grid")
    _add_model_options(simulate)
    simulate.add_argument("--stat", action="append", choices=ALL_STATS, help="repeat for several methods")
    simulate.add_argument("--reps", type=int, default=500)
    simulate.add_argument("--keep-statistics", action="store_true", help="report mean/sd of statistics and q_hat")
    simulate.add_argument("--out", default=None, help="result table path")
    simulate.add_argument("--format", choices=["csv", "json"], default="csv")
    _add_test_options(simulate, settings, ALL_STATS)

    test = verbs.add_parser("test", help="test a null model on a dataset or one simulated draw")
    source = test.add_mutually_exclusive_group(required=True)
    source.add_argument("--data", help="CSV dataset")
    source.add_argument("--model", type=str.upper, choices=[f.value for f in Family], help="simulate one draw")
    test.add_argument("--response", default=None)
    test.add_argument("--covariates", default=None)
    test.add_argument("--raw", dest="standardize", action="store_false", default=True, help="do not standardize")
    test.add_argument("--null", choices=NULL_FORMS, default=None, help="null model form")
    test.add_argument("--p", type=int, default=None)
    test.add_argument("--n", type=int, default=100)
    test.add_argument("--a", type=float, default=0.0)
    test.add_argument("--error", type=str.lower, default="normal", choices=[e.value for e in ErrorLaw])
    test.add_argument("--x-cov", type=str.lower, default="identity", choices=[c.value for c in CovarianceKind])
    test.add_argument("--sigma", type=float, default=1.0)
    test.add_argument("--stat", choices=ALL_STATS, default="rn-opg")
    test.add_argument("--out", default=None, help="JSON report path")
    _add_test_options(test, settings, ALL_STATS)

    analyze = verbs.add_parser("analyze", help="real-data pipeline on a CSV file")
    _add_data_options(analyze)
    analyze.add_argument("--stat", choices=ADAPTIVE_STATS, default="rn-opg")
    analyze.add_argument("--out", default=None, help="JSON report path")
    _add_test_options(analyze, settings, ADAPTIVE_STATS)

    return parser
