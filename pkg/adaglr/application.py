"""Main application class.

This module provides the command-line application. It can be used both as
the standalone ``adaglr`` program and as a library entry point through
:meth:`AdaGlrApplication.run`.
"""

import argparse
import json
import logging
import sys
from typing import Callable, Dict, List, Optional

from adaglr.cli.parser import create_parser, method_token
from adaglr.cli.summary import render_constants, render_experiments
from adaglr.core.analysis import analyze, summarize
from adaglr.core.data import ColumnSchema, Dataset
from adaglr.core.glrtest import TestConfig
from adaglr.core.kernels import kernel_constants
from adaglr.core.nullfit import NullModelSpec
from adaglr.core.simlab import (
    CovarianceKind,
    DgpSpec,
    ErrorLaw,
    ExperimentGrid,
    Family,
    MethodConfig,
    default_p,
    dgp_generate,
    emit_table,
    null_spec_for,
    run_grid,
)
from adaglr.errors import AdaGlrError, ConfigError, DataError, ExperimentUnreliableError
from adaglr.utils.config import UserSettings, load_grid, load_settings
from adaglr.utils.file_ops import csv_header, find_dataset, load_dataset, write_json_report

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
VERBOSITY = {0: logging.WARNING, 1: logging.INFO}


def _split(columns: Optional[str]) -> List[str]:
    return [c.strip() for c in columns.split(",") if c.strip()] if columns else []


def null_spec_from_name(name: str, p: int) -> NullModelSpec:
    if name == "linear":
        return NullModelSpec.linear(p, intercept=True)
    if name == "linear-noint":
        return NullModelSpec.linear(p, intercept=False)
    if name == "scaled-exp":
        return NullModelSpec.scaled_exp(p)
    raise ConfigError(f"unknown null model '{name}'")


class AdaGlrApplication:
    """Command-line application.

    Each verb is registered as an action; :meth:`run` parses the arguments,
    dispatches to the action and turns library errors into exit codes.
    """

    def __init__(self, settings: Optional[UserSettings] = None) -> None:
        """Initialize the application.

        Args:
            settings: Option defaults; read from the user settings file when omitted
        """
        self.settings = settings or load_settings()
        self.parser = create_parser(self.settings)
        self._actions: Dict[str, Callable[[argparse.Namespace], None]] = {}

        # Set up actions
        self._setup_actions()

    def _setup_actions(self) -> None:
        """Register one handler per verb."""
        self._actions["constants"] = self._on_constants
        self._actions["simulate"] = self._on_simulate
        self._actions["test"] = self._on_test
        self._actions["analyze"] = self._on_analyze

    def run(self, argv: Optional[List[str]] = None) -> int:
        """Parse ``argv`` and run the requested verb.

        Args:
            argv: Arguments without the program name; defaults to sys.argv[1:]

        Returns:
            Exit code: 0 success, 2 configuration, 3 data, 4 numerical,
            5 unreliable experiment
        """
        args = self.parser.parse_args(argv)
        logging.getLogger().setLevel(VERBOSITY.get(args.verbose, logging.DEBUG))
        try:
            self._actions[args.command](args)
        except AdaGlrError as e:
            logger.error(f"{args.command} failed: {e}")
            print(f"error: {e}", file=sys.stderr)
            return e.exit_code
        except FileNotFoundError as e:
            logger.error(f"{args.command} failed: {e}")
            print(f"error: {e}", file=sys.stderr)
            return DataError.exit_code
        except OSError as e:
            logger.error(f"{args.command} failed: {e}")
            print(f"error: {e}", file=sys.stderr)
            return 1
        return 0

    def _on_constants(self, args: argparse.Namespace) -> None:
        """Handle the constants verb."""
        constants = kernel_constants()
        if args.format == "json":
            print(json.dumps(constants.to_dict(), indent=2))
        else:
            print(render_constants(constants))
        if args.out:
            write_json_report(args.out, constants.to_dict())

    def _grid_from_args(self, args: argparse.Namespace) -> ExperimentGrid:
        if args.grid:
            return load_grid(args.grid)
        if not args.model:
            raise ConfigError("simulate needs --grid or --model")
        family = Family(args.model)
        stats = args.stat or ["rn-opg"]
        return ExperimentGrid(
            family=family,
            p=tuple(args.p or [default_p(family)]),
            a=tuple(args.a),
            n=tuple(args.n),
            error=tuple(ErrorLaw(e) for e in (args.error or ["normal"])),
            methods=tuple(method_token(s, args.selector, args.unadjusted) for s in stats),
            x_cov=CovarianceKind(args.x_cov),
            sigma=args.sigma,
            reps=args.reps,
            seed=args.seed,
            alpha=args.alpha,
            bandwidth_scale=args.bandwidth_scale,
            bootstrap_b=args.bootstrap_b,
            one_sided=args.one_sided,
        )

    def _on_simulate(self, args: argparse.Namespace) -> None:
        """Handle the simulate verb."""
        grid = self._grid_from_args(args)
        results = run_grid(grid, n_jobs=args.threads, keep_statistics=args.keep_statistics)
        out = args.out or grid.output
        if out:
            for path in emit_table(results, out, args.format):
                logger.info(f"Wrote {path}")
        print(render_experiments(results, args.keep_statistics))
        unreliable = [r for r in results if r.unreliable]
        if unreliable:
            raise ExperimentUnreliableError(
                f"{len(unreliable)} of {len(results)} cells exceeded the replication failure limit"
            )

    def _dataset_from_args(self, args: argparse.Namespace) -> Dataset:
        if args.model:
            family = Family(args.model)
            spec = DgpSpec(
                family, args.p or default_p(family), args.a, ErrorLaw(args.error), args.sigma,
                CovarianceKind(args.x_cov),
            )
            return dgp_generate(spec, args.n, args.seed)
        path = find_dataset(args.data)
        header = csv_header(path)
        response = args.response or header[0]
        covariates = _split(args.covariates) or [c for c in header if c != response]
        return load_dataset(path, ColumnSchema(response, covariates, args.standardize))

    def _on_test(self, args: argparse.Namespace) -> None:
        """Handle the test verb."""
        data = self._dataset_from_args(args)
        if args.null:
            spec = null_spec_from_name(args.null, data.p)
        elif args.model:
            spec = null_spec_for(Family(args.model), data.p)
        else:
            spec = NullModelSpec.linear(data.p)
        method = MethodConfig.parse(
            method_token(args.stat, args.selector, args.unadjusted),
            args.bandwidth_scale,
            args.bootstrap_b,
            args.one_sided,
        )
        report = method.run(data, spec, args.alpha, args.seed, n_jobs=args.threads)
        print(summarize(report, data))
        if args.out:
            write_json_report(args.out, report.to_dict())

    def _on_analyze(self, args: argparse.Namespace) -> None:
        """Handle the analyze verb."""
        standardize = args.standardize if args.standardize is not None else args.yeo_johnson is None
        schema = ColumnSchema(args.response, _split(args.covariates), standardize, args.yeo_johnson, args.intercept)
        method = MethodConfig.parse(
            method_token(args.stat, args.selector, args.unadjusted), args.bandwidth_scale, one_sided=args.one_sided
        )
        config = TestConfig(method.projection, method.variant, args.alpha, args.one_sided)
        result = analyze(args.data, schema, config, args.out)
        print(result.summary)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the standalone application.

    Returns:
        Exit code
    """
    logging.basicConfig(level=logging.WARNING, format=LOG_FORMAT)
    try:
        app = AdaGlrApplication()
    except AdaGlrError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    return app.run(argv)


if __name__ == "__main__":
    sys.exit(main())
