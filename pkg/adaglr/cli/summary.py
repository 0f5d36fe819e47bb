"""Plain-text rendering for the command-line front end."""

from typing import List, Sequence

import numpy as np

from adaglr.core.kernels import KernelConstants
from adaglr.core.simlab import ExperimentResult


def render_constants(constants: KernelConstants) -> str:
    """Kernel constants, one per line."""
    return "\n".join(
        [
            "Quartic kernel K(u) = 15/16 (1 - u^2)^2 on [-1, 1]",
            f"K(0)               = {constants.k_at_zero:.10f}",
            f"int K^2            = {constants.int_k_squared:.10f}",
            f"int (2K - K*K)^2   = {constants.int_two_k_minus_conv_squared:.10f}",
            f"quadrature tol     = {constants.quadrature_tolerance:g}",
        ]
    )


def render_experiments(results: Sequence[ExperimentResult], keep_statistics: bool = False) -> str:
    """Fixed-width table of rejection rates, one row per cell and method."""
    header = f"{'family':<6} {'p':>2} {'error':<8} {'n':>5} {'a':>6} {'method':<16} {'rate':>6} {'stderr':>7} {'fail':>5}"
    if keep_statistics:
        header += f" {'mean':>7} {'sd':>7} {'q_hat':>6}"
    lines: List[str] = [header, "-" * len(header)]
    for result in results:
        spec = result.spec
        for method in result.methods:
            line = (
                f"{spec.family.value:<6} {spec.p:>2} {spec.error.value:<8} {result.n:>5} {spec.a:>6.3g} "
                f"{method:<16} {result.rate(method):>6.3f} {result.stderr(method):>7.4f} "
                f"{result.failures[method]:>5}"
            )
            if keep_statistics and method in result.statistics:
                values = result.statistics[method]
                values = values[np.isfinite(values)]
                q_hats = result.q_hats[method]
                q_hats = q_hats[q_hats > 0]
                mean = float(values.mean()) if values.size else float("nan")
                sd = float(values.std(ddof=1)) if values.size > 1 else float("nan")
                mode = int(np.bincount(q_hats).argmax()) if q_hats.size else 0
                line += f" {mean:>7.3f} {sd:>7.3f} {mode:>6}"
            lines.append(line)
    unreliable = [r for r in results if r.unreliable]
    if unreliable:
        lines.append("")
        lines.append(f"warning: {len(unreliable)} cell(s) had more than 5% failed replications")
    return "\n".join(lines)
