"""Experiment grid files and user settings.

Grid files are JSON objects mirroring :class:`ExperimentGrid`; list-valued
keys also accept a single value. The user settings file supplies defaults for
command-line options.
"""

import json
import logging
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from adaglr.core.simlab import CovarianceKind, ErrorLaw, ExperimentGrid, Family
from adaglr.errors import ConfigError
from adaglr.utils.xdg import get_settings_file

logger = logging.getLogger(__name__)

GRID_KEYS = {
    "family", "p", "a", "n", "error", "x_cov", "sigma", "reps", "methods",
    "seed", "alpha", "bandwidth_scale", "bootstrap_b", "one_sided", "output",
}
REQUIRED_GRID_KEYS = {"family", "p", "a", "n", "methods"}


@dataclass(frozen=True)
class UserSettings:
    """Defaults read from the settings file; command-line flags win."""

    threads: int = 1
    bandwidth_scale: float = 1.5
    alpha: float = 0.05
    bootstrap_b: int = 250


def _read_json(file_path: Path) -> Dict[str, Any]:
    try:
        with open(file_path, encoding="utf-8") as f:
            payload = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{file_path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    except OSError as e:
        logger.error(f"Failed to read {file_path}: {e}")
        raise IOError(f"Failed to read {file_path}: {e}") from e
    if not isinstance(payload, dict):
        raise ConfigError(f"{file_path}: expected a JSON object")
    return payload


def _as_tuple(value: Any) -> Tuple[Any, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return (value,)


def _enum(kind, value: Any, key: str):
    try:
        return kind(str(value).lower() if kind is not Family else str(value).upper())
    except ValueError as e:
        choices = ", ".join(m.value for m in kind)
        raise ConfigError(f"grid key '{key}': unknown value '{value}' (choose from {choices})") from e


def parse_grid(payload: Dict[str, Any]) -> ExperimentGrid:
    """Build an ExperimentGrid from a decoded grid object.

    Raises:
        ConfigError: On unknown keys, missing keys or invalid values
    """
    unknown = set(payload) - GRID_KEYS
    if unknown:
        raise ConfigError(f"unknown grid key(s): {', '.join(sorted(unknown))}")
    missing = REQUIRED_GRID_KEYS - set(payload)
    if missing:
        raise ConfigError(f"missing grid key(s): {', '.join(sorted(missing))}")

    output = payload.get("output")
    try:
        grid = ExperimentGrid(
            family=_enum(Family, payload["family"], "family"),
            p=tuple(int(v) for v in _as_tuple(payload["p"])),
            a=tuple(float(v) for v in _as_tuple(payload["a"])),
            n=tuple(int(v) for v in _as_tuple(payload["n"])),
            error=tuple(_enum(ErrorLaw, v, "error") for v in _as_tuple(payload.get("error", "normal"))),
            methods=tuple(str(v) for v in _as_tuple(payload["methods"])),
            x_cov=_enum(CovarianceKind, payload.get("x_cov", "identity"), "x_cov"),
            sigma=float(payload.get("sigma", 1.0)),
            reps=int(payload.get("reps", 500)),
            seed=int(payload.get("seed", 0)),
            alpha=float(payload.get("alpha", 0.05)),
            bandwidth_scale=float(payload.get("bandwidth_scale", 1.5)),
            bootstrap_b=int(payload.get("bootstrap_b", 250)),
            one_sided=bool(payload.get("one_sided", False)),
            output=None if output is None else Path(output),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid grid value: {e}") from e

    # Validate every cell and method token up front.
    grid.specs()
    grid.method_configs()
    return grid


def load_grid(file_path: Union[str, Path]) -> ExperimentGrid:
    """Load an experiment grid file."""
    file_path = Path(file_path)
    if not file_path.exists():
        raise FileNotFoundError(f"File not found: {file_path}")
    grid = parse_grid(_read_json(file_path))
    logger.info(f"Loaded grid {file_path}: {len(grid.specs()) * len(grid.n)} cells")
    return grid


def load_settings(file_path: Optional[Path] = None) -> UserSettings:
    """Load user settings, falling back to defaults when the file is absent.

    Raises:
        ConfigError: If the file holds unknown keys or invalid values
    """
    file_path = file_path or get_settings_file()
    if not file_path.exists():
        return UserSettings()
    payload = _read_json(file_path)
    known = {f.name for f in fields(UserSettings)}
    unknown = set(payload) - set(known)
    if unknown:
        raise ConfigError(f"{file_path}: unknown setting(s) {', '.join(sorted(unknown))}")
    try:
        settings = UserSettings(
            **{k: (int(v) if k in ("threads", "bootstrap_b") else float(v)) for k, v in payload.items()}
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{file_path}: invalid setting value: {e}") from e
    logger.debug(f"Loaded settings from {file_path}: {settings}")
    return settings

