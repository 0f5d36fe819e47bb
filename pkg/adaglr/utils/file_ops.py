"""File operations utilities.

This module loads and saves CSV datasets, writes JSON reports and result
tables, and resolves dataset names against the standard data locations.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from adaglr.core.data import ColumnSchema, Dataset
from adaglr.core.transforms import standardize, yeo_johnson
from adaglr.errors import DataError
from adaglr.utils.xdg import get_user_data_dir

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# Repository data directory shipped next to the package.
REPO_DATA_DIR = Path(__file__).resolve().parents[2] / "data"

MIN_ROWS = 3


def find_dataset(name: PathLike) -> Path:
    """Resolve a dataset name.

    Looks for the name as given, then in the repository ``data/`` directory,
    then in the user data directory.

    Args:
        name: File name or path

    Returns:
        Path of the first existing candidate

    Raises:
        FileNotFoundError: If no candidate exists
    """
    given = Path(name)
    candidates = [given, REPO_DATA_DIR / given.name, get_user_data_dir() / given.name]
    for candidate in candidates:
        if candidate.is_file():
            logger.debug(f"Resolved dataset {name} to {candidate}")
            return candidate
    searched = ", ".join(str(c) for c in candidates)
    raise FileNotFoundError(f"Dataset not found: {name} (searched {searched})")


def read_csv_columns(file_path: Path, columns: List[str]) -> np.ndarray:
    """Read the named columns of a CSV file as floats.

    Args:
        file_path: CSV file with a header row
        columns: Columns to extract, in order

    Returns:
        Array of shape (rows, len(columns))

    Raises:
        FileNotFoundError: If the file doesn't exist
        IOError: If the file cannot be parsed
        DataError: If a column is missing or a cell is not numeric
    """
    if not file_path.exists():
        raise FileNotFoundError(f"File not found: {file_path}")
    try:
        frame = pd.read_csv(file_path, dtype=str, keep_default_na=False, skipinitialspace=True, encoding="utf-8")
    except Exception as e:
        logger.error(f"Failed to read CSV file {file_path}: {e}")
        raise IOError(f"Failed to read CSV file: {e}") from e

    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DataError(f"{file_path}: missing column(s) {', '.join(missing)}; found {', '.join(frame.columns)}")

    values = np.empty((len(frame), len(columns)))
    for k, column in enumerate(columns):
        cells = frame[column].str.strip()
        parsed = pd.to_numeric(cells, errors="coerce")
        bad = parsed.isna().to_numpy() | ~np.isfinite(parsed.to_numpy(dtype=float, na_value=np.nan))
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise DataError(
                f"{file_path}: non-numeric value '{cells.iloc[row]}' in column '{column}' "
                f"at data row {row + 1} (line {row + 2})"
            )
        values[:, k] = cells.to_numpy(dtype=object).astype(float)
    logger.debug(f"Read {len(frame)} rows of {columns} from {file_path}")
    return values


def load_dataset(file_path: PathLike, schema: ColumnSchema) -> Dataset:
    """Load a CSV dataset and apply the schema's preprocessing.

    The optional Yeo-Johnson transform is applied column by column first, then
    the optional standardization.

    Args:
        file_path: CSV file (comma-delimited, UTF-8, header required)
        schema: Column selection and preprocessing

    Returns:
        Dataset with the response and covariates named after their columns

    Raises:
        FileNotFoundError: If the file doesn't exist
        DataError: If columns are missing, cells are not numeric or n < 3
    """
    file_path = Path(file_path)
    values = read_csv_columns(file_path, schema.columns)
    if values.shape[0] < MIN_ROWS:
        raise DataError(f"{file_path}: need at least {MIN_ROWS} data rows, got {values.shape[0]}")
    if schema.yeo_johnson_lambda is not None:
        values = yeo_johnson(values, schema.yeo_johnson_lambda)
    if schema.standardize:
        values = standardize(values)
    return Dataset(values[:, 1:], values[:, 0], list(schema.covariates), schema.response)


def save_dataset(file_path: PathLike, data: Dataset) -> None:
    """Save a dataset as CSV with 17 significant digits.

    Args:
        file_path: Where to save the file
        data: Dataset to write, response first

    Raises:
        IOError: If the file cannot be written
    """
    file_path = Path(file_path)
    name = data.response_name or "y"
    frame = pd.DataFrame(np.column_stack([data.y, data.X]), columns=[name, *data.covariate_names])
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(file_path, index=False, float_format="%.17g", lineterminator="\n")
        logger.debug(f"Saved dataset {file_path} ({data.n} rows)")
    except Exception as e:
        logger.error(f"Failed to save dataset {file_path}: {e}")
        raise IOError(f"Failed to save dataset: {e}") from e


def write_json_report(file_path: PathLike, payload: Dict[str, Any]) -> None:
    """Write a JSON report.

    Raises:
        IOError: If the file cannot be written
    """
    file_path = Path(file_path)
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        with open(file_path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, default=_json_default)
            f.write("\n")
        logger.debug(f"Saved report {file_path}")
    except Exception as e:
        logger.error(f"Failed to save report {file_path}: {e}")
        raise IOError(f"Failed to save report: {e}") from e


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_table(frame: pd.DataFrame, file_path: PathLike, fmt: str = "csv", float_format: Optional[str] = "%.6f") -> None:
    """Write a result table as CSV or JSON records.

    Raises:
        IOError: If the file cannot be written
    """
    file_path = Path(file_path)
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            frame.to_json(file_path, orient="records", indent=2)
        else:
            frame.to_csv(file_path, index=False, float_format=float_format, lineterminator="\n")
        logger.debug(f"Saved table {file_path} ({len(frame)} rows)")
    except Exception as e:
        logger.error(f"Failed to save table {file_path}: {e}")
        raise IOError(f"Failed to save table: {e}") from e


def csv_header(file_path: PathLike) -> List[str]:
    """Column names of a CSV file.

    Raises:
        FileNotFoundError: If the file doesn't exist
        IOError: If the file cannot be parsed
    """
    file_path = Path(file_path)
    if not file_path.exists():
        raise FileNotFoundError(f"File not found: {file_path}")
    try:
        return [str(c).strip() for c in pd.read_csv(file_path, nrows=0, encoding="utf-8").columns]
    except Exception as e:
        logger.error(f"Failed to read CSV header {file_path}: {e}")
        raise IOError(f"Failed to read CSV header: {e}") from e
