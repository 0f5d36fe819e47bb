"""Utility modules for file handling and user directories."""

from adaglr.utils.xdg import get_user_data_dir, get_user_config_dir, get_settings_file
from adaglr.utils.file_ops import find_dataset, load_dataset, save_dataset, write_json_report, write_table

__all__ = [
    "get_user_data_dir",
    "get_user_config_dir",
    "get_settings_file",
    "find_dataset",
    "load_dataset",
    "save_dataset",
    "write_json_report",
    "write_table",
]
