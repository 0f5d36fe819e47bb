"""XDG Base Directory Standard utilities.

User settings live under the config directory and extra datasets under the
data directory, following the freedesktop.org XDG Base Directory
Specification.
"""

import logging
import os
from pathlib import Path

logger = logging.getLogger(__name__)

APP_NAME = "adaglr"
SETTINGS_NAME = "settings.json"


def _resolve(variable: str, fallback: Path, app_name: str) -> Path:
    # Relative values are invalid per the XDG rules and are ignored.
    base = os.environ.get(variable)
    if base and os.path.isabs(base):
        return Path(base) / app_name
    if base:
        logger.debug(f"Ignoring relative ${variable}={base}")
    return fallback / app_name


def get_user_data_dir(app_name: str = APP_NAME) -> Path:
    """Directory searched for datasets after ``data/``.

    Returns $XDG_DATA_HOME/app_name or ~/.local/share/app_name
    """
    return _resolve("XDG_DATA_HOME", Path.home() / ".local" / "share", app_name)


def get_user_config_dir(app_name: str = APP_NAME) -> Path:
    """Directory holding the user settings file.

    Returns $XDG_CONFIG_HOME/app_name or ~/.config/app_name
    """
    return _resolve("XDG_CONFIG_HOME", Path.home() / ".config", app_name)


def get_settings_file(app_name: str = APP_NAME) -> Path:
    """Path of the optional user settings file."""
    return get_user_config_dir(app_name) / SETTINGS_NAME
