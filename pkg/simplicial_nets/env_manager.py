"""
Environment Manager
Reads the environment overrides of the CLI, loading a .env file first when one
exists in the working directory.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

from simplicial_nets.error_handling import ConfigError, ErrorCodes, get_logger

logger = get_logger(__name__)

CONFIG_VARIABLE = "SIMPLICIAL_NETS_CONFIG"
WORKERS_VARIABLE = "SIMPLICIAL_NETS_WORKERS"
LOG_LEVEL_VARIABLE = "LOG_LEVEL"


class EnvManager:
    """Manages environment variables for local runs (.env) and CI."""

    def __init__(self, env_file: str | Path | None = None) -> None:
        """
        Initialize the environment manager.

        Args:
            env_file: .env file to load (defaults to ./.env)
        """
        self.env_file = Path(env_file) if env_file is not None else Path.cwd() / ".env"
        self._load_env_file()

    def _load_env_file(self) -> None:
        """Load environment variables from the .env file if it exists."""
        if self.env_file.exists():
            # existing variables win over the file
            load_dotenv(self.env_file, override=False)
            logger.debug(f"Loaded environment from {self.env_file}")
        else:
            logger.debug(f"No .env file found at {self.env_file}")

    def get_config_path(self) -> str | None:
        """Configuration file named by the environment."""
        return os.environ.get(CONFIG_VARIABLE) or None

    def get_workers(self) -> int | None:
        """Worker count override, or None when unset."""
        raw = os.environ.get(WORKERS_VARIABLE)
        if not raw:
            return None
        try:
            workers = int(raw)
        except ValueError as e:
            raise ConfigError(
                f"{WORKERS_VARIABLE} must be an integer, got {raw!r}",
                error_code=ErrorCodes.CONFIG_INVALID,
                context={"variable": WORKERS_VARIABLE, "value": raw},
            ) from e
        if workers < 1:
            raise ConfigError(
                f"{WORKERS_VARIABLE} must be >= 1, got {workers}",
                error_code=ErrorCodes.CONFIG_INVALID,
                context={"variable": WORKERS_VARIABLE, "value": raw},
            )
        return workers

    def get_log_level(self) -> str | None:
        return os.environ.get(LOG_LEVEL_VARIABLE) or None

    def get_status(self) -> dict[str, bool]:
        """Which overrides are set."""
        return {
            name: bool(os.environ.get(name))
            for name in (CONFIG_VARIABLE, WORKERS_VARIABLE, LOG_LEVEL_VARIABLE)
        }


_env_manager: EnvManager | None = None


def get_env_manager() -> EnvManager:
    """Process-wide EnvManager, created on first use."""
    global _env_manager
    if _env_manager is None:
        _env_manager = EnvManager()
    return _env_manager
