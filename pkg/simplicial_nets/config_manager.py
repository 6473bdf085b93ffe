"""
Configuration Manager for simplicial network synthesis
Handles loading and accessing configuration data from YAML files.
"""

import copy
import math
from pathlib import Path
from typing import Any

import yaml

from simplicial_nets.error_handling import (
    ConfigError,
    ErrorCodes,
    get_logger,
    log_and_raise,
)
from simplicial_nets.simplicial_approximation import TIE_BREAKS

# Set up logging for this module
logger = get_logger(__name__)

DEFAULT_CONFIG_PATH = "config.yml"

DEFAULT_CONFIG: dict[str, dict[str, Any]] = {
    "geometry": {"tolerance": 1e-9, "max_condition": 1e12},
    "complex": {"intersection_tolerance": 1e-9},
    "approximation": {"resolution": 5, "max_t": 3, "tie_break": "smallest_index"},
    "network": {"equivalence_tolerance": 1e-9},
    "analysis": {
        "samples": 1000,
        "seed": 0,
        "grid_resolution": 4,
        "block_size": 256,
        "workers": 1,
        "show_progress": False,
    },
    "example": {
        "t1": 0,
        "t2": 0,
        "max_t1": 3,
        "samples": 2000,
        "seed": 0,
        "deltas": [0.1],
        "resolution": 5,
    },
    "logging": {"level": "INFO", "json": False, "file": None},
}


class ConfigManager:
    """Manages configuration loading and access for the synthesis pipeline."""

    def __init__(self, config_path: str | Path | None = None) -> None:
        """
        Initialize the ConfigManager.

        Args:
            config_path: Path to the configuration file. When omitted, config.yml
                is used if it exists and the built-in defaults otherwise.
        """
        self.explicit = config_path is not None
        self.config_path = Path(config_path or DEFAULT_CONFIG_PATH)
        self._config: dict[str, Any] = copy.deepcopy(DEFAULT_CONFIG)
        self._load_config()

    def _load_config(self) -> None:
        """Load configuration from YAML file and merge it over the defaults."""
        if not self.explicit and not self.config_path.exists():
            logger.debug(f"No {self.config_path} found, using built-in defaults")
            return
        try:
            logger.debug(f"Loading configuration from: {self.config_path}")

            with open(self.config_path, encoding="utf-8") as f:
                loaded = yaml.safe_load(f)
        except (FileNotFoundError, PermissionError) as e:
            log_and_raise(
                ConfigError(
                    f"Could not access configuration file {self.config_path}: {e}",
                    error_code=ErrorCodes.CONFIG_ACCESS_FAILED,
                    context={"config_path": str(self.config_path), "error": str(e)},
                ),
                logger=logger,
            )
        except yaml.YAMLError as e:
            log_and_raise(
                ConfigError(
                    f"Invalid YAML in configuration file {self.config_path}: {e}",
                    error_code=ErrorCodes.CONFIG_INVALID,
                    context={"config_path": str(self.config_path), "error": str(e)},
                ),
                logger=logger,
            )

        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            log_and_raise(
                ConfigError(
                    f"Configuration file {self.config_path} must contain a dictionary",
                    error_code=ErrorCodes.CONFIG_INVALID,
                    context={
                        "config_path": str(self.config_path),
                        "config_type": type(loaded).__name__,
                    },
                ),
                logger=logger,
            )
        for section, values in loaded.items():
            if isinstance(values, dict) and isinstance(self._config.get(section), dict):
                self._config[section].update(values)
            else:
                self._config[section] = values
        logger.debug(f"Configuration contains {len(self._config)} top-level sections")

    @property
    def config(self) -> dict[str, Any]:
        """Get the full configuration dictionary."""
        return self._config

    def _section(self, name: str) -> dict[str, Any]:
        section = self.config.get(name, {})
        if not isinstance(section, dict):
            log_and_raise(
                ConfigError(
                    f"Configuration section '{name}' must be a dictionary",
                    error_code=ErrorCodes.CONFIG_INVALID,
                    context={"section": name, "type": type(section).__name__},
                ),
                logger=logger,
            )
        return section

    def _value(self, section: str, key: str, cast: type) -> Any:
        try:
            return cast(self._section(section)[key])
        except KeyError as e:
            log_and_raise(
                ConfigError(
                    f"Missing '{section}.{key}' in configuration",
                    error_code=ErrorCodes.CONFIG_MISSING,
                    context={"section": f"{section}.{key}", "missing_key": str(e)},
                ),
                logger=logger,
            )
        except (TypeError, ValueError) as e:
            log_and_raise(
                ConfigError(
                    f"Invalid '{section}.{key}' configuration: {e}",
                    error_code=ErrorCodes.CONFIG_INVALID,
                    context={"section": f"{section}.{key}", "error": str(e)},
                ),
                logger=logger,
            )

    def get_geometry_config(self) -> dict[str, Any]:
        return dict(self._section("geometry"))

    def get_tolerance(self) -> float:
        """Membership tolerance shared by location, evaluation and the network."""
        return float(self._value("geometry", "tolerance", float))

    def get_max_condition(self) -> float:
        return float(self._value("geometry", "max_condition", float))

    def get_intersection_tolerance(self) -> float:
        return float(self._value("complex", "intersection_tolerance", float))

    def get_approximation_config(self) -> dict[str, Any]:
        return dict(self._section("approximation"))

    def get_resolution(self) -> int:
        return int(self._value("approximation", "resolution", int))

    def get_max_t(self) -> int:
        return int(self._value("approximation", "max_t", int))

    def get_tie_break(self) -> str:
        return str(self._value("approximation", "tie_break", str))

    def get_equivalence_tolerance(self) -> float:
        return float(self._value("network", "equivalence_tolerance", float))

    def get_analysis_config(self) -> dict[str, Any]:
        return dict(self._section("analysis"))

    def get_samples(self) -> int:
        return int(self._value("analysis", "samples", int))

    def get_seed(self) -> int:
        return int(self._value("analysis", "seed", int))

    def get_grid_resolution(self) -> int:
        return int(self._value("analysis", "grid_resolution", int))

    def get_block_size(self) -> int:
        return int(self._value("analysis", "block_size", int))

    def get_workers(self) -> int:
        return int(self._value("analysis", "workers", int))

    def get_show_progress(self) -> bool:
        return bool(self._value("analysis", "show_progress", bool))

    def get_example_config(self) -> dict[str, Any]:
        """Ball example settings."""
        return dict(self._section("example"))

    def get_logging_config(self) -> dict[str, Any]:
        return dict(self._section("logging"))

    def get_full_config(self) -> dict[str, Any]:
        return copy.deepcopy(self.config)

    def validate_config(self) -> list[str]:
        """Validate configuration and return list of validation errors."""
        errors: list[str] = []
        logger.debug("Starting configuration validation")

        for section in DEFAULT_CONFIG:
            if not isinstance(self.config.get(section), dict):
                errors.append(f"Section {section} must be a dictionary")
        if errors:
            return errors

        positive_reals = [
            ("geometry", "tolerance"),
            ("geometry", "max_condition"),
            ("complex", "intersection_tolerance"),
            ("network", "equivalence_tolerance"),
        ]
        for section, key in positive_reals:
            value = self.config[section].get(key)
            number = _as_real(value)
            if number is None or number <= 0:
                errors.append(f"{section}.{key} must be a positive number")

        positive_ints = [
            ("approximation", "resolution"),
            ("analysis", "grid_resolution"),
            ("analysis", "block_size"),
            ("analysis", "workers"),
            ("example", "resolution"),
        ]
        non_negative_ints = [
            ("approximation", "max_t"),
            ("analysis", "samples"),
            ("analysis", "seed"),
            ("example", "t1"),
            ("example", "t2"),
            ("example", "max_t1"),
            ("example", "samples"),
            ("example", "seed"),
        ]
        for section, key in positive_ints + non_negative_ints:
            value = self.config[section].get(key)
            minimum = 1 if (section, key) in positive_ints else 0
            if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
                errors.append(f"{section}.{key} must be an integer >= {minimum}")

        if self.config["approximation"].get("tie_break") not in TIE_BREAKS:
            errors.append(f"approximation.tie_break must be one of {list(TIE_BREAKS)}")

        deltas = self.config["example"].get("deltas")
        if not isinstance(deltas, list) or not deltas:
            errors.append("example.deltas must be a non-empty list")
        elif any((_as_real(delta) or 0.0) <= 0 for delta in deltas):
            errors.append("example.deltas must contain positive numbers")

        level = self.config["logging"].get("level")
        if str(level).upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            errors.append(f"logging.level {level!r} is not a valid log level")

        return errors


def _as_real(value: Any) -> float | None:
    """Numbers, and numeric strings such as YAML 1.1 reads 1.0e12 as."""
    if isinstance(value, bool):
        return None
    if not isinstance(value, int | float | str):
        return None
    try:
        number = float(value)
    except ValueError:
        return None
    return number if math.isfinite(number) else None


def create_config_manager(config_path: str | Path | None = None) -> ConfigManager:
    """Factory function to create a ConfigManager instance."""
    logger.debug(f"Creating ConfigManager instance with path: {config_path}")
    return ConfigManager(config_path)
