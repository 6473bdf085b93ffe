import functools
import logging
import os
import sys
import traceback
import types
from collections.abc import Callable
from datetime import datetime, timezone
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, NoReturn, TypeVar

UTC = timezone.utc

F = TypeVar("F", bound=Callable[..., Any])


# Error codes for different types of errors
class ErrorCodes:
    CONFIG_INVALID = "CONFIG_001"
    CONFIG_MISSING = "CONFIG_002"
    CONFIG_ACCESS_FAILED = "CONFIG_003"
    COMPLEX_INVALID = "COMPLEX_001"
    COMPLEX_NON_PURE = "COMPLEX_002"
    COMPLEX_AFFINELY_DEPENDENT = "COMPLEX_003"
    COMPLEX_BAD_INTERSECTION = "COMPLEX_004"
    COMPLEX_INDEX_OUT_OF_RANGE = "COMPLEX_005"
    COMPLEX_DUPLICATE_SIMPLEX = "COMPLEX_006"
    COMPLEX_NOT_A_SIMPLEX = "COMPLEX_007"
    COMPLEX_NON_POSITIVE_EPSILON = "COMPLEX_008"
    GEOM_DEGENERATE_SIMPLEX = "GEOM_001"
    GEOM_OFF_AFFINE_HULL = "GEOM_002"
    GEOM_TOO_MANY_POINTS = "GEOM_003"
    APPROX_NOT_A_SIMPLEX_IMAGE = "APPROX_001"
    APPROX_INVALID_VERTEX_MAP = "APPROX_002"
    APPROX_STAR_CONDITION_UNSATISFIED = "APPROX_003"
    APPROX_SAMPLER_FAILURE = "APPROX_004"
    NET_OUTSIDE_DOMAIN = "NET_001"
    NET_INVARIANT_VIOLATION = "NET_002"
    NET_NOT_FULL_DIMENSIONAL = "NET_003"
    ANALYSIS_OVERFLOW = "ANALYSIS_001"
    ANALYSIS_NOT_CONVERGED = "ANALYSIS_002"
    EXAMPLE_OUTSIDE_SIMPLEX = "EXAMPLE_001"
    EXAMPLE_OUTSIDE_BALL = "EXAMPLE_002"
    IO_FAILED = "IO_001"
    IO_FORMAT_ERROR = "IO_002"
    UNKNOWN_ERROR = "UNKNOWN_001"


class SimplicialNetsError(Exception):
    """Base class for every error raised by the package."""

    default_code = ErrorCodes.UNKNOWN_ERROR

    def __init__(
        self,
        message: str,
        error_code: str | None = None,
        context: dict[str, Any] | None = None,
    ):
        super().__init__(message)
        self.error_code = error_code or self.default_code
        self.context = context or {}
        self.timestamp = datetime.now(UTC)


class ConfigError(SimplicialNetsError):
    """Raised for configuration-related errors."""

    default_code = ErrorCodes.CONFIG_INVALID


class ComplexError(SimplicialNetsError):
    """Raised when a simplicial complex is malformed or misused."""

    default_code = ErrorCodes.COMPLEX_INVALID


class InvalidComplexError(ComplexError):
    default_code = ErrorCodes.COMPLEX_INVALID


class NonPureError(ComplexError):
    default_code = ErrorCodes.COMPLEX_NON_PURE


class AffinelyDependentError(ComplexError):
    default_code = ErrorCodes.COMPLEX_AFFINELY_DEPENDENT


class BadIntersectionError(ComplexError):
    default_code = ErrorCodes.COMPLEX_BAD_INTERSECTION


class IndexOutOfRangeError(ComplexError):
    default_code = ErrorCodes.COMPLEX_INDEX_OUT_OF_RANGE


class DuplicateSimplexError(ComplexError):
    default_code = ErrorCodes.COMPLEX_DUPLICATE_SIMPLEX


class NotASimplexError(ComplexError):
    default_code = ErrorCodes.COMPLEX_NOT_A_SIMPLEX


class NonPositiveEpsilonError(ComplexError):
    default_code = ErrorCodes.COMPLEX_NON_POSITIVE_EPSILON


class GeometryError(SimplicialNetsError):
    """Raised for failed linear solves and ill-posed geometric queries."""

    default_code = ErrorCodes.GEOM_DEGENERATE_SIMPLEX


class DegenerateSimplexError(GeometryError):
    default_code = ErrorCodes.GEOM_DEGENERATE_SIMPLEX


class OffAffineHullError(GeometryError):
    default_code = ErrorCodes.GEOM_OFF_AFFINE_HULL


class TooManyPointsError(GeometryError):
    default_code = ErrorCodes.GEOM_TOO_MANY_POINTS


class ApproximationError(SimplicialNetsError):
    """Raised for vertex map and simplicial approximation errors."""

    default_code = ErrorCodes.APPROX_INVALID_VERTEX_MAP


class NotASimplexImageError(ApproximationError):
    default_code = ErrorCodes.APPROX_NOT_A_SIMPLEX_IMAGE


class InvalidVertexMapError(ApproximationError):
    default_code = ErrorCodes.APPROX_INVALID_VERTEX_MAP


class StarConditionUnsatisfiedError(ApproximationError):
    default_code = ErrorCodes.APPROX_STAR_CONDITION_UNSATISFIED


class SamplerFailureError(ApproximationError):
    default_code = ErrorCodes.APPROX_SAMPLER_FAILURE


class NetworkError(SimplicialNetsError):
    """Raised for network synthesis, evaluation and serialization errors."""

    default_code = ErrorCodes.NET_INVARIANT_VIOLATION


class OutsideDomainError(NetworkError):
    default_code = ErrorCodes.NET_OUTSIDE_DOMAIN


class FormatError(SimplicialNetsError):
    """Raised when a JSON artifact (complex, vertex map, network) is malformed."""

    default_code = ErrorCodes.IO_FORMAT_ERROR


class InvariantViolationError(NetworkError):
    default_code = ErrorCodes.NET_INVARIANT_VIOLATION


class NotFullDimensionalError(NetworkError):
    default_code = ErrorCodes.NET_NOT_FULL_DIMENSIONAL


class AnalysisError(SimplicialNetsError):
    """Raised for estimator and bound evaluation errors."""

    default_code = ErrorCodes.ANALYSIS_OVERFLOW


class ComplexityOverflowError(AnalysisError):
    default_code = ErrorCodes.ANALYSIS_OVERFLOW


class ExtendedMeshNotReachedError(AnalysisError):
    default_code = ErrorCodes.ANALYSIS_NOT_CONVERGED


class ExampleError(SimplicialNetsError):
    """Raised by the built-in ball example."""

    default_code = ErrorCodes.EXAMPLE_OUTSIDE_SIMPLEX


class OutsideSimplexError(ExampleError):
    default_code = ErrorCodes.EXAMPLE_OUTSIDE_SIMPLEX


class OutsideBallError(ExampleError):
    default_code = ErrorCodes.EXAMPLE_OUTSIDE_BALL


def validate_log_level(level: str) -> int:
    """Validate and return log level."""
    valid_levels = {
        "DEBUG": logging.DEBUG,
        "INFO": logging.INFO,
        "WARNING": logging.WARNING,
        "ERROR": logging.ERROR,
        "CRITICAL": logging.CRITICAL,
    }
    level_upper = level.upper()
    if level_upper not in valid_levels:
        raise ValueError(
            f"Invalid log level: {level}. Valid levels: {list(valid_levels.keys())}"
        )
    return valid_levels[level_upper]


def setup_logging(
    log_level: int | None = None,
    log_file: str | None = None,
    log_to_console: bool = True,
    use_json: bool = False,
    include_timestamp: bool = True,
    max_log_size: int = 10 * 1024 * 1024,  # 10MB
    backup_count: int = 5,
) -> None:
    """
    Set up logging for the command line tools.
    Args:
        log_level: Logging level (defaults to INFO, can be overridden by LOG_LEVEL env var)
        log_file: Optional path to a log file
        log_to_console: Whether to log to the console (stderr)
        use_json: Whether to use JSON format for structured logging
        include_timestamp: Whether to include timestamps in log messages
        max_log_size: Maximum size of log file before rotation (bytes)
        backup_count: Number of backup log files to keep
    """
    basic_logger = logging.getLogger(__name__)

    if log_level is None:
        env_level = os.environ.get("LOG_LEVEL", "INFO")
        try:
            log_level = validate_log_level(env_level)
        except ValueError as e:
            basic_logger.warning(
                f"Invalid log level '{env_level}': {e}. Using INFO level."
            )
            log_level = logging.INFO

    handlers: list[logging.Handler] = []

    if log_to_console:
        handlers.append(logging.StreamHandler(sys.stderr))

    if log_file:
        log_path = Path(log_file)
        try:
            log_path.parent.mkdir(parents=True, exist_ok=True)
            handlers.append(
                RotatingFileHandler(
                    log_file,
                    maxBytes=max_log_size,
                    backupCount=backup_count,
                    encoding="utf-8",
                )
            )
        except OSError as e:
            basic_logger.warning(
                f"Could not set up file logging: {e}", extra={"log_file": log_file}
            )

    formatter: logging.Formatter
    if use_json:
        try:
            from pythonjsonlogger.json import JsonFormatter
        except ImportError:
            from pythonjsonlogger.jsonlogger import (  # type: ignore[no-redef]
                JsonFormatter,
            )
        formatter = JsonFormatter(
            fmt="%(asctime)s %(name)s %(levelname)s %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )
    elif include_timestamp:
        formatter = logging.Formatter(
            "%(asctime)s [%(levelname)s] %(name)s: %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )
    else:
        formatter = logging.Formatter("[%(levelname)s] %(name)s: %(message)s")

    for handler in handlers:
        handler.setFormatter(formatter)

    logging.basicConfig(
        level=log_level,
        handlers=handlers or [logging.StreamHandler(sys.stderr)],
        force=True,
    )

    logging.getLogger(__name__).debug(
        "Logging initialized",
        extra={
            "log_level": logging.getLevelName(log_level),
            "log_file": log_file,
            "console_logging": log_to_console,
            "json_format": use_json,
        },
    )


def global_exception_handler(
    exc_type: type[BaseException],
    exc_value: BaseException,
    exc_traceback: types.TracebackType | None,
) -> None:
    """Global exception handler for uncaught exceptions."""
    if issubclass(exc_type, KeyboardInterrupt):
        sys.__excepthook__(exc_type, exc_value, exc_traceback)
        return

    logger = logging.getLogger(__name__)
    logger.critical(
        "Uncaught exception",
        extra={
            "exception_type": exc_type.__name__,
            "exception_message": str(exc_value),
            "traceback": "".join(traceback.format_tb(exc_traceback)),
        },
        exc_info=(exc_type, exc_value, exc_traceback),
    )


def log_and_raise(
    exception: Exception,
    logger: logging.Logger | None = None,
    context: dict[str, Any] | None = None,
) -> NoReturn:
    """
    Log the exception with context and raise it.
    Args:
        exception: The exception to log and raise
        logger: Optional logger to use (defaults to root logger)
        context: Additional context to include in the log
    """
    if logger is None:
        logger = logging.getLogger()

    if context:
        existing_context = getattr(exception, "context", None)
        if isinstance(existing_context, dict):
            existing_context.update(context)

    timestamp_value = getattr(exception, "timestamp", datetime.now(UTC))
    log_data = {
        "exception_type": type(exception).__name__,
        "exception_message": str(exception),
        "error_code": getattr(exception, "error_code", ErrorCodes.UNKNOWN_ERROR),
        "context": getattr(exception, "context", {}),
        "timestamp": timestamp_value.isoformat(),
    }

    # Only attach a traceback when re-raising from inside an except block
    active = sys.exc_info()[0] is not None
    logger.error(f"Exception occurred: {exception}", extra=log_data, exc_info=active)
    raise exception


def with_error_context(context: dict[str, Any]) -> Callable[[F], F]:
    """
    Decorator to add context to exceptions.
    Args:
        context: Context to add to any exceptions raised
    """

    def decorator(func: F) -> F:
        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            try:
                return func(*args, **kwargs)
            except SimplicialNetsError as e:
                for key, value in context.items():
                    e.context.setdefault(key, value)
                raise

        return wrapper  # type: ignore[return-value]

    return decorator


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger with the specified name.
    Args:
        name: Logger name
    Returns:
        Configured logger instance
    """
    return logging.getLogger(name)


def setup_global_exception_handling() -> None:
    """Set up global exception handling."""
    sys.excepthook = global_exception_handler
