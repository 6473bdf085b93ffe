"""
Report Generator Module
Deterministic JSON writing and reading for complexes, vertex maps, networks
and approximation reports.
"""

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from simplicial_nets.error_handling import (
    ErrorCodes,
    FormatError,
    SimplicialNetsError,
    get_logger,
    log_and_raise,
)

logger = get_logger(__name__)


def to_jsonable(value: Any) -> Any:
    """Convert numpy containers and scalars (recursively) into JSON types."""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, list | tuple):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float) and not math.isfinite(value):
        # JSON has no inf/nan; keep the report loadable by strict parsers
        return str(value)
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    return value


class JSONReportGenerator:
    """Writes byte-stable JSON documents."""

    def __init__(self, indent: int = 2) -> None:
        """
        Initialize the JSON report generator.

        Args:
            indent: Indentation used for every document
        """
        self.indent = indent

    def render(self, report: Any) -> str:
        """Render a document to text; identical inputs give identical bytes."""
        return (
            json.dumps(
                to_jsonable(report),
                indent=self.indent,
                sort_keys=True,
                ensure_ascii=False,
                allow_nan=False,
            )
            + "\n"
        )

    def save_report(self, report: Any, filename: str | Path) -> Path:
        """
        Render and save a document to file.

        Args:
            report: Dictionary (or object with to_dict) to save
            filename: Output filename

        Returns:
            The path written
        """
        output_path = Path(filename)
        try:
            text = self.render(report)
            output_path.parent.mkdir(parents=True, exist_ok=True)
            output_path.write_text(text, encoding="utf-8")
        except (OSError, TypeError, ValueError) as e:
            log_and_raise(
                SimplicialNetsError(
                    f"Failed to save JSON document: {e}",
                    error_code=ErrorCodes.IO_FAILED,
                    context={"filename": str(filename)},
                ),
                logger=logger,
            )
        logger.info(f"JSON document saved to {output_path}")
        return output_path


def load_json_document(filename: str | Path) -> dict[str, Any]:
    """Load a JSON object from file, raising FormatError on any problem."""
    path = Path(filename)
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except (FileNotFoundError, PermissionError) as e:
        log_and_raise(
            FormatError(
                f"Could not read {path}: {e}",
                error_code=ErrorCodes.IO_FAILED,
                context={"filename": str(path)},
            ),
            logger=logger,
        )
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        log_and_raise(
            FormatError(
                f"Invalid JSON in {path}: {e}", context={"filename": str(path)}
            ),
            logger=logger,
        )
    if not isinstance(data, dict):
        log_and_raise(
            FormatError(
                f"{path} must contain a JSON object",
                context={"filename": str(path), "type": type(data).__name__},
            ),
            logger=logger,
        )
    return data
