import json
import logging
import math

import numpy as np

from .config import ExperimentConfig
from .diagnostics import TailPoint
from .errors import ConfigError
from .harness import ExperimentResult, ExperimentRow
from .processes import Applicability

logger = logging.getLogger(__name__)


def load_result(filepath) -> ExperimentResult:
    """
    Reads a JSON report written by emit_report back into an ExperimentResult.
    Replication-level statistics are not stored, so `replicated` comes back empty.
    """
    try:
        with open(filepath, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot read report {filepath}: {e}") from e

    try:
        applicability = data.get("applicability")
        return ExperimentResult(
            config=ExperimentConfig(**data["config"]),
            config_hash=data["config_hash"],
            rows=[ExperimentRow(**row) for row in data["rows"]],
            applicability=Applicability(**applicability) if applicability else None,
            degeneracy_order=data["degeneracy_order"],
            projection_mode=data["projection_mode"],
            ui_profile=[TailPoint(**point) for point in data["ui_profile"]],
            sigma_check=data["sigma_check"],
            warnings=data["warnings"],
        )
    except (KeyError, TypeError) as e:
        raise ConfigError(f"Report {filepath} is missing or has malformed fields: {e}") from e


def read_sample_file(filepath) -> np.ndarray:
    """Parses a sample file: one ASCII decimal per line, blank lines ignored."""
    values = []
    try:
        with open(filepath, "r", encoding="ascii") as f:
            for number, line in enumerate(f, start=1):
                text = line.strip()
                if not text:
                    continue
                try:
                    value = float(text)
                except ValueError:
                    raise ConfigError(f"{filepath}, line {number}: '{text}' is not a number.") from None
                if not math.isfinite(value):
                    raise ConfigError(f"{filepath}, line {number}: value must be finite.")
                values.append(value)
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"Cannot read sample file {filepath}: {e}") from e
    if not values:
        raise ConfigError(f"Sample file {filepath} contains no values.")
    logger.debug("Read %d values from %s", len(values), filepath)
    return np.asarray(values)
