"""Experiment configuration: a `key = value` file plus command-line overrides.

Values are parsed as JSON, so `n_grid = [50, 200, 800]`, `reps = 2000` and
`process_params = {"phi": 0.5}` all work; bare words such as
`kernel = variance` fall back to plain strings.
"""

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Optional

from . import processes
from .errors import ConfigError, ProcessSpecError
from .kernels import MIN_MC_SIZE
from .projections import MIN_ORACLE_SIZE, MIN_PROBE_SIZE
from .utils import is_ascending_grid, parse_number_list

logger = logging.getLogger(__name__)

PROJECTION_MODES = ("auto", "analytic", "true_xi", "plug_in")
SIGMA_SOURCES = ("analytic", "estimated")
FORMATS = ("csv", "json")
MIN_REPLICATIONS = 100

# Fields that never change a number in the report.
_UNHASHED = ("workers", "out_dir", "format", "db_path")


@dataclass(frozen=True)
class ExperimentConfig:
    kernel: str = "mean"
    moment_order: Optional[float] = None
    process: str = "iid_normal"
    process_params: dict = field(default_factory=dict)
    beta_rate_override: Optional[float] = None
    n_grid: tuple = (50, 200, 800)
    reps: int = 2000
    seed: int = 20240101
    projection_mode: str = "auto"
    cap: int = 2 * 10 ** 7
    num_subsets: int = 10 ** 5
    sigma_source: str = "analytic"
    orders: tuple = (1,)
    oracle_size: int = 10 ** 5
    probe_size: int = 2000
    mc_size: int = 10 ** 5
    ui_thresholds: tuple = (0.0, 1.0, 2.0, 3.0, 4.0)
    lindeberg_epsilon: float = 0.1
    chunk_size: int = 2 ** 18
    workers: int = 1
    timing: bool = False
    out_dir: str = "results"
    format: str = "csv"
    db_path: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(self.n_grid))
        object.__setattr__(self, "orders", tuple(self.orders))
        object.__setattr__(self, "ui_thresholds", tuple(float(k) for k in self.ui_thresholds))
        object.__setattr__(self, "process_params", dict(self.process_params))
        validate(self)

    def process_spec(self) -> processes.ProcessSpec:
        """Builds the ProcessSpec named by this configuration."""
        override = None
        if self.beta_rate_override is not None:
            override = processes.BetaRate("polynomial", float(self.beta_rate_override))
        try:
            return processes.make_process(self.process, beta_override=override, **self.process_params)
        except ProcessSpecError as e:
            raise ConfigError(str(e)) from e

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        for key in ("n_grid", "orders", "ui_thresholds"):
            data[key] = list(data[key])
        return data

    @property
    def hash(self) -> str:
        return config_hash(self)


def validate(config: ExperimentConfig):
    """Raises ConfigError for any inconsistent setting."""
    if not is_ascending_grid(list(config.n_grid)):
        raise ConfigError(f"n_grid must be strictly ascending positive integers, got {list(config.n_grid)}.")
    if config.reps < MIN_REPLICATIONS:
        raise ConfigError(f"reps must be at least {MIN_REPLICATIONS}, got {config.reps}.")
    if config.seed < 0:
        raise ConfigError("seed must be non-negative.")
    if config.projection_mode not in PROJECTION_MODES:
        raise ConfigError(f"projection_mode must be one of {', '.join(PROJECTION_MODES)}.")
    if config.sigma_source not in SIGMA_SOURCES:
        raise ConfigError(f"sigma must be one of {', '.join(SIGMA_SOURCES)}.")
    if config.format not in FORMATS:
        raise ConfigError(f"format must be one of {', '.join(FORMATS)}.")
    if config.process not in processes.FAMILIES:
        raise ConfigError(f"Unknown process '{config.process}'. Expected one of {', '.join(processes.FAMILIES)}.")
    if config.cap < 1 or config.chunk_size < 1 or config.workers < 1:
        raise ConfigError("cap, chunk_size and workers must be positive.")
    if config.num_subsets < 100:
        raise ConfigError("num_subsets must be at least 100.")
    if any(b <= a for a, b in zip(config.ui_thresholds, config.ui_thresholds[1:])):
        raise ConfigError("ui_thresholds must be strictly ascending.")
    if config.beta_rate_override is not None and config.beta_rate_override <= 0:
        raise ConfigError("beta_rate_override must be a positive exponent.")
    if config.oracle_size < MIN_ORACLE_SIZE:
        raise ConfigError(f"oracle_size must be at least {MIN_ORACLE_SIZE}, got {config.oracle_size}.")
    if config.mc_size < MIN_MC_SIZE:
        raise ConfigError(f"mc_size must be at least {MIN_MC_SIZE}, got {config.mc_size}.")
    if config.probe_size < MIN_PROBE_SIZE:
        raise ConfigError(f"probe_size must be at least {MIN_PROBE_SIZE}, got {config.probe_size}.")
    if not config.lindeberg_epsilon > 0:
        raise ConfigError(f"lindeberg_epsilon must be positive, got {config.lindeberg_epsilon}.")


def config_hash(config: ExperimentConfig) -> str:
    """First 12 hex digits of the SHA-256 of every number-affecting setting."""
    data = {k: v for k, v in config.to_dict().items() if k not in _UNHASHED}
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


# --- Parsing ---

def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_config_text(text: str) -> dict:
    """Parses `key = value` lines; blank lines and `#` comments are skipped."""
    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"Line {number}: expected 'key = value', got '{line}'.")
        key, raw = (part.strip() for part in line.split("=", 1))
        values[key] = _parse_value(raw)
    return values


def load_config_file(path) -> dict:
    """Reads a config file into a dict of raw values."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            return parse_config_text(f.read())
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e


def build_config(values: Optional[dict] = None, **overrides) -> ExperimentConfig:
    """Merges file values with overrides (None overrides are ignored) into a validated config."""
    merged = dict(values or {})
    merged.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(merged) - known)
    if unknown:
        raise ConfigError(f"Unknown config keys: {', '.join(unknown)}.")
    try:
        for key in ("n_grid", "orders"):
            if key in merged:
                merged[key] = parse_number_list(merged[key], int)
        if "ui_thresholds" in merged:
            merged["ui_thresholds"] = parse_number_list(merged["ui_thresholds"], float)
        return ExperimentConfig(**merged)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"Invalid configuration: {e}") from e


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Loads an optional config file and applies overrides."""
    values = load_config_file(path) if path else {}
    return build_config(values, **overrides)
