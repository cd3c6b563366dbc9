import logging
from pathlib import Path

from . import processes
from .errors import ConfigError
from .rng import stream as make_stream

logger = logging.getLogger(__name__)


def write_sample_file(values, filepath) -> Path:
    """Writes one value per line in the format read_sample_file accepts."""
    filepath = Path(filepath)
    try:
        filepath.parent.mkdir(parents=True, exist_ok=True)
        with open(filepath, "w", encoding="ascii", newline="\n") as f:
            for value in values:
                f.write(f"{float(value)!r}\n")
    except OSError as e:
        raise ConfigError(f"unwritable path {filepath}: {e}") from e
    return filepath


def run_simulator(spec: processes.ProcessSpec, n: int = 1000, count: int = 1, out_dir="samples", seed: int = 0) -> list:
    """Draws `count` independent length-n paths of spec and writes each to its own sample file."""
    if n < 1 or count < 1:
        raise ConfigError("Path length and path count must be positive.")
    logger.info("Simulating %d path(s) of length %d from %s", count, n, spec.name)

    paths = []
    for rep in range(count):
        values = processes.sample_path(spec, n, make_stream(seed, rep, "path", n))
        filepath = Path(out_dir) / f"{spec.family}_n{n}_seed{seed}_{rep}.txt"
        paths.append(write_sample_file(values, filepath))
        logger.debug("Wrote path %d/%d to %s", rep + 1, count, filepath)
    return paths
