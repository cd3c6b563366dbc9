import csv
import dataclasses
import json
import logging
import math
from pathlib import Path

from .errors import ConfigError
from .harness import CSV_FIELDS, DiagnosticsReport, ExperimentResult, RateReport

logger = logging.getLogger(__name__)

RATE_FIELDS = ("config_hash", "order", "slope", "slope_se", "status")


def _format(value):
    """Stable text for a CSV cell: repr for floats, lowercase booleans."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return value


def _open_for_writing(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"unwritable path {path}: {e}") from e


def result_to_dict(result: ExperimentResult) -> dict:
    """Serializable form of an ExperimentResult: the CSV rows plus the config echo."""
    return {
        "config_hash": result.config_hash,
        "config": result.config.to_dict(),
        "applicability": dataclasses.asdict(result.applicability) if result.applicability else None,
        "degeneracy_order": result.degeneracy_order,
        "projection_mode": result.projection_mode,
        "rows": [dataclasses.asdict(row) for row in result.rows],
        "ui_profile": [dataclasses.asdict(point) for point in result.ui_profile],
        "sigma_check": result.sigma_check,
        "warnings": list(result.warnings),
    }


def export_result_to_csv(result: ExperimentResult, path) -> Path:
    """Writes one row per n with the fixed report header."""
    path = Path(path)
    try:
        with _open_for_writing(path) as csvfile:
            writer = csv.DictWriter(csvfile, fieldnames=CSV_FIELDS, lineterminator="\n")
            writer.writeheader()
            for row in result.rows:
                writer.writerow({k: _format(v) for k, v in row.csv_values().items()})
    except OSError as e:
        raise ConfigError(f"unwritable path {path}: {e}") from e
    logger.info("Wrote %d rows to %s", len(result.rows), path)
    return path


def export_result_to_json(result: ExperimentResult, path) -> Path:
    """Writes the rows, estimator types and config echo as sorted-key JSON."""
    path = Path(path)
    try:
        with _open_for_writing(path) as f:
            json.dump(result_to_dict(result), f, indent=4, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise ConfigError(f"unwritable path {path}: {e}") from e
    logger.info("Wrote report to %s", path)
    return path


def emit_report(result: ExperimentResult, fmt: str = "csv", out_dir=None) -> Path:
    """Writes `<config_hash>.<fmt>` into out_dir (default: the config's out_dir)."""
    if fmt not in ("csv", "json"):
        raise ConfigError(f"Unknown report format '{fmt}'. Expected csv or json.")
    out_dir = Path(out_dir if out_dir is not None else result.config.out_dir)
    path = out_dir / f"{result.config_hash}.{fmt}"
    if fmt == "csv":
        return export_result_to_csv(result, path)
    return export_result_to_json(result, path)


def emit_rate_report(report: RateReport, out_dir=None) -> Path:
    """Writes the slope table of a rate experiment as `<config_hash>_rates.csv`."""
    out_dir = Path(out_dir if out_dir is not None else report.config.out_dir)
    path = out_dir / f"{report.config_hash}_rates.csv"
    fit = report.fit
    try:
        with _open_for_writing(path) as csvfile:
            fieldnames = RATE_FIELDS + tuple(f"rms_n{n}" for n in fit.n_grid)
            writer = csv.DictWriter(csvfile, fieldnames=fieldnames, lineterminator="\n")
            writer.writeheader()
            for order in fit.orders:
                row = {
                    "config_hash": report.config_hash,
                    "order": order,
                    "slope": _format(fit.slopes[order]) if fit.slopes[order] is not None else "",
                    "slope_se": _format(fit.slope_se[order]) if fit.slope_se[order] is not None else "",
                    "status": fit.status(order),
                }
                row.update({f"rms_n{n}": _format(v) for n, v in zip(fit.n_grid, fit.rms[order])})
                writer.writerow(row)
    except OSError as e:
        raise ConfigError(f"unwritable path {path}: {e}") from e
    logger.info("Wrote slope table to %s", path)
    return path


def diagnostics_to_dict(report: DiagnosticsReport) -> dict:
    lrv = report.long_run_variance
    return {
        "config_hash": report.config_hash,
        "moments": [dataclasses.asdict(p) for p in report.moments],
        "ui_profile": [dataclasses.asdict(p) for p in report.ui_profile],
        "long_run_variance": dataclasses.asdict(lrv) if lrv is not None else None,
        "sigma_sq_analytic": report.sigma_sq_analytic,
        "lindeberg": [{"n": n, "ratio": r} for n, r in report.lindeberg] if report.lindeberg is not None else None,
    }


def emit_diagnostics(report: DiagnosticsReport, out_dir) -> Path:
    """Writes `<config_hash>_diagnostics.json`."""
    path = Path(out_dir) / f"{report.config_hash}_diagnostics.json"
    data = diagnostics_to_dict(report)
    if data["long_run_variance"] and not math.isfinite(data["long_run_variance"]["se"]):
        data["long_run_variance"]["se"] = None
    try:
        with _open_for_writing(path) as f:
            json.dump(data, f, indent=4, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise ConfigError(f"unwritable path {path}: {e}") from e
    return path
