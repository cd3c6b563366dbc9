"""Command-line entry point: `python main.py <command> [options]`."""

import argparse
import json
import logging
import sys

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from . import data_exporter, database, harness, kernels, processes, wasserstein
from .config import FORMATS, PROJECTION_MODES, SIGMA_SOURCES, load_config
from .data_importer import read_sample_file
from .data_simulator import run_simulator
from .errors import ConfigError, UStatLabError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

# CLI flag destination -> config field
_OVERRIDES = {
    "kernel": "kernel",
    "process": "process",
    "process_params": "process_params",
    "moment_order": "moment_order",
    "beta_rate": "beta_rate_override",
    "n_grid": "n_grid",
    "reps": "reps",
    "seed": "seed",
    "projection": "projection_mode",
    "cap": "cap",
    "subsets": "num_subsets",
    "sigma": "sigma_source",
    "orders": "orders",
    "workers": "workers",
    "timing": "timing",
    "format": "format",
    "out": "out_dir",
    "db": "db_path",
}


def _json_arg(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise argparse.ArgumentTypeError(f"not valid JSON: {e}")


def _add_experiment_options(parser):
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--kernel", help="catalog kernel name (see `catalog`)")
    parser.add_argument("--process", help="process family (see `catalog`)")
    parser.add_argument("--process-params", type=_json_arg, help='JSON object, e.g. \'{"phi": 0.5}\'')
    parser.add_argument("--moment-order", type=float, help="override the kernel's moment order p")
    parser.add_argument("--beta-rate", type=float, help="declare polynomial mixing beta(n) = O(n^-r)")
    parser.add_argument("--n-grid", help="comma-separated sample sizes, e.g. 50,200,800")
    parser.add_argument("--reps", type=int, help="replications per sample size")
    parser.add_argument("--seed", type=int, help="base seed")
    parser.add_argument("--projection", choices=PROJECTION_MODES, help="projection mode")
    parser.add_argument("--cap", type=int, help="exact enumeration cap (tuples)")
    parser.add_argument("--subsets", type=int, help="incomplete U-statistic subset count")
    parser.add_argument("--sigma", choices=SIGMA_SOURCES, help="source of the limit variance")
    parser.add_argument("--workers", type=int, help="worker threads")
    parser.add_argument("--timing", action="store_true", default=None, help="record wall_ms")
    parser.add_argument("--format", choices=FORMATS, help="report format")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--db", help="SQLite ledger to record rows in")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ustatlab", description="U-statistic CLT and Wasserstein-2 laboratory.")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    converge = commands.add_parser("converge", help="run a convergence experiment")
    _add_experiment_options(converge)

    rates = commands.add_parser("rates", help="fit Hoeffding component decay rates")
    _add_experiment_options(rates)
    rates.add_argument("--orders", help="comma-separated component orders, e.g. 1,2")

    diagnose = commands.add_parser("diagnose", help="uniform integrability and Lindeberg profiles")
    _add_experiment_options(diagnose)

    w2 = commands.add_parser("w2", help="d2 between two sample files, or one file and N(0, sigma^2)")
    w2.add_argument("sample_a")
    w2.add_argument("sample_b", nargs="?")
    w2.add_argument("--gaussian", type=float, metavar="SIGMA", help="compare sample_a with N(0, SIGMA^2)")

    catalog = commands.add_parser("catalog", help="list kernels and process families")
    catalog.add_argument("--process", help="show analytic constants under this process family")

    simulate = commands.add_parser("simulate", help="write process paths as sample files")
    simulate.add_argument("--process", default="iid_normal")
    simulate.add_argument("--process-params", type=_json_arg, default=None)
    simulate.add_argument("--n", type=int, default=1000)
    simulate.add_argument("--count", type=int, default=1)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--out", default="samples")

    history = commands.add_parser("history", help="list rows stored in the ledger")
    history.add_argument("--db", default=database.DB_FILE)
    history.add_argument("--config-hash")
    history.add_argument("--kernel")
    return parser


def configure_logging(verbose: bool = False):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _config_from_args(args):
    overrides = {field: getattr(args, dest, None) for dest, field in _OVERRIDES.items()}
    return load_config(args.config, **overrides)


# --- Commands ---

def cmd_converge(args, console: Console):
    config = _config_from_args(args)
    result = harness.run_convergence_experiment(config)
    path = data_exporter.emit_report(result, config.format, config.out_dir)
    if config.db_path:
        database.record_result(result, config.db_path)

    table = Table(title=f"{config.kernel} on {config.process} ({result.config_hash})")
    for column in ("n", "d2_full", "d2_linear", "rms_remainder", "mean_square", "estimator"):
        table.add_column(column, justify="right")
    for row in result.rows:
        table.add_row(str(row.n), f"{row.d2_full:.4f}", f"{row.d2_linear:.4f}",
                      f"{row.rms_remainder:.4f}", f"{row.mean_square:.4f}", row.estimator)
    console.print(table)
    console.print(f"sigma^2 = {result.rows[0].sigma_sq_used:.6g} ({result.rows[0].sigma_source})")
    for warning in result.warnings:
        console.print(warning, style="yellow")
    console.print(f"Report written to {path}", style="green")


def cmd_rates(args, console: Console):
    config = _config_from_args(args)
    report = harness.run_rate_experiment(config)
    path = data_exporter.emit_rate_report(report, config.out_dir)

    table = Table(title=f"Component rates for {config.kernel} on {config.process}")
    table.add_column("order", justify="right")
    table.add_column("expected", justify="right")
    table.add_column("slope", justify="right")
    table.add_column("slope SE", justify="right")
    for order in report.fit.orders:
        slope, se = report.fit.slopes[order], report.fit.slope_se[order]
        table.add_row(str(order), f"{-order / 2:.1f}",
                      "undefined" if slope is None else f"{slope:.3f}",
                      "" if se is None else f"{se:.3f}")
    console.print(table)
    console.print(f"Slope table written to {path}", style="green")


def cmd_diagnose(args, console: Console):
    config = _config_from_args(args)
    report = harness.run_diagnostics(config)
    path = data_exporter.emit_diagnostics(report, config.out_dir)

    moments = Table(title="Second moments of sqrt(n) U_h")
    moments.add_column("n", justify="right")
    moments.add_column("mean square", justify="right")
    moments.add_column("SE", justify="right")
    for point in report.moments:
        moments.add_row(str(point.n), f"{point.mean_square:.4f}", f"{point.se:.4f}")
    console.print(moments)

    profile = Table(title="Uniform integrability profile")
    profile.add_column("K", justify="right")
    profile.add_column("sup_n E[Y^2 1{|Y|>K}]", justify="right")
    profile.add_column("attained at n", justify="right")
    for point in report.ui_profile:
        profile.add_row(f"{point.threshold:g}", f"{point.tail_moment:.5f}", str(point.n_at_max))
    console.print(profile)

    if report.lindeberg is not None:
        lindeberg = Table(title=f"Lindeberg ratios (eps = {config.lindeberg_epsilon:g})")
        lindeberg.add_column("n", justify="right")
        lindeberg.add_column("L_n", justify="right")
        for n, ratio in report.lindeberg:
            lindeberg.add_row(str(n), f"{ratio:.5g}")
        console.print(lindeberg)
    if report.long_run_variance is not None:
        lrv = report.long_run_variance
        console.print(f"Long-run variance of h1: {lrv.sigma_tilde_sq_over_m2:.6g} (SE {lrv.se:.2g}, lag {lrv.max_lag})")
    console.print(f"Diagnostics written to {path}", style="green")


def cmd_w2(args, console: Console):
    a = read_sample_file(args.sample_a)
    if args.sample_b is not None:
        distance = wasserstein.w2_empirical_empirical(a, read_sample_file(args.sample_b))
        label = f"d2({args.sample_a}, {args.sample_b})"
    elif args.gaussian is not None:
        distance = wasserstein.w2_empirical_gaussian(a, args.gaussian)
        label = f"d2({args.sample_a}, N(0, {args.gaussian:g}^2))"
    else:
        raise ConfigError("w2 needs a second sample file or --gaussian SIGMA.")
    console.print(f"{label} = {distance!r}", soft_wrap=True)


def cmd_catalog(args, console: Console):
    try:
        reference = processes.make_process(args.process) if args.process else None
    except UStatLabError as e:
        raise ConfigError(str(e)) from e
    table = Table(title="Kernels" + (f" under {reference.name}" if reference else ""))
    table.add_column("name")
    table.add_column("degree", justify="right")
    table.add_column("kernel")
    if reference:
        table.add_column("theta", justify="right")
        table.add_column("Var h1", justify="right")
    catalog = kernels.builtin_catalog(reference)
    for name, (degree, _, _, description) in kernels.CATALOG.items():
        cells = [name, str(degree), description]
        if reference:
            analytic = catalog[name].analytic
            cells.append("-" if analytic is None else f"{analytic.theta_raw:.6g}")
            cells.append("-" if analytic is None or analytic.var_h1 is None else f"{analytic.var_h1:.6g}")
        table.add_row(*cells)
    console.print(table)

    families = Table(title="Process families")
    families.add_column("family")
    families.add_column("defaults")
    families.add_column("mixing")
    for family in processes.FAMILIES:
        spec = processes.make_process(family)
        families.add_row(family, json.dumps(processes.DEFAULT_PARAMS[family]), spec.beta_rate.describe())
    console.print(families)


def cmd_simulate(args, console: Console):
    try:
        spec = processes.make_process(args.process, **(args.process_params or {}))
    except UStatLabError as e:
        raise ConfigError(str(e)) from e
    paths = run_simulator(spec, args.n, args.count, args.out, args.seed)
    console.print(f"Wrote {len(paths)} sample file(s) to {args.out}", style="green")


def cmd_history(args, console: Console):
    rows = database.fetch_rows(args.db, config_hash=args.config_hash, kernel=args.kernel)
    if not rows:
        console.print("No recorded runs.", style="yellow")
        return
    table = Table(title=f"Recorded runs in {args.db}")
    for column in ("config_hash", "kernel", "process", "n", "R", "d2_full", "mean_square", "applicable"):
        table.add_column(column)
    for row in rows:
        table.add_row(row["config_hash"], row["kernel"], row["process"], str(row["n"]), str(row["R"]),
                      f"{row['d2_full']:.4f}", f"{row['mean_square']:.4f}", str(row["applicable"]).lower())
    console.print(table)


COMMANDS = {
    "converge": cmd_converge,
    "rates": cmd_rates,
    "diagnose": cmd_diagnose,
    "w2": cmd_w2,
    "catalog": cmd_catalog,
    "simulate": cmd_simulate,
    "history": cmd_history,
}


def main(argv=None) -> int:
    """Runs one command and returns the process exit code."""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    console = Console()
    try:
        COMMANDS[args.command](args, console)
    except ConfigError as e:
        console.print(f"Configuration error: {e}", style="bold red")
        return EXIT_CONFIG
    except (UStatLabError, ArithmeticError) as e:
        console.print(f"Numeric failure: {e}", style="bold red")
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
