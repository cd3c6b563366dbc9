"""Reproducible experiment runs: data generation through U-statistics,
Hoeffding components and Wasserstein metrics to report rows.

Every replication draws from its own RNG stream keyed by (seed, replication,
role, n), so results do not depend on the number of worker threads.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb
from typing import Optional

import numpy as np

from . import diagnostics, kernels, processes, projections
from .config import ExperimentConfig
from .errors import ConfigError, KernelError, NumericError
from .rng import stream as make_stream
from .ustat_engine import component_ustat, u_statistic_exact, u_statistic_incomplete

logger = logging.getLogger(__name__)

CSV_FIELDS = (
    "config_hash", "seed", "n", "R", "d2_full", "d2_linear", "rms_remainder", "mean_square",
    "sigma_sq_used", "sigma_source", "applicable", "degeneracy_order", "wall_ms",
)
# Multiple of the standard error beyond which sigma^2 and the observed second moment disagree.
SIGMA_CHECK_SE_MULTIPLE = 4.0


@dataclass
class ExperimentRow:
    config_hash: str
    seed: int
    n: int
    R: int
    d2_full: float
    d2_linear: float
    rms_remainder: float
    mean_square: float
    sigma_sq_used: float
    sigma_source: str
    applicable: bool
    degeneracy_order: int
    wall_ms: int = 0
    # JSON-only columns
    estimator: str = "exact"
    mean_square_se: float = 0.0
    bound_slack: float = 0.0
    incomplete_mc_se: float = 0.0

    def csv_values(self) -> dict:
        return {name: getattr(self, name) for name in CSV_FIELDS}


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    config_hash: str
    rows: list = field(default_factory=list)
    applicability: Optional[processes.Applicability] = None
    degeneracy_order: int = 0
    projection_mode: str = "analytic"
    ui_profile: list = field(default_factory=list)
    sigma_check: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    # n -> (sqrt(n) U_h, m sqrt(n) U_n^(1)) across replications; not serialized.
    replicated: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def degenerate(self) -> bool:
        return self.degeneracy_order >= 1

    @property
    def applicable(self) -> bool:
        return self.applicability is None or self.applicability.applicable

    def row(self, n: int) -> ExperimentRow:
        for row in self.rows:
            if row.n == n:
                return row
        raise KeyError(n)


@dataclass
class RateReport:
    config: ExperimentConfig
    config_hash: str
    fit: diagnostics.RateFit


@dataclass
class DiagnosticsReport:
    config_hash: str
    moments: list
    ui_profile: list
    long_run_variance: Optional[diagnostics.LongRunVariance]
    sigma_sq_analytic: Optional[float]
    lindeberg: Optional[list] = None


# --- Setup ---

@dataclass
class _Setup:
    spec: processes.ProcessSpec
    kernel: kernels.Kernel
    mode: str
    reference: projections.ReferenceMeasure
    h1: kernels.Kernel


def _setup(config: ExperimentConfig) -> _Setup:
    if config.projection_mode == "plug_in":
        raise ConfigError("Convergence runs project against the true law; use auto, analytic or true_xi.")
    spec = config.process_spec()
    try:
        kernel = kernels.get_kernel(config.kernel, reference=spec, moment_order=config.moment_order)
    except KernelError as e:
        raise ConfigError(str(e)) from e
    if config.n_grid[0] < kernel.degree:
        raise ConfigError(f"n_grid starts at {config.n_grid[0]}, below the kernel degree {kernel.degree}.")
    kernel = kernels.center(kernel, spec, config.mc_size, make_stream(config.seed, 0, "centering"))

    mode = config.projection_mode
    has_h1 = kernel.analytic is not None and kernel.analytic.h1_closed_form is not None
    if mode == "auto":
        mode = "analytic" if has_h1 else "true_xi"
    reference = projections.true_xi_reference(spec, config.oracle_size, config.seed, mode=mode)
    h1 = projections.canonical_kernel(kernel, 1, reference)
    return _Setup(spec, kernel, mode, reference, h1)


def _sigma_sq(config: ExperimentConfig, setup: _Setup):
    """Returns (sigma^2, source) for the limit law N(0, sigma^2)."""
    if config.sigma_source == "analytic":
        value = processes.long_run_variance_analytic(setup.spec, setup.kernel)
        if value is not None:
            return float(value), "analytic"
        logger.info("No closed-form sigma for %s on %s; estimating it", setup.kernel.name, setup.spec.name)
    estimate = estimate_sigma_sq(setup, max(config.n_grid[-1], diagnostics.MIN_LRV_LENGTH), config.seed)
    return estimate.sigma_tilde_sq_over_m2 * setup.kernel.degree ** 2, "estimated"


def estimate_sigma_sq(setup: _Setup, length: int, seed: int) -> diagnostics.LongRunVariance:
    """Long-run variance of h1 along one path of the process (before the m^2 factor)."""
    path = processes.sample_path(setup.spec, length, make_stream(seed, 0, "sigma"))
    lrv = diagnostics.long_run_variance_estimate(setup.h1(path))
    if lrv.sigma_tilde_sq_over_m2 < 0:
        return diagnostics.LongRunVariance(0.0, lrv.se, lrv.max_lag)
    return lrv


# --- Replications ---

def _replicate(config: ExperimentConfig, setup: _Setup, n: int, rep: int):
    m = setup.kernel.degree
    path = processes.sample_path(setup.spec, n, make_stream(config.seed, rep, "path", n))
    if comb(n, m) <= config.cap:
        u = u_statistic_exact(setup.kernel, path, cap=config.cap, chunk_size=config.chunk_size)
        estimator, mc_se = "exact", 0.0
    else:
        result = u_statistic_incomplete(setup.kernel, path, config.num_subsets,
                                        make_stream(config.seed, rep, "subsets", n))
        u, estimator, mc_se = result.estimate, "incomplete", result.mc_se

    # the linear part is an average of n values, so it is always enumerated
    u1 = component_ustat(1, setup.h1, path, cap=max(config.cap, n), chunk_size=config.chunk_size)
    root_n = math.sqrt(n)
    return root_n * u, m * root_n * u1, estimator, mc_se


def _run_replications(config: ExperimentConfig, setup: _Setup, n: int) -> list:
    def task(rep):
        return _replicate(config, setup, n, rep)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(task, range(config.reps)))
    return [task(rep) for rep in range(config.reps)]


def _distances(full: np.ndarray, linear: np.ndarray, sigma_sq: float) -> diagnostics.BoundCheck:
    if sigma_sq > 0:
        return diagnostics.bound_chain(full, linear, math.sqrt(sigma_sq))
    # d2 to the point mass at 0 is the root mean square.
    return diagnostics.BoundCheck(
        d2_full=math.sqrt(float(np.mean(full ** 2))),
        rms_remainder=math.sqrt(float(np.mean((full - linear) ** 2))),
        d2_linear=math.sqrt(float(np.mean(linear ** 2))),
    )


def _check_finite(row: ExperimentRow):
    for name in ("d2_full", "d2_linear", "rms_remainder", "mean_square", "sigma_sq_used"):
        if not math.isfinite(getattr(row, name)):
            raise NumericError(f"Non-finite {name} at n = {row.n}.")


# --- Experiments ---

def run_convergence_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Runs R replications of sqrt(n) U_h and its linear part for every n and derives the d2 metrics."""
    return _run_convergence(config, _setup(config))


def _run_convergence(config: ExperimentConfig, setup: _Setup) -> ExperimentResult:
    config_hash = config.hash
    result = ExperimentResult(config=config, config_hash=config_hash, projection_mode=setup.mode)

    result.applicability = processes.theorem_applicability(setup.spec, setup.kernel)
    if not result.applicability.applicable:
        message = f"inapplicable: {result.applicability.binding}"
        logger.warning(message)
        result.warnings.append(message)

    result.degeneracy_order = projections.degeneracy_order(
        setup.kernel, setup.reference, config.probe_size, make_stream(config.seed, 0, "probe"))
    if result.degenerate:
        message = f"degenerate: {setup.kernel.name} has degeneracy order {result.degeneracy_order}"
        logger.warning(message)
        result.warnings.append(message)

    sigma_sq, sigma_source = _sigma_sq(config, setup)
    logger.info("Testing %s on %s against N(0, %.6g) (%s sigma)",
                setup.kernel.name, setup.spec.name, sigma_sq, sigma_source)

    for n in config.n_grid:
        started = time.perf_counter()
        outputs = _run_replications(config, setup, n)
        full = np.array([o[0] for o in outputs])
        linear = np.array([o[1] for o in outputs])
        estimators = {o[2] for o in outputs}
        result.replicated[n] = (full, linear)

        bound = _distances(full, linear, sigma_sq)
        moment = diagnostics.second_moment_trajectory({n: full})[0]
        wall_ms = int(round((time.perf_counter() - started) * 1000)) if config.timing else 0
        row = ExperimentRow(
            config_hash=config_hash,
            seed=config.seed,
            n=n,
            R=config.reps,
            d2_full=bound.d2_full,
            d2_linear=bound.d2_linear,
            rms_remainder=bound.rms_remainder,
            mean_square=moment.mean_square,
            sigma_sq_used=sigma_sq,
            sigma_source=sigma_source,
            applicable=result.applicable,
            degeneracy_order=result.degeneracy_order,
            wall_ms=wall_ms,
            estimator="incomplete" if "incomplete" in estimators else "exact",
            mean_square_se=moment.se,
            bound_slack=bound.slack,
            incomplete_mc_se=float(np.mean([o[3] for o in outputs])),
        )
        _check_finite(row)
        result.rows.append(row)
        logger.info("n=%d: d2_full %.4g, d2_linear %.4g, mean square %.4g (%s)",
                    n, row.d2_full, row.d2_linear, row.mean_square, row.estimator)

    fulls = {n: pair[0] for n, pair in result.replicated.items()}
    result.ui_profile = diagnostics.uniform_integrability_profile(fulls, config.ui_thresholds)
    result.sigma_check = _sigma_check(result, sigma_sq)
    return result


def _sigma_check(result: ExperimentResult, sigma_sq: float) -> dict:
    """Compares sigma^2 with the observed second moment at the largest n; flags, never corrects."""
    last = result.rows[-1]
    gap = last.mean_square - sigma_sq
    consistent = abs(gap) <= SIGMA_CHECK_SE_MULTIPLE * last.mean_square_se
    if not consistent and not result.degenerate:
        message = (f"sigma discrepancy: mean square {last.mean_square:.4g} at n={last.n} "
                   f"vs sigma^2 {sigma_sq:.4g}")
        logger.warning(message)
        result.warnings.append(message)
    return {"n": last.n, "sigma_sq": sigma_sq, "mean_square": last.mean_square,
            "se": last.mean_square_se, "consistent": bool(consistent)}


def remainder_slope(result: ExperimentResult):
    """Log-log slope of the RMS of sqrt(n) U_h - m sqrt(n) U_n^(1) against n."""
    n_grid = [row.n for row in result.rows]
    return diagnostics.fit_log_slope(n_grid, [row.rms_remainder for row in result.rows])


def run_rate_experiment(config: ExperimentConfig) -> RateReport:
    """Fits the decay rate of each requested Hoeffding component norm."""
    if not config.orders:
        raise ConfigError("nothing to fit: no component orders requested.")
    if config.projection_mode == "plug_in":
        raise ConfigError("Rate experiments project against the true law; use analytic or true_xi.")
    spec = config.process_spec()
    try:
        kernel = kernels.get_kernel(config.kernel, reference=spec, moment_order=config.moment_order)
        kernel = kernels.center(kernel, spec, config.mc_size, make_stream(config.seed, 0, "centering"))
        if config.projection_mode == "auto":
            reference = diagnostics.default_reference(kernel, spec, config.oracle_size, config.seed)
        else:
            reference = projections.true_xi_reference(spec, config.oracle_size, config.seed,
                                                      mode=config.projection_mode)
        fit = diagnostics.rate_regression(kernel, spec, config.orders, config.n_grid, config.reps,
                                          seed=config.seed, reference=reference, cap=config.cap,
                                          workers=config.workers)
    except ConfigError:
        raise
    except (KernelError, ValueError) as e:
        raise ConfigError(str(e)) from e
    return RateReport(config=config, config_hash=config.hash, fit=fit)


def run_diagnostics(config: ExperimentConfig) -> DiagnosticsReport:
    """Second moments, uniform integrability, long-run variance and (i.i.d. only) Lindeberg ratios."""
    setup = _setup(config)
    result = _run_convergence(config, setup)
    fulls = {n: pair[0] for n, pair in result.replicated.items()}
    analytic = processes.long_run_variance_analytic(setup.spec, setup.kernel)
    lrv = estimate_sigma_sq(setup, max(config.n_grid[-1], diagnostics.MIN_LRV_LENGTH), config.seed)

    lindeberg = None
    if setup.spec.is_iid:
        draws = processes.marginal_sample(setup.spec, config.mc_size, make_stream(config.seed, 0, "probe", 1))
        var_h1 = setup.kernel.analytic.var_h1 if setup.kernel.analytic is not None else None
        lindeberg = diagnostics.lindeberg_ratio(setup.h1(draws), config.n_grid, config.lindeberg_epsilon,
                                                spec=setup.spec, var_h1=var_h1)
    else:
        logger.info("Skipping Lindeberg ratios: %s is not i.i.d.", setup.spec.name)

    return DiagnosticsReport(
        config_hash=result.config_hash,
        moments=diagnostics.second_moment_trajectory(fulls),
        ui_profile=result.ui_profile,
        long_run_variance=lrv,
        sigma_sq_analytic=analytic,
        lindeberg=lindeberg,
    )
