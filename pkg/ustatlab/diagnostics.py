"""Statistical diagnostics for the convergence of sqrt(n) * U_h.

Covers long-run variance estimation, log-log rate regression of the
Hoeffding component norms, second-moment trajectories, uniform
square-integrability profiles, Lindeberg ratios and the d2 triangle bound
that links the full statistic to its linear part.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import linregress

from . import processes, projections
from .errors import ProcessSpecError, SampleSizeError
from .rng import stream as make_stream
from .ustat_engine import DEFAULT_CAP, component_ustat
from .wasserstein import EmpiricalDistribution, w2_empirical_gaussian

logger = logging.getLogger(__name__)

MIN_LRV_LENGTH = 200
MIN_REPLICATIONS = 100


def integer_root(n: int, k: int) -> int:
    """floor(n^(1/k)) computed without floating-point edge errors."""
    r = int(round(n ** (1.0 / k)))
    while r ** k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


def batch_means_se(values, num_batches: Optional[int] = None) -> float:
    """Batch-means standard error of the mean of a (possibly dependent) series."""
    values = np.asarray(values, dtype=float)
    n = values.size
    a = num_batches or integer_root(n, 2)
    if a < 2:
        return float("nan")
    b = n // a
    means = values[: a * b].reshape(a, b).mean(axis=1)
    sigma_sq = b * np.sum((means - means.mean()) ** 2) / (a - 1)
    return math.sqrt(sigma_sq / (a * b))


# --- Long-run variance ---

@dataclass(frozen=True)
class LongRunVariance:
    sigma_tilde_sq_over_m2: float
    se: float
    max_lag: int


def long_run_variance_estimate(h1_values, max_lag: Optional[int] = None) -> LongRunVariance:
    """
    Bartlett-weighted long-run variance gamma_0 + 2 sum_{k<=L} (1 - k/(L+1)) gamma_k.

    L defaults to floor(n^(1/3)). The estimate is the mean of the series
    z_t = y_t^2 + 2 sum_k w_k y_t y_{t+k} (y centred), and its standard error
    is the batch-means standard error of z with floor(sqrt(n)) batches.
    Callers multiply by m^2.
    """
    values = np.asarray(h1_values, dtype=float).ravel()
    n = values.size
    if n < MIN_LRV_LENGTH:
        raise SampleSizeError(f"Long-run variance needs at least {MIN_LRV_LENGTH} values, got {n}.")
    lag = integer_root(n, 3) if max_lag is None else int(max_lag)
    y = values - values.mean()
    z = y * y
    for k in range(1, lag + 1):
        weight = 1.0 - k / (lag + 1)
        z[:-k] += 2 * weight * y[:-k] * y[k:]
    return LongRunVariance(float(z.mean()), batch_means_se(z), lag)


# --- Rate regression ---

@dataclass
class RateFit:
    orders: list
    n_grid: list
    rms: dict = field(default_factory=dict)
    slopes: dict = field(default_factory=dict)
    slope_se: dict = field(default_factory=dict)

    @property
    def log_rms(self) -> dict:
        return {i: [math.log(v) if v > 0 else float("-inf") for v in values] for i, values in self.rms.items()}

    def status(self, order: int) -> str:
        return "ok" if self.slopes.get(order) is not None else "undefined"


def validate_grid(n_grid) -> list:
    """Checks that a rate grid is strictly increasing, has four points and spans a decade."""
    grid = [int(n) for n in n_grid]
    if len(grid) < 4:
        raise ValueError("A rate grid needs at least 4 sample sizes.")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("A rate grid must be strictly increasing.")
    if grid[-1] < 10 * grid[0]:
        raise ValueError("A rate grid must span at least one decade.")
    return grid


def fit_log_slope(n_grid, values):
    """Least-squares slope of log(values) against log(n); (None, None) if any value is zero."""
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        return None, None
    fit = linregress(np.log(np.asarray(n_grid, dtype=float)), np.log(values))
    return float(fit.slope), float(fit.stderr)


def default_reference(kernel, spec, oracle_size: int = projections.DEFAULT_ORACLE_SIZE, seed: int = 0):
    """Analytic projections when the kernel carries h1, otherwise an oracle sample of the true law."""
    if kernel.analytic is not None and kernel.analytic.h1_closed_form is not None:
        return projections.analytic_reference(spec, oracle_size, seed)
    return projections.true_xi_reference(spec, oracle_size, seed)


def rate_regression(kernel, spec, orders, n_grid, reps: int, seed: int = 0, reference=None,
                    cap: int = DEFAULT_CAP, workers: int = 1) -> RateFit:
    """
    Estimates ||U_n^(i)||_{L2} by the RMS over replications and fits its log-log slope in n.

    Order i is expected to decay like n^(-i/2).
    """
    orders = sorted(set(int(i) for i in orders))
    if not orders:
        raise ValueError("nothing to fit: no component orders requested.")
    if orders[0] < 1 or orders[-1] > kernel.degree:
        raise ValueError(f"Component orders must lie in 1..{kernel.degree}.")
    grid = validate_grid(n_grid)
    if reference is None:
        reference = default_reference(kernel, spec, seed=seed)
    canonical = {i: projections.canonical_kernel(kernel, i, reference) for i in orders}

    def replicate(n, rep):
        path = processes.sample_path(spec, n, make_stream(seed, rep, "path", n))
        return [component_ustat(i, canonical[i], path, cap=cap) for i in orders]

    fit = RateFit(orders=orders, n_grid=grid)
    squares = {i: [] for i in orders}
    for n in grid:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(lambda r: replicate(n, r), range(reps)))
        else:
            rows = [replicate(n, r) for r in range(reps)]
        rows = np.asarray(rows)
        for j, i in enumerate(orders):
            squares[i].append(float(np.mean(rows[:, j] ** 2)))
        logger.info("Rate grid n=%d done (%d replications)", n, reps)

    for i in orders:
        fit.rms[i] = [math.sqrt(s) for s in squares[i]]
        fit.slopes[i], fit.slope_se[i] = fit_log_slope(grid, fit.rms[i])
        if fit.slopes[i] is None:
            logger.warning("Component %d of %s vanishes; slope undefined", i, kernel.name)
    return fit


# --- Second moments and tails ---

@dataclass(frozen=True)
class MomentPoint:
    n: int
    mean_square: float
    se: float


@dataclass(frozen=True)
class TailPoint:
    threshold: float
    tail_moment: float
    n_at_max: int


def _values(dist) -> np.ndarray:
    return dist.sorted_values if isinstance(dist, EmpiricalDistribution) else np.asarray(dist, dtype=float)


def second_moment_trajectory(replicated_stats: dict) -> list:
    """Mean of Y^2 per n with its batch-means standard error."""
    points = []
    for n in sorted(replicated_stats):
        y = _values(replicated_stats[n])
        if y.size < MIN_REPLICATIONS:
            raise SampleSizeError(f"Second moments need at least {MIN_REPLICATIONS} replications, got {y.size}.")
        squares = y ** 2
        points.append(MomentPoint(int(n), float(squares.mean()), batch_means_se(squares)))
    return points


def tail_second_moment(values, threshold: float) -> float:
    """Mean of Y^2 * 1{|Y| > threshold}."""
    y = np.asarray(values, dtype=float)
    return float(np.mean(np.where(np.abs(y) > threshold, y ** 2, 0.0)))


def uniform_integrability_profile(replicated_stats: dict, thresholds) -> list:
    """For each threshold K, the largest tail second moment over all n."""
    thresholds = [float(k) for k in thresholds]
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("Thresholds must be strictly ascending.")
    profile = []
    for k in thresholds:
        tails = {n: tail_second_moment(_values(d), k) for n, d in replicated_stats.items()}
        n_max = max(sorted(tails), key=lambda n: tails[n])
        profile.append(TailPoint(k, tails[n_max], int(n_max)))
    return profile


def lindeberg_ratio(h1_values, n_grid, epsilon: float, spec=None, var_h1: Optional[float] = None) -> list:
    """
    Lindeberg ratios L_n(eps) = E[h1^2 1{|h1| > eps s_n}] / Var(h1), s_n^2 = n Var(h1).

    Only defined for i.i.d. data; the expectation is estimated from draws of h1(X).
    """
    if spec is not None and not spec.is_iid:
        raise ProcessSpecError("Lindeberg ratios are only defined for i.i.d. data.")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive.")
    values = np.asarray(h1_values, dtype=float)
    variance = float(var_h1) if var_h1 is not None else float(values.var())
    if variance <= 0:
        return [(int(n), 0.0) for n in n_grid]
    scale = math.sqrt(variance)
    return [(int(n), tail_second_moment(values, epsilon * scale * math.sqrt(n)) / variance) for n in n_grid]


# --- Bound chain ---

@dataclass(frozen=True)
class BoundCheck:
    d2_full: float
    rms_remainder: float
    d2_linear: float

    @property
    def slack(self) -> float:
        """rms_remainder + d2_linear - d2_full; nonnegative up to rounding."""
        return self.rms_remainder + self.d2_linear - self.d2_full


def bound_chain(full, linear, sigma: float) -> BoundCheck:
    """
    Evaluates d2(full, N(0, sigma^2)) <= RMS(full - linear) + d2(linear, N(0, sigma^2)).

    `full` and `linear` are paired per replication; pairing is one coupling of
    their empirical laws, so the RMS of the difference dominates their d2.
    """
    full = np.asarray(full, dtype=float)
    linear = np.asarray(linear, dtype=float)
    remainder = full - linear
    return BoundCheck(
        d2_full=w2_empirical_gaussian(EmpiricalDistribution.from_sample(full), sigma),
        rms_remainder=math.sqrt(float(np.mean(remainder ** 2))),
        d2_linear=w2_empirical_gaussian(EmpiricalDistribution.from_sample(linear), sigma),
    )
