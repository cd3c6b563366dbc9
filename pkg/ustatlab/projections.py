"""Hoeffding projections and canonical kernels.

The k-th projection integrates the last m-k kernel arguments against a
reference measure: either the true marginal law (approximated by a large
independent oracle sample), the plug-in empirical measure of the observed
sample, or closed forms carried by catalog kernels. Canonical kernels follow
by inclusion-exclusion over argument subsets.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from math import comb
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from . import processes
from .combinatorics import iter_combination_chunks, sample_index_tuples
from .errors import KernelError
from .kernels import Kernel
from .rng import stream as make_stream

logger = logging.getLogger(__name__)

MODES = ("true_xi", "plug_in", "analytic")
DEFAULT_ORACLE_SIZE = 10 ** 5
MIN_ORACLE_SIZE = 10 ** 4
DEFAULT_CAP = 2 * 10 ** 7
MC_TUPLES = 10 ** 5
DEGENERACY_SE_MULTIPLE = 5.0
TABLE_NODES = 1025
MIN_PROBE_SIZE = 10 ** 3
# Upper bound on kernel evaluations held in memory at once.
_BLOCK_EVALUATIONS = 2 ** 22


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True, eq=False)
class ReferenceMeasure:
    """The measure xi the projections integrate against."""
    mode: str
    oracle_sample: np.ndarray
    source: Optional[processes.ProcessSpec] = None
    cap: int = DEFAULT_CAP
    mc_tuples: int = MC_TUPLES
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"Unknown projection mode '{self.mode}'. Expected one of {', '.join(MODES)}.")
        if self.mode != "plug_in" and len(self.oracle_sample) < MIN_ORACLE_SIZE:
            raise ValueError(f"An oracle sample needs at least {MIN_ORACLE_SIZE} draws, got {len(self.oracle_sample)}.")

    @property
    def size(self) -> int:
        return len(self.oracle_sample)

    def draw(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Independent draws from xi: fresh marginal draws when the process is known, else resampling."""
        if self.source is not None:
            return processes.marginal_sample(self.source, size, rng)
        return rng.choice(self.oracle_sample, size=size, replace=True)


def true_xi_reference(spec, n_ref: int = DEFAULT_ORACLE_SIZE, seed: int = 0, mode: str = "true_xi", **options) -> ReferenceMeasure:
    """Draws an oracle sample from the stationary marginal of spec."""
    oracle = np.sort(processes.marginal_sample(spec, n_ref, make_stream(seed, 0, "oracle")))
    return ReferenceMeasure(mode, oracle, spec, seed=seed, **options)


def analytic_reference(spec, n_ref: int = DEFAULT_ORACLE_SIZE, seed: int = 0, **options) -> ReferenceMeasure:
    """Closed-form projections where the kernel carries them, oracle sample otherwise."""
    return true_xi_reference(spec, n_ref, seed, mode="analytic", **options)


def plug_in_reference(sample, **options) -> ReferenceMeasure:
    """The empirical measure of the observed sample."""
    return ReferenceMeasure("plug_in", np.sort(np.asarray(sample, dtype=float)), **options)


# --- Projections ---

def _average_over_oracle(kernel: Kernel, points: np.ndarray, ref: ReferenceMeasure):
    """Means and standard errors of kernel(point, Y_{k+1}, ..., Y_m) over oracle tuples, per point."""
    k = points.shape[1]
    r = kernel.degree - k
    y = ref.oracle_sample
    num_points = points.shape[0]
    sums = np.zeros(num_points)
    squares = np.zeros(num_points)

    def accumulate(tuples):
        rows = max(1, _BLOCK_EVALUATIONS // max(1, len(tuples)))
        y_cols = [y[tuples[:, j]][None, :] for j in range(r)]
        for lo in range(0, num_points, rows):
            p_cols = [points[lo:lo + rows, j][:, None] for j in range(k)]
            values = kernel(*p_cols, *y_cols)
            sums[lo:lo + rows] += values.sum(axis=1)
            squares[lo:lo + rows] += (values ** 2).sum(axis=1)

    total = comb(ref.size, r)
    if total <= ref.cap:
        chunk = max(1, _BLOCK_EVALUATIONS // max(1, num_points))
        for tuples in iter_combination_chunks(ref.size, r, min(chunk, 2 ** 18)):
            accumulate(tuples)
        count = total
        # a U-statistic of order r over N draws has variance at most (r/N) Var(h)
        effective = ref.size / r
    else:
        rng = make_stream(ref.seed, 0, "oracle", k + 1)
        tuples = sample_index_tuples(ref.size, r, ref.mc_tuples, rng)
        for lo in range(0, len(tuples), 2 ** 16):
            accumulate(tuples[lo:lo + 2 ** 16])
        count = effective = ref.mc_tuples

    means = sums / count
    variances = np.maximum(squares / count - means ** 2, 0.0)
    if ref.mode == "plug_in" and total <= ref.cap:
        ses = np.zeros(num_points)
    else:
        ses = np.sqrt(variances / effective)
    return means, ses


def _as_points(points, k: int) -> np.ndarray:
    """Evaluation points as a (K, k) array; a 2-D input passes through unchanged."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        points = points.reshape(points.size // k, k) if k else points.reshape(1, 0)
    if points.shape[1] != k:
        raise KernelError(f"Expected points with {k} columns, got shape {points.shape}.")
    return points


def projection_values(kernel: Kernel, k: int, points, ref: ReferenceMeasure):
    """Vectorized projection h_k at each row of a (K, k) array; returns (values, standard errors)."""
    m = kernel.degree
    if not 0 <= k <= m:
        raise KernelError(f"Projection order {k} out of range 0..{m}.")
    points = _as_points(points, k)
    num_points = points.shape[0]
    if k == m:
        return kernel(*points.T), np.zeros(num_points)

    analytic = kernel.analytic
    if ref.mode == "analytic" and analytic is not None:
        constant = analytic.theta_raw - kernel.centering_offset
        if k == 0:
            return np.full(num_points, constant), np.zeros(num_points)
        if k == 1 and analytic.h1_closed_form is not None:
            return analytic.h1_closed_form(points[:, 0]) + constant, np.zeros(num_points)

    if k == 0:
        mean, se = _average_over_oracle(kernel, np.empty((1, 0)), ref)
        return np.full(num_points, mean[0]), np.full(num_points, se[0])
    return _average_over_oracle(kernel, points, ref)


def marginal_projection(kernel: Kernel, k: int, args, ref: ReferenceMeasure) -> Estimate:
    """The projection h_k at a single k-tuple, with its Monte Carlo standard error."""
    values, ses = projection_values(kernel, k, np.asarray(args, dtype=float).reshape(1, k), ref)
    return Estimate(float(values[0]), float(ses[0]))


@dataclass(frozen=True)
class ProjectionTable:
    """The first projection h_1 tabulated on oracle quantiles and interpolated by a cubic spline."""
    spline: CubicSpline
    se: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.spline(x), np.full(x.shape, self.se)


def tabulate_first_projection(kernel: Kernel, ref: ReferenceMeasure, nodes: int = TABLE_NODES) -> ProjectionTable:
    """
    Evaluates h_1 once at `nodes` oracle quantiles plus the oracle extremes.

    Every node shares the same oracle tuples, so the tabulated values are a
    smooth function of x and the spline reproduces polynomial projections
    of degree up to three exactly.
    """
    if kernel.degree < 2:
        raise KernelError(f"Tabulation needs a kernel of degree at least 2, got {kernel.degree}.")
    y = ref.oracle_sample
    levels = (np.arange(nodes) + 0.5) / nodes
    grid = np.unique(np.concatenate([[y.min()], np.quantile(y, levels), [y.max()]]))
    values, ses = _average_over_oracle(kernel, grid[:, None], ref)
    logger.debug("Tabulated h1 of %s on %d nodes, max se %.3g", kernel.name, len(grid), float(ses.max()))
    return ProjectionTable(CubicSpline(grid, values), float(ses.max()))


def _needs_table(kernel: Kernel, ref: ReferenceMeasure) -> bool:
    """True when h_1 would otherwise average over the whole oracle at every evaluation point."""
    if kernel.degree < 2 or ref.mode == "plug_in":
        return False
    analytic = kernel.analytic
    return not (ref.mode == "analytic" and analytic is not None and analytic.h1_closed_form is not None)


def canonical_values(kernel: Kernel, i: int, points, ref: ReferenceMeasure, constant: Optional[tuple] = None,
                     table: Optional[ProjectionTable] = None):
    """
    Canonical kernel h_i at each row of a (K, i) array, with combined standard errors.

    h_i(x_1..x_i) = sum over subsets B of {1..i} of (-1)^(i-|B|) h_|B|(x_B).
    A table, when given, replaces the oracle average for the size-one terms.
    """
    m = kernel.degree
    if not 1 <= i <= m:
        raise KernelError(f"Canonical order {i} out of range 1..{m}.")
    points = _as_points(points, i)
    num_points = points.shape[0]
    if constant is None:
        value0, se0 = projection_values(kernel, 0, np.empty((1, 0)), ref)
        constant = (float(value0[0]), float(se0[0]))

    total = np.full(num_points, (-1.0) ** i * constant[0])
    variance = np.full(num_points, constant[1] ** 2)
    for size in range(1, i + 1):
        sign = (-1.0) ** (i - size)
        for subset in itertools.combinations(range(i), size):
            if size == 1 and table is not None:
                values, ses = table(points[:, subset[0]])
            else:
                values, ses = projection_values(kernel, size, points[:, subset], ref)
            total += sign * values
            variance += ses ** 2
    return total, np.sqrt(variance)


def canonical_kernel(kernel: Kernel, i: int, ref: ReferenceMeasure) -> Kernel:
    """
    The degree-i canonical kernel h_i of the Hoeffding decomposition.

    Against an oracle reference the first projection is tabulated once, so
    each evaluation costs a spline lookup instead of a pass over the oracle.
    """
    if not 1 <= i <= kernel.degree:
        raise KernelError(f"Canonical order {i} out of range 1..{kernel.degree}.")
    value0, se0 = projection_values(kernel, 0, np.empty((1, 0)), ref)
    constant = (float(value0[0]), float(se0[0]))
    table = tabulate_first_projection(kernel, ref) if _needs_table(kernel, ref) else None

    def raw(*columns):
        columns = np.broadcast_arrays(*columns)
        shape = columns[0].shape
        points = np.column_stack([c.ravel() for c in columns])
        values, _ = canonical_values(kernel, i, points, ref, constant, table)
        return values.reshape(shape)

    return Kernel(
        name=f"{kernel.name}_h{i}",
        degree=i,
        raw=raw,
        is_symmetric=True,
        moment_order=kernel.moment_order,
        tail_power=kernel.tail_power,
    )


def degeneracy_order(kernel: Kernel, ref: ReferenceMeasure, probe_size: int = 2000, stream: Optional[np.random.Generator] = None) -> int:
    """
    Returns the order of degeneracy: the smallest i whose canonical kernel has
    nonzero variance, minus one; m when every component vanishes.

    A component counts as nonzero when its probe variance exceeds five times
    the sum of the variance estimate's standard error and the projection noise
    floor (mean squared projection standard error).
    """
    if probe_size < MIN_PROBE_SIZE:
        raise ValueError(f"Degeneracy probes need at least {MIN_PROBE_SIZE} points, got {probe_size}.")
    rng = stream if stream is not None else make_stream(ref.seed, 0, "probe")
    m = kernel.degree
    for i in range(1, m + 1):
        points = ref.draw(probe_size * i, rng).reshape(probe_size, i)
        values, ses = canonical_values(kernel, i, points, ref)
        centred = values - values.mean()
        var_hat = float(centred.var(ddof=1))
        se_var = float((centred ** 2).std(ddof=1) / math.sqrt(probe_size))
        noise_floor = float(np.mean(ses ** 2))
        logger.debug("Degeneracy probe %s order %d: var %.3g, se %.3g, floor %.3g",
                     kernel.name, i, var_hat, se_var, noise_floor)
        if var_hat > DEGENERACY_SE_MULTIPLE * (se_var + noise_floor):
            return i - 1
    return m
