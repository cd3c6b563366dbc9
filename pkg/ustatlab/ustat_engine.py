"""Exact and incomplete U-statistics and the Hoeffding component statistics.

Exact enumeration walks the C(n, m) index tuples in lexicographic order, cut
into chunks of `chunk_size` tuples. Each chunk is summed pairwise by numpy and
the chunk partials are combined with math.fsum, so a result is bitwise
reproducible for a fixed chunk size regardless of how many threads run.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb

import numpy as np

from . import projections
from .combinatorics import chunk_bounds, combination_chunk, sample_index_tuples
from .errors import EnumerationCapError, KernelError, NumericError, SampleSizeError
from .kernels import Kernel

logger = logging.getLogger(__name__)

DEFAULT_CAP = 2 * 10 ** 7
DEFAULT_CHUNK_SIZE = 2 ** 18
SUM_LANES = 4096
MIN_SUBSETS = 100


@dataclass(frozen=True)
class IncompleteEstimate:
    estimate: float
    mc_se: float
    num_subsets: int


@dataclass
class HoeffdingComponents:
    """The component U-statistics U_n^(1..m) and their binomial weights."""
    n: int
    m: int
    components: list
    binomial_weights: list
    # U_n^(0) = h_0; zero for an exactly centred kernel under the true law.
    constant: float = 0.0
    mode: str = "plug_in"
    constant_se: float = 0.0

    def __post_init__(self):
        if len(self.components) != self.m or len(self.binomial_weights) != self.m:
            raise ValueError("One component and one weight per order 1..m are required.")

    def reconstruct(self) -> float:
        """Returns U_n^(0) + sum_i C(m, i) U_n^(i)."""
        return math.fsum([self.constant] + [w * c for w, c in zip(self.binomial_weights, self.components)])


def _as_sample(sample, m: int) -> np.ndarray:
    x = np.asarray(sample, dtype=float).ravel()
    if len(x) < m:
        raise SampleSizeError(f"sample smaller than degree: n = {len(x)} < m = {m}")
    return x


def compensated_sum(values, lanes: int = SUM_LANES) -> float:
    """
    Neumaier-compensated sum, vectorised across `lanes` running totals.

    The lane totals, their corrections and the leftover tail are combined
    exactly by math.fsum.
    """
    values = np.ravel(np.asarray(values, dtype=float))
    full = len(values) - len(values) % lanes
    totals = np.zeros(lanes)
    corrections = np.zeros(lanes)
    for row in values[:full].reshape(-1, lanes):
        updated = totals + row
        corrections += np.where(np.abs(totals) >= np.abs(row), (totals - updated) + row, (row - updated) + totals)
        totals = updated
    return math.fsum(np.concatenate([totals, corrections, values[full:]]).tolist())


def _checked_sum(values: np.ndarray, kernel: Kernel) -> float:
    if not np.isfinite(values).all():
        raise NumericError(f"Kernel '{kernel.name}' produced non-finite values.")
    try:
        total = compensated_sum(values)
    except (OverflowError, ValueError) as e:
        raise NumericError(f"Kernel '{kernel.name}' overflowed when summed.") from e
    if not math.isfinite(total):
        raise NumericError(f"Kernel '{kernel.name}' overflowed when summed.")
    return total


def u_statistic_exact(kernel: Kernel, sample, cap: int = DEFAULT_CAP, chunk_size: int = DEFAULT_CHUNK_SIZE,
                      workers: int = 1) -> float:
    """Averages the kernel over every strictly increasing index m-tuple of the sample."""
    m = kernel.degree
    x = _as_sample(sample, m)
    n = len(x)
    total = comb(n, m)
    if total > cap:
        raise EnumerationCapError(
            f"C({n}, {m}) = {total} tuples exceeds the enumeration cap of {cap}; "
            "use u_statistic_incomplete for samples this large."
        )

    def chunk_sum(bounds):
        idx = combination_chunk(n, m, *bounds)
        return _checked_sum(kernel(*x[idx].T), kernel)

    bounds = chunk_bounds(n, m, chunk_size)
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(chunk_sum, bounds))
    else:
        partials = [chunk_sum(b) for b in bounds]
    return math.fsum(partials) / total


def u_statistic_incomplete(kernel: Kernel, sample, num_subsets: int, stream: np.random.Generator) -> IncompleteEstimate:
    """
    Averages the kernel over num_subsets random index m-tuples.

    Indices are distinct and sorted within a tuple; tuples are drawn with
    replacement, which keeps the estimator unbiased for the exact U-statistic.
    """
    m = kernel.degree
    x = _as_sample(sample, m)
    if num_subsets < MIN_SUBSETS:
        raise ValueError(f"An incomplete U-statistic needs at least {MIN_SUBSETS} subsets, got {num_subsets}.")
    idx = sample_index_tuples(len(x), m, num_subsets, stream)
    values = np.concatenate([
        kernel(*x[idx[lo:lo + DEFAULT_CHUNK_SIZE]].T)
        for lo in range(0, num_subsets, DEFAULT_CHUNK_SIZE)
    ])
    if not np.all(np.isfinite(values)):
        raise NumericError(f"Kernel '{kernel.name}' produced non-finite values.")
    estimate = math.fsum(values) / num_subsets
    mc_se = float(values.std(ddof=1) / math.sqrt(num_subsets))
    return IncompleteEstimate(estimate, mc_se, num_subsets)


def component_ustat(i: int, canonical: Kernel, sample, cap: int = DEFAULT_CAP,
                    chunk_size: int = DEFAULT_CHUNK_SIZE, workers: int = 1) -> float:
    """The U-statistic U_n^(i) of the canonical kernel h_i."""
    if canonical.degree != i:
        raise KernelError(f"Canonical kernel has degree {canonical.degree}, expected {i}.")
    return u_statistic_exact(canonical, sample, cap=cap, chunk_size=chunk_size, workers=workers)


def hoeffding_reconstruct(kernel: Kernel, sample, mode: str = "plug_in", reference=None,
                          cap: int = DEFAULT_CAP, chunk_size: int = DEFAULT_CHUNK_SIZE) -> HoeffdingComponents:
    """
    Computes every component of the Hoeffding decomposition of U_h on sample.

    In plug_in mode the projections integrate against the sample itself and
    the reconstruction reproduces the exact U-statistic up to rounding. Other
    modes need a matching ReferenceMeasure.
    """
    m = kernel.degree
    x = _as_sample(sample, m)
    if mode == "plug_in":
        reference = projections.plug_in_reference(x, cap=cap)
    elif reference is None or reference.mode != mode:
        raise ValueError(f"Projection mode '{mode}' needs a matching ReferenceMeasure.")

    value0, se0 = projections.projection_values(kernel, 0, np.empty((1, 0)), reference)
    components = []
    for i in range(1, m + 1):
        canonical = projections.canonical_kernel(kernel, i, reference)
        components.append(component_ustat(i, canonical, x, cap=cap, chunk_size=chunk_size))
    return HoeffdingComponents(
        n=len(x),
        m=m,
        components=components,
        binomial_weights=[comb(m, i) for i in range(1, m + 1)],
        constant=float(value0[0]),
        mode=mode,
        constant_se=float(se0[0]),
    )
