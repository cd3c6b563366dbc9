"""Symmetric, centred U-statistic kernels and the built-in kernel catalog.

A kernel's raw function takes m numpy arrays (one per argument, broadcast
together) and returns the kernel values elementwise, so a whole chunk of index
tuples is evaluated in one call. Kernels are immutable after construction.
"""

import itertools
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtr

from . import processes
from .errors import KernelError
from .rng import stream as make_stream

logger = logging.getLogger(__name__)

MAX_SYMMETRIZE_DEGREE = 8
MIN_MC_SIZE = 10 ** 4
DEFAULT_MOMENT_ORDER = 4.0
# Heavy-tailed references only have L_p for p strictly below the tail bound.
PARETO_MOMENT_MARGIN = 0.1


@dataclass(frozen=True)
class Analytic:
    """Closed-form constants of a kernel under a fixed reference law."""
    theta_raw: float
    h1_closed_form: Optional[Callable] = None
    var_h1: Optional[float] = None
    # (c1, c2) with h1(x) = c1*(x - mu) + c2*((x - mu)^2 - sigma^2)
    h1_poly: Optional[tuple] = None


@dataclass(frozen=True)
class Kernel:
    name: str
    degree: int
    raw: Callable
    is_symmetric: bool = False
    centering_offset: float = 0.0
    centering_se: float = 0.0
    moment_order: float = 2.0
    analytic: Optional[Analytic] = None
    # Highest power of a single argument in the kernel, used for tail moment bounds.
    tail_power: int = 1

    def __post_init__(self):
        if self.degree < 1:
            raise KernelError(f"Kernel degree must be at least 1, got {self.degree}.")

    def __call__(self, *columns) -> np.ndarray:
        """Evaluates the centred kernel elementwise over broadcast argument arrays."""
        if len(columns) != self.degree:
            raise KernelError(f"Kernel '{self.name}' takes {self.degree} arguments, got {len(columns)}.")
        columns = [np.asarray(c, dtype=float) for c in columns]
        shape = np.broadcast_shapes(*(c.shape for c in columns))
        values = np.broadcast_to(np.asarray(self.raw(*columns), dtype=float), shape)
        return values - self.centering_offset

    def evaluate(self, args) -> float:
        """Evaluates the centred kernel at a single m-tuple."""
        return float(self(*(np.asarray(a, dtype=float) for a in args)))


def _broadcast_zero(*columns):
    return np.zeros(np.broadcast_shapes(*(np.shape(c) for c in columns)))


def _sorted_product(*columns):
    # multiplying in sorted order makes the result exactly permutation-invariant
    stacked = np.sort(np.stack(np.broadcast_arrays(*columns)), axis=0)
    return np.prod(stacked, axis=0)


def symmetrize(raw_kernel: Callable, degree: int, name: str = "symmetrized", **fields) -> Kernel:
    """Averages raw_kernel over all degree! argument orders."""
    if degree > MAX_SYMMETRIZE_DEGREE:
        raise KernelError(
            f"Refusing to symmetrize a degree-{degree} kernel ({math.factorial(degree)} orders); "
            f"pre-symmetrize kernels of degree above {MAX_SYMMETRIZE_DEGREE}."
        )
    orders = list(itertools.permutations(range(degree)))

    def symmetric(*columns):
        total = sum(np.asarray(raw_kernel(*(columns[i] for i in order)), dtype=float) for order in orders)
        return total / len(orders)

    return Kernel(name=name, degree=degree, raw=symmetric, is_symmetric=True, **fields)


def center(kernel: Kernel, reference, mc_size: int = 10 ** 5, stream: Optional[np.random.Generator] = None) -> Kernel:
    """
    Returns the kernel shifted by E[h(X_1, ..., X_m)] under the reference marginal.

    The analytic mean is used when the kernel carries one; otherwise the mean
    is estimated from mc_size independent m-tuples and its standard error is
    recorded in `centering_se`. The offset always refers to the raw function,
    so centring twice does not accumulate shifts.
    """
    if kernel.analytic is not None:
        return replace(kernel, centering_offset=float(kernel.analytic.theta_raw), centering_se=0.0)
    if mc_size < MIN_MC_SIZE:
        raise KernelError(f"Centring needs at least {MIN_MC_SIZE} Monte Carlo tuples, got {mc_size}.")

    rng = stream if stream is not None else make_stream(0, 0, "centering")
    m = kernel.degree
    draws = processes.marginal_sample(reference, mc_size * m, rng).reshape(m, mc_size)
    values = np.broadcast_to(np.asarray(kernel.raw(*draws), dtype=float), (mc_size,))
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        offending = tuple(float(v) for v in draws[:, bad[0]])
        raise KernelError(f"Kernel '{kernel.name}' is not finite at {offending}.")

    offset = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(mc_size))
    logger.debug("Centred kernel %s: offset %.6g (MC SE %.2g)", kernel.name, offset, se)
    return replace(kernel, centering_offset=offset, centering_se=se)


def linear_combination(a: float, h: Kernel, b: float, g: Kernel) -> Kernel:
    """Builds the kernel a*h + b*g from two centred kernels of equal degree."""
    if h.degree != g.degree:
        raise KernelError(f"Cannot combine kernels of degree {h.degree} and {g.degree}.")
    return Kernel(
        name=f"{a:g}*{h.name}+{b:g}*{g.name}",
        degree=h.degree,
        raw=lambda *cols: a * h(*cols) + b * g(*cols),
        is_symmetric=h.is_symmetric and g.is_symmetric,
        moment_order=min(h.moment_order, g.moment_order),
        tail_power=max(h.tail_power, g.tail_power),
    )


# --- Built-in catalog ---

def _gini_analytic(reference) -> Optional[Analytic]:
    """E|X - Y| and its first projection for uniform and Gaussian marginals."""
    moments = reference.marginal_moments
    if reference.family == "iid_uniform":
        a, b = reference.params["a"], reference.params["b"]
        width = b - a

        def h1(x):
            u = (np.asarray(x, dtype=float) - a) / width
            return width * (u ** 2 - u + 1.0 / 6.0)

        return Analytic(theta_raw=width / 3, h1_closed_form=h1, var_h1=width ** 2 / 180)
    if reference.family in ("iid_normal",) + processes.GAUSSIAN_LINEAR_FAMILIES:
        mu, s = moments["mean"], math.sqrt(moments["variance"])
        theta = 2 * s / math.sqrt(math.pi)

        def h1(x):
            z = (np.asarray(x, dtype=float) - mu) / s
            density = np.exp(-0.5 * z ** 2) / math.sqrt(2 * math.pi)
            return s * z * (2 * ndtr(z) - 1) + 2 * s * density - theta

        var_h1 = s ** 2 * (1.0 / 3.0 + (2 * math.sqrt(3) - 4) / math.pi)
        return Analytic(theta_raw=theta, h1_closed_form=h1, var_h1=var_h1)
    return None


def _catalog_analytic(name: str, reference) -> Optional[Analytic]:
    if reference is None:
        return None
    moments = reference.marginal_moments
    mu, var, mu4 = moments["mean"], moments["variance"], moments["fourth_central"]

    if name == "mean":
        return Analytic(mu, lambda x: np.asarray(x, dtype=float) - mu, var, (1.0, 0.0))
    if name == "variance":
        var_h1 = None if mu4 is None else (mu4 - var ** 2) / 4
        return Analytic(var, lambda x: ((np.asarray(x, dtype=float) - mu) ** 2 - var) / 2, var_h1, (0.0, 0.5))
    if name == "product":
        return Analytic(mu ** 2, lambda x: mu * (np.asarray(x, dtype=float) - mu), mu ** 2 * var, (mu, 0.0))
    if name == "triple":
        return Analytic(mu ** 3, lambda x: mu ** 2 * (np.asarray(x, dtype=float) - mu), mu ** 4 * var, (mu ** 2, 0.0))
    if name == "gini":
        return _gini_analytic(reference)
    return None


CATALOG = {
    # name: (degree, raw kernel, tail power, description)
    "mean": (1, lambda x: x, 1, "h(x) = x"),
    "variance": (2, lambda x, y: (x - y) ** 2 / 2, 2, "h(x, y) = (x - y)^2 / 2"),
    "gini": (2, lambda x, y: np.abs(x - y), 1, "h(x, y) = |x - y|"),
    "product": (2, lambda x, y: x * y, 1, "h(x, y) = xy (degenerate for centred marginals)"),
    "triple": (3, _sorted_product, 1, "h(x, y, z) = xyz"),
}


def catalog_moment_order(tail_power: int, reference, default: float = DEFAULT_MOMENT_ORDER) -> float:
    """Largest claimed p with ||h||_{L_p} finite under the reference law."""
    if reference is None or math.isinf(reference.moment_bound):
        return default
    return reference.moment_bound / tail_power - PARETO_MOMENT_MARGIN


def builtin_catalog(reference=None, moment_order: Optional[float] = None) -> dict:
    """
    Returns the built-in kernels by name, uncentred.

    When a reference process is given, each kernel carries the analytic
    constants known for that reference and a moment order derived from its
    tails. `moment_order` overrides the derived value.
    """
    kernels = {}
    for name, (degree, raw, tail_power, _) in CATALOG.items():
        p = moment_order if moment_order is not None else catalog_moment_order(tail_power, reference)
        kernels[name] = Kernel(
            name=name,
            degree=degree,
            raw=raw,
            is_symmetric=True,
            moment_order=p,
            analytic=_catalog_analytic(name, reference),
            tail_power=tail_power,
        )
    return kernels


def get_kernel(name: str, reference=None, moment_order: Optional[float] = None, centred: bool = False) -> Kernel:
    """Looks up a catalog kernel by name, optionally centred under the reference."""
    kernels = builtin_catalog(reference, moment_order)
    if name not in kernels:
        raise KernelError(f"Unknown kernel '{name}'. Available: {', '.join(kernels)}.")
    kernel = kernels[name]
    if centred:
        if reference is None:
            raise KernelError("Centring a catalog kernel needs a reference process.")
        kernel = center(kernel, reference)
    return kernel


def zero_kernel(degree: int) -> Kernel:
    """The identically zero kernel of the given degree."""
    return Kernel(name="zero", degree=degree, raw=_broadcast_zero, is_symmetric=True,
                  moment_order=math.inf, analytic=Analytic(0.0, lambda x: np.zeros(np.shape(x)), 0.0, (0.0, 0.0)))
