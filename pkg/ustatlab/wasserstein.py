"""Exact one-dimensional Wasserstein-2 distances.

In one dimension the optimal coupling is the quantile (monotone) coupling, so
d2 is the L2 distance between quantile functions. Empirical quantile functions
are step functions, which makes every distance here an exact finite sum;
against a centred Gaussian each step contributes closed-form truncated
moments of the normal law.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import NumericError

logger = logging.getLogger(__name__)

_SQRT_2PI = math.sqrt(2 * math.pi)

# Rational approximation of the normal quantile (lower tail and central region).
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """A sorted real sample; its quantile at u in ((i-1)/n, i/n] is the i-th order statistic."""
    sorted_values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.sorted_values, dtype=float).ravel()
        if values.size == 0:
            raise NumericError("An empirical distribution needs at least one value.")
        if np.any(np.diff(values) < 0):
            raise NumericError("Empirical distribution values must be sorted; use from_sample().")
        object.__setattr__(self, "sorted_values", values)

    @classmethod
    def from_sample(cls, values) -> "EmpiricalDistribution":
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            raise NumericError("An empirical distribution needs at least one value.")
        return cls(np.sort(values))

    @property
    def n(self) -> int:
        return self.sorted_values.size

    def quantile(self, u):
        """Left-continuous quantile function F^-1(u) for u in (0, 1]."""
        u = np.asarray(u, dtype=float)
        idx = np.clip(np.ceil(u * self.n).astype(np.int64) - 1, 0, self.n - 1)
        return self.sorted_values[idx]

    @property
    def mean_square(self) -> float:
        return float(np.mean(self.sorted_values ** 2))


def _as_empirical(a) -> EmpiricalDistribution:
    return a if isinstance(a, EmpiricalDistribution) else EmpiricalDistribution.from_sample(a)


def _lower_tail_quantile(p: np.ndarray) -> np.ndarray:
    """Rational approximation for 0 < p <= 0.5, refined by one Halley step."""
    x = np.empty_like(p)
    low = p < _P_LOW
    q = np.sqrt(-2 * np.log(p[low]))
    x[low] = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
              / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1))
    q = p[~low] - 0.5
    r = q * q
    x[~low] = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
               / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1))

    error = 0.5 * erfc(-x / math.sqrt(2)) - p
    step = error * _SQRT_2PI * np.exp(0.5 * x * x)
    return x - step / (1 + 0.5 * x * step)


def inverse_normal_cdf(u):
    """
    Standard normal quantile Phi^-1(u) for u in (0, 1), elementwise.

    The upper half is obtained by antisymmetry from the lower half, so
    Phi^-1(1 - u) = -Phi^-1(u) holds to rounding.
    """
    scalar = np.ndim(u) == 0
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(~(u > 0) | ~(u < 1)):
        raise NumericError("inverse_normal_cdf is defined on the open interval (0, 1).")
    upper = u > 0.5
    p = np.where(upper, 1.0 - u, u)
    x = _lower_tail_quantile(p)
    x = np.where(upper, -x, x)
    return float(x[0]) if scalar else x


def _normal_density(z: np.ndarray) -> np.ndarray:
    out = np.zeros_like(z)
    finite = np.isfinite(z)
    out[finite] = np.exp(-0.5 * z[finite] ** 2) / _SQRT_2PI
    return out


def w2_empirical_empirical(a, b) -> float:
    """Exact d2 between two empirical distributions of possibly different sizes."""
    a, b = _as_empirical(a), _as_empirical(b)
    if a.n == b.n:
        return math.sqrt(float(np.mean((a.sorted_values - b.sorted_values) ** 2)))

    # Refine both uniform quantile grids on the integer grid of step 1/lcm.
    grid = math.lcm(a.n, b.n)
    step_a, step_b = grid // a.n, grid // b.n
    right = np.union1d(np.arange(1, a.n + 1, dtype=np.int64) * step_a,
                       np.arange(1, b.n + 1, dtype=np.int64) * step_b)
    left = np.concatenate([[0], right[:-1]])
    idx_a = (right + step_a - 1) // step_a - 1
    idx_b = (right + step_b - 1) // step_b - 1
    weights = (right - left) / grid
    diff = a.sorted_values[idx_a] - b.sorted_values[idx_b]
    return math.sqrt(float(np.sum(weights * diff ** 2)))


def w2_empirical_gaussian(a, sigma: float) -> float:
    """
    Exact d2 between an empirical distribution and N(0, sigma^2).

    On the cell ((i-1)/n, i/n] with z = Phi^-1(u), the integrals of z and z^2
    are phi(z0) - phi(z1) and [Phi(z) - z phi(z)] from z0 to z1; the outer
    cells run to -inf and +inf where both boundary terms vanish.
    """
    if not sigma > 0:
        raise NumericError(f"sigma must be positive, got {sigma}.")
    a = _as_empirical(a)
    n = a.n
    width = 1.0 / n
    edges = np.concatenate([[-np.inf], inverse_normal_cdf(np.arange(1, n) / n) if n > 1 else [], [np.inf]])
    density = _normal_density(edges)
    z_density = np.where(np.isfinite(edges), edges * density, 0.0)

    first = density[:-1] - density[1:]
    second = width - (z_density[1:] - z_density[:-1])
    # squared distance to the cell mean of sigma*z plus the within-cell spread of sigma*z
    cell_mean = first / width
    spread = np.maximum(second - first * cell_mean, 0.0)
    total = np.sum(width * (a.sorted_values - sigma * cell_mean) ** 2) + sigma ** 2 * np.sum(spread)
    return math.sqrt(float(total))


def w2_gaussian_gaussian(sigma_a: float, sigma_b: float) -> float:
    """d2 between N(0, sigma_a^2) and N(0, sigma_b^2)."""
    if not (sigma_a > 0 and sigma_b > 0):
        raise NumericError("Gaussian scales must be positive.")
    return abs(sigma_a - sigma_b)
