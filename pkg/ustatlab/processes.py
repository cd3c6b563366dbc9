"""Scalar strictly stationary data generators with certified mixing metadata.

Each family certifies its absolute-regularity (beta-mixing) rate analytically:
i.i.d. data have beta identically zero, MA(q) data are q-dependent and
Gaussian AR(1) data mix geometrically. Rates are never estimated from data.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from .errors import ProcessSpecError

logger = logging.getLogger(__name__)

IID_FAMILIES = ("iid_normal", "iid_uniform", "iid_pareto")
GAUSSIAN_LINEAR_FAMILIES = ("ar1_gaussian", "ma_q_gaussian")
FAMILIES = IID_FAMILIES + GAUSSIAN_LINEAR_FAMILIES

DEFAULT_PARAMS = {
    "iid_normal": {"mu": 0.0, "sigma": 1.0},
    "iid_uniform": {"a": 0.0, "b": 1.0},
    "iid_pareto": {"alpha": 3.0, "x_min": 1.0},
    "ar1_gaussian": {"phi": 0.5, "sigma_eps": 1.0},
    "ma_q_gaussian": {"coefficients": [1.0], "sigma_eps": 1.0},
}


@dataclass(frozen=True)
class BetaRate:
    """Decay descriptor of the beta-mixing coefficients."""
    kind: str  # exact_zero | m_dependent | geometric | polynomial
    value: float = 0.0

    @property
    def r_exponent(self) -> float:
        """Largest r with beta(n) = O(n^-r)."""
        return self.value if self.kind == "polynomial" else math.inf

    def describe(self) -> str:
        if self.kind == "exact_zero":
            return "beta(n) = 0"
        if self.kind == "m_dependent":
            return f"beta(n) = 0 for n > {int(self.value)}"
        if self.kind == "geometric":
            return f"beta(n) = O({self.value:g}^n)"
        return f"beta(n) = O(n^-{self.value:g})"


@dataclass(frozen=True)
class ProcessSpec:
    """A stationary data-generating mechanism and its analytic metadata."""
    family: str
    params: dict = field(default_factory=dict)
    beta_override: Optional[BetaRate] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ProcessSpecError(f"Unknown process family '{self.family}'. Expected one of {', '.join(FAMILIES)}.")
        unknown = set(self.params) - set(DEFAULT_PARAMS[self.family])
        if unknown:
            raise ProcessSpecError(f"Unknown parameters for {self.family}: {', '.join(sorted(unknown))}.")
        merged = {**DEFAULT_PARAMS[self.family], **self.params}
        object.__setattr__(self, "params", merged)
        _validate(self.family, merged)

    @property
    def name(self) -> str:
        args = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.family}({args})"

    @property
    def is_iid(self) -> bool:
        return self.family in IID_FAMILIES and self.beta_override is None

    @property
    def beta_rate(self) -> BetaRate:
        if self.beta_override is not None:
            return self.beta_override
        if self.family in IID_FAMILIES:
            return BetaRate("exact_zero")
        if self.family == "ma_q_gaussian":
            return BetaRate("m_dependent", len(self.params["coefficients"]) - 1)
        return BetaRate("geometric", abs(self.params["phi"]))

    @property
    def r_exponent(self) -> float:
        return self.beta_rate.r_exponent

    @property
    def moment_bound(self) -> float:
        """Supremum of p with E|X|^p finite."""
        if self.family == "iid_pareto":
            return float(self.params["alpha"])
        return math.inf

    @property
    def marginal_moments(self) -> dict:
        return marginal_moments(self)


def _validate(family, params):
    if family == "iid_normal" and params["sigma"] <= 0:
        raise ProcessSpecError("iid_normal requires sigma > 0.")
    if family == "iid_uniform" and not params["a"] < params["b"]:
        raise ProcessSpecError("iid_uniform requires a < b.")
    if family == "iid_pareto":
        if params["alpha"] <= 2:
            raise ProcessSpecError("iid_pareto requires alpha > 2 for a finite variance.")
        if params["x_min"] <= 0:
            raise ProcessSpecError("iid_pareto requires x_min > 0.")
    if family == "ar1_gaussian":
        if not abs(params["phi"]) < 1:
            raise ProcessSpecError("ar1_gaussian requires |phi| < 1.")
        if params["sigma_eps"] <= 0:
            raise ProcessSpecError("ar1_gaussian requires sigma_eps > 0.")
    if family == "ma_q_gaussian":
        coefficients = params["coefficients"]
        if len(coefficients) == 0 or not any(coefficients):
            raise ProcessSpecError("ma_q_gaussian requires at least one nonzero coefficient.")
        if params["sigma_eps"] <= 0:
            raise ProcessSpecError("ma_q_gaussian requires sigma_eps > 0.")


def make_process(family: str, beta_override: Optional[BetaRate] = None, **params) -> ProcessSpec:
    """Builds a ProcessSpec from a family name and keyword parameters."""
    return ProcessSpec(family, dict(params), beta_override)


# --- Analytic metadata ---

def autocovariance(spec: ProcessSpec, k: int) -> Optional[float]:
    """Closed-form lag-k autocovariance, or None if the variance is infinite."""
    k = abs(k)
    p = spec.params
    if spec.family in IID_FAMILIES:
        return marginal_moments(spec)["variance"] if k == 0 else 0.0
    if spec.family == "ar1_gaussian":
        return p["phi"] ** k * p["sigma_eps"] ** 2 / (1 - p["phi"] ** 2)
    c = np.asarray(p["coefficients"], dtype=float)
    if k >= len(c):
        return 0.0
    return float(p["sigma_eps"] ** 2 * np.dot(c[: len(c) - k], c[k:]))


def marginal_moments(spec: ProcessSpec) -> dict:
    """Mean, variance and fourth central moment of the stationary marginal (None where infinite)."""
    p = spec.params
    if spec.family == "iid_normal":
        return {"mean": p["mu"], "variance": p["sigma"] ** 2, "fourth_central": 3 * p["sigma"] ** 4}
    if spec.family == "iid_uniform":
        width = p["b"] - p["a"]
        return {"mean": (p["a"] + p["b"]) / 2, "variance": width ** 2 / 12, "fourth_central": width ** 4 / 80}
    if spec.family == "iid_pareto":
        alpha, x_min = p["alpha"], p["x_min"]

        def raw(k):
            return alpha * x_min ** k / (alpha - k)

        mean = raw(1)
        variance = raw(2) - mean ** 2
        fourth = None
        if alpha > 4:
            fourth = raw(4) - 4 * mean * raw(3) + 6 * mean ** 2 * raw(2) - 3 * mean ** 4
        return {"mean": mean, "variance": variance, "fourth_central": fourth}
    gamma0 = autocovariance(spec, 0)
    return {"mean": 0.0, "variance": gamma0, "fourth_central": 3 * gamma0 ** 2}


# --- Sampling ---

def sample_path(spec: ProcessSpec, n: int, stream: np.random.Generator) -> np.ndarray:
    """Draws a length-n path from the stationary law of the process."""
    if n < 1:
        raise ProcessSpecError("Path length must be at least 1.")
    p = spec.params
    if spec.family in IID_FAMILIES:
        return marginal_sample(spec, n, stream)
    if spec.family == "ar1_gaussian":
        phi, sigma = p["phi"], p["sigma_eps"]
        x0 = stream.standard_normal() * math.sqrt(autocovariance(spec, 0))
        if n == 1:
            return np.array([x0])
        innovations = sigma * stream.standard_normal(n - 1)
        tail, _ = lfilter([1.0], [1.0, -phi], innovations, zi=[phi * x0])
        return np.concatenate([[x0], tail])
    c = np.asarray(p["coefficients"], dtype=float)
    innovations = p["sigma_eps"] * stream.standard_normal(n + len(c) - 1)
    return np.convolve(innovations, c, mode="valid")


def marginal_sample(spec: ProcessSpec, n: int, stream: np.random.Generator) -> np.ndarray:
    """Draws n i.i.d. values from the stationary marginal of the process."""
    if n < 1:
        raise ProcessSpecError("Sample size must be at least 1.")
    p = spec.params
    if spec.family == "iid_normal":
        return p["mu"] + p["sigma"] * stream.standard_normal(n)
    if spec.family == "iid_uniform":
        return stream.uniform(p["a"], p["b"], n)
    if spec.family == "iid_pareto":
        return p["x_min"] * (1.0 + stream.pareto(p["alpha"], n))
    return math.sqrt(autocovariance(spec, 0)) * stream.standard_normal(n)


# --- Theorem checks ---

@dataclass(frozen=True)
class Applicability:
    applicable: bool
    case: str
    threshold: float
    binding: str


def _as_fraction(x: float) -> Fraction:
    return Fraction(repr(float(x)))


def mixing_threshold(m: int, p: float) -> float:
    """Returns m*p/(p-2), the smallest admissible polynomial mixing exponent (inf for p <= 2)."""
    if p <= 2:
        return math.inf
    if math.isinf(p):
        return float(m)
    p_exact = _as_fraction(p)
    return float(m * p_exact / (p_exact - 2))


def theorem_applicability(spec: ProcessSpec, kernel) -> Applicability:
    """
    Checks whether the data/kernel pair satisfies one of the two sufficient assumptions.

    Case 1 needs i.i.d. data and p >= 2. Case 2 needs p > 2 and a mixing
    exponent r strictly above m*p/(p-2). Only the growth order of beta(n) is
    compared; constants are unconstrained.
    """
    m, p = kernel.degree, kernel.moment_order
    threshold = mixing_threshold(m, p)
    if spec.is_iid:
        applicable = p >= 2
        binding = f"i.i.d. with p = {p:g} {'>=' if applicable else '<'} 2"
        return Applicability(applicable, "iid", threshold, binding)
    r = spec.r_exponent
    applicable = p > 2 and r > threshold
    if p <= 2:
        binding = f"mixing data need p > 2, have p = {p:g}"
    else:
        binding = f"r = {r:g} {'>' if applicable else '<='} m*p/(p-2) = {threshold:g}"
    return Applicability(applicable, "mixing", threshold, binding)


def long_run_variance_analytic(spec: ProcessSpec, kernel) -> Optional[float]:
    """
    Closed-form m^2 * (gamma_0 + 2 * sum_k gamma_k) of the series h1(X_k).

    Registered cases: any h1 with known variance on i.i.d. data, and h1 of the
    form c1*(x - mu) + c2*((x - mu)^2 - sigma^2) on Gaussian AR(1) and MA(q)
    data, where Cov(X_0^2, X_k^2) = 2*gamma_k^2. Returns None otherwise.
    """
    analytic = kernel.analytic
    if analytic is None:
        return None
    m = kernel.degree
    if spec.family in IID_FAMILIES and spec.beta_override is None:
        if analytic.var_h1 is None:
            return None
        return m ** 2 * analytic.var_h1
    if spec.family not in GAUSSIAN_LINEAR_FAMILIES or analytic.h1_poly is None:
        return None

    c1, c2 = analytic.h1_poly
    gamma0 = autocovariance(spec, 0)
    if spec.family == "ar1_gaussian":
        phi = spec.params["phi"]
        sum_gamma = gamma0 * (1 + phi) / (1 - phi)
        sum_gamma_sq = gamma0 ** 2 * (1 + phi ** 2) / (1 - phi ** 2)
    else:
        q = len(spec.params["coefficients"]) - 1
        gammas = np.array([autocovariance(spec, k) for k in range(q + 1)])
        sum_gamma = gammas[0] + 2 * gammas[1:].sum()
        sum_gamma_sq = gammas[0] ** 2 + 2 * (gammas[1:] ** 2).sum()
    return float(m ** 2 * (c1 ** 2 * sum_gamma + 2 * c2 ** 2 * sum_gamma_sq))
