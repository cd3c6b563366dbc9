import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import quad
from scipy.special import ndtr, ndtri

from ustatlab.errors import NumericError
from ustatlab.wasserstein import (
    EmpiricalDistribution,
    inverse_normal_cdf,
    w2_empirical_empirical,
    w2_empirical_gaussian,
    w2_gaussian_gaussian,
)

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
samples = st.integers(min_value=1, max_value=12).flatmap(lambda n: arrays(np.float64, n, elements=finite))


def brute_force_w2(a, b):
    """Minimum over all matchings of two equal-size samples."""
    return min(math.sqrt(np.mean((np.asarray(a) - np.asarray(perm)) ** 2))
               for perm in itertools.permutations(b))


def quadrature_w2(a, sigma):
    """Integrates (F^-1(u) - sigma Phi^-1(u))^2 cell by cell in z = Phi^-1(u)."""
    values = np.sort(a)
    n = values.size
    edges = [-np.inf] + [float(ndtri(i / n)) for i in range(1, n)] + [np.inf]
    density = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    total = 0.0
    for v, lo, hi in zip(values, edges[:-1], edges[1:]):
        total += quad(lambda z: (v - sigma * z) ** 2 * density(z), lo, hi, epsabs=1e-14, epsrel=1e-12)[0]
    return math.sqrt(total)


def test_identical_samples():
    assert w2_empirical_empirical([3.0, 1.0, 2.0], [1.0, 2.0, 3.0]) == 0.0


def test_shifted_pair():
    assert w2_empirical_empirical([1.0, 2.0], [2.0, 3.0]) == pytest.approx(1.0)


def test_unequal_sizes():
    assert w2_empirical_empirical([0.0], [0.0, 1.0]) == pytest.approx(math.sqrt(0.5))


def test_replicated_sample_has_the_same_law(rng):
    a = rng.normal(size=7)
    assert w2_empirical_empirical(a, np.repeat(a, 3)) == 0.0


def test_matches_brute_force_matching(rng):
    for _ in range(200):
        n = int(rng.integers(1, 7))
        a, b = rng.normal(size=n), rng.exponential(size=n)
        assert w2_empirical_empirical(a, b) == pytest.approx(brute_force_w2(a, b), abs=1e-12)


@given(samples, samples)
def test_symmetric(a, b):
    assert w2_empirical_empirical(a, b) == w2_empirical_empirical(b, a)


@given(samples, samples, samples)
def test_triangle_inequality(a, b, c):
    ab, bc, ac = (w2_empirical_empirical(a, b), w2_empirical_empirical(b, c), w2_empirical_empirical(a, c))
    assert ac <= ab + bc + 1e-10 * (1.0 + ab + bc)


@given(samples, samples, st.floats(min_value=-10, max_value=10).filter(lambda c: abs(c) > 1e-3))
def test_homogeneous(a, b, c):
    scaled = w2_empirical_empirical(c * a, c * b)
    assert scaled == pytest.approx(abs(c) * w2_empirical_empirical(a, b), rel=1e-9, abs=1e-9)


def test_zero_sample_against_standard_normal():
    assert w2_empirical_gaussian(np.zeros(50), 1.0) == pytest.approx(1.0, abs=1e-12)
    assert w2_empirical_gaussian([0.0], 2.5) == pytest.approx(2.5, abs=1e-12)


def test_large_normal_sample_is_close(rng):
    assert w2_empirical_gaussian(rng.normal(size=1_000_000), 1.0) < 0.01


def test_gaussian_distance_matches_quadrature(rng):
    for _ in range(100):
        n = int(rng.integers(1, 30))
        sigma = float(rng.uniform(0.2, 3.0))
        a = rng.normal(scale=2.0, size=n)
        assert w2_empirical_gaussian(a, sigma) == pytest.approx(quadrature_w2(a, sigma), abs=1e-6)


@settings(max_examples=50)
@given(samples, st.floats(min_value=0.1, max_value=10))
def test_gelbrich_bounds(a, sigma):
    d2 = w2_empirical_gaussian(a, sigma)
    mean, sd = float(np.mean(a)), float(np.std(a))
    rms = math.sqrt(float(np.mean(a ** 2)))
    slack = 1e-9 * (1.0 + d2 ** 2)
    assert mean ** 2 + (sd - sigma) ** 2 <= d2 ** 2 + slack
    assert (rms - sigma) ** 2 <= d2 ** 2 + slack


def test_inverse_normal_cdf_accuracy():
    u = np.concatenate([np.logspace(-12, -1, 200), np.linspace(0.01, 0.99, 300), 1 - np.logspace(-12, -1, 200)])
    x = inverse_normal_cdf(u)
    assert np.allclose(x, ndtri(u), rtol=1e-9, atol=1e-12)
    assert np.allclose(ndtr(x), u, rtol=1e-9, atol=1e-15)


def test_inverse_normal_cdf_symmetry():
    assert inverse_normal_cdf(0.5) == 0.0
    u = np.arange(1, 32) / 64
    assert np.array_equal(inverse_normal_cdf(1 - u), -inverse_normal_cdf(u))
    assert isinstance(inverse_normal_cdf(0.25), float)


@pytest.mark.parametrize("u", [0.0, 1.0, -0.5, 2.0, float("nan")])
def test_inverse_normal_cdf_domain(u):
    with pytest.raises(NumericError):
        inverse_normal_cdf(u)


def test_invalid_inputs():
    with pytest.raises(NumericError):
        EmpiricalDistribution.from_sample([])
    with pytest.raises(NumericError, match="sorted"):
        EmpiricalDistribution(np.array([2.0, 1.0]))
    with pytest.raises(NumericError):
        w2_empirical_gaussian([1.0, 2.0], 0.0)
    with pytest.raises(NumericError):
        w2_gaussian_gaussian(-1.0, 1.0)


def test_empirical_quantile_is_left_continuous():
    dist = EmpiricalDistribution.from_sample([3.0, 1.0, 2.0, 4.0])
    assert list(dist.quantile([0.1, 0.25, 0.26, 0.5, 1.0])) == [1.0, 1.0, 2.0, 2.0, 4.0]
    assert dist.mean_square == pytest.approx(7.5)


def test_gaussian_to_gaussian():
    assert w2_gaussian_gaussian(1.0, 3.0) == 2.0
