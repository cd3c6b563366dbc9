import math

import numpy as np
import pytest

from ustatlab import kernels, processes
from ustatlab.errors import ProcessSpecError
from ustatlab.processes import (
    BetaRate,
    autocovariance,
    long_run_variance_analytic,
    make_process,
    marginal_sample,
    mixing_threshold,
    sample_path,
    theorem_applicability,
)
from ustatlab.rng import stream


def lag_autocovariance(x, lag):
    y = x - x.mean()
    return float(np.mean(y[:-lag] * y[lag:]))


def test_iid_normal_path_is_uncorrelated(normal):
    n = 100_000
    x = sample_path(normal, n, stream(1, 0, "path", n))
    assert abs(lag_autocovariance(x, 1) / x.var()) < 4 / math.sqrt(n)


def test_ar1_stationary_variance(ar1):
    n = 100_000
    x = sample_path(ar1, n, stream(2, 0, "path", n))
    assert x.var() == pytest.approx(4 / 3, rel=0.05)


def test_ar1_autocovariance_closed_form(ar1):
    assert autocovariance(ar1, 0) == pytest.approx(4 / 3)
    assert autocovariance(ar1, 3) == pytest.approx(0.125 * 4 / 3)
    assert autocovariance(ar1, -2) == autocovariance(ar1, 2)


def test_ma_with_single_lead_coefficient_is_iid_innovations():
    spec = make_process("ma_q_gaussian", coefficients=[1.0, 0.0, 0.0], sigma_eps=2.0)
    x = sample_path(spec, 50, stream(3, 0, "path", 50))
    innovations = 2.0 * stream(3, 0, "path", 50).standard_normal(52)
    assert np.array_equal(x, innovations[2:])
    assert spec.beta_rate.kind == "m_dependent"


def test_ma_is_q_dependent():
    spec = make_process("ma_q_gaussian", coefficients=[1.0, 0.5, 0.25])
    n = 100_000
    x = sample_path(spec, n, stream(4, 0, "path", n))
    gamma0 = autocovariance(spec, 0)
    assert autocovariance(spec, 3) == 0.0
    assert abs(lag_autocovariance(x, 3)) < 4 / math.sqrt(n) * gamma0
    assert lag_autocovariance(x, 1) == pytest.approx(autocovariance(spec, 1), abs=0.03)


def test_ar1_stays_stationary_along_the_path(ar1):
    reps, n = 10_000, 40
    paths = np.array([sample_path(ar1, n, stream(5, r, "path", n)) for r in range(reps)])
    first, middle = paths[:, 0], paths[:, n // 2]
    se_first = np.std(first ** 2) / math.sqrt(reps)
    se_middle = np.std(middle ** 2) / math.sqrt(reps)
    assert abs(first.var() - middle.var()) < 4 * math.hypot(se_first, se_middle)


def test_paths_are_reproducible(ar1):
    a = sample_path(ar1, 500, stream(6, 1, "path", 500))
    b = sample_path(ar1, 500, stream(6, 1, "path", 500))
    assert np.array_equal(a, b)


def test_single_point_ar1_path(ar1):
    assert sample_path(ar1, 1, stream(6, 0, "path", 1)).shape == (1,)


def test_marginal_samples(ar1, uniform, normal):
    n = 100_000
    x = marginal_sample(ar1, n, stream(7, 0, "oracle"))
    assert x.var() == pytest.approx(4 / 3, rel=0.03)
    assert abs(lag_autocovariance(x, 1)) < 4 * (4 / 3) / math.sqrt(n)
    u = marginal_sample(uniform, n, stream(7, 1, "oracle"))
    assert u.min() >= 0.0 and u.max() < 1.0
    z = marginal_sample(normal, n, stream(7, 2, "oracle"))
    assert abs(z.mean()) < 4 / math.sqrt(n)


def test_pareto_marginal_moments():
    spec = make_process("iid_pareto", alpha=5.0, x_min=1.0)
    moments = spec.marginal_moments
    assert moments["mean"] == pytest.approx(1.25)
    assert moments["variance"] == pytest.approx(5 / 3 - 1.25 ** 2)
    assert moments["fourth_central"] is not None
    assert make_process("iid_pareto", alpha=3.0).marginal_moments["fourth_central"] is None
    x = marginal_sample(spec, 200_000, stream(8, 0, "oracle"))
    assert x.min() >= 1.0
    assert x.mean() == pytest.approx(1.25, rel=0.01)


@pytest.mark.parametrize("family,params", [
    ("ar1_gaussian", {"phi": 1.0}),
    ("iid_pareto", {"alpha": 2.0}),
    ("iid_uniform", {"a": 1.0, "b": 1.0}),
    ("iid_normal", {"sigma": 0.0}),
    ("ma_q_gaussian", {"coefficients": [0.0, 0.0]}),
    ("iid_normal", {"phi": 0.3}),
    ("garch", {}),
])
def test_invalid_specs(family, params):
    with pytest.raises(ProcessSpecError):
        make_process(family, **params)


def test_beta_rates():
    assert make_process("iid_normal").beta_rate.kind == "exact_zero"
    assert make_process("ar1_gaussian", phi=0.3).beta_rate == BetaRate("geometric", 0.3)
    assert make_process("ar1_gaussian").r_exponent == math.inf
    declared = make_process("ar1_gaussian", beta_override=BetaRate("polynomial", 3.0))
    assert declared.r_exponent == 3.0
    assert not make_process("iid_normal", beta_override=BetaRate("polynomial", 3.0)).is_iid


def test_mixing_threshold_is_exact():
    assert mixing_threshold(2, 4.0) == 4.0
    assert mixing_threshold(2, 2.1) == 42.0
    assert mixing_threshold(3, 3.0) == 9.0
    assert mixing_threshold(2, 2.0) == math.inf
    assert mixing_threshold(2, math.inf) == 2.0


def test_geometric_mixing_applies(ar1):
    verdict = theorem_applicability(ar1, kernels.get_kernel("variance", reference=ar1, moment_order=4.0))
    assert verdict.applicable
    assert verdict.case == "mixing"
    assert verdict.threshold == 4.0


@pytest.mark.parametrize("p", [2.01, 2.5, 3.0, 8.0])
def test_geometric_mixing_always_passes_above_two(ar1, p):
    kernel = kernels.get_kernel("triple", reference=ar1, moment_order=p)
    assert theorem_applicability(ar1, kernel).applicable


def test_slow_polynomial_mixing_fails():
    spec = make_process("ar1_gaussian", beta_override=BetaRate("polynomial", 10.0))
    verdict = theorem_applicability(spec, kernels.get_kernel("variance", moment_order=2.1))
    assert not verdict.applicable
    assert verdict.threshold == 42.0
    assert "42" in verdict.binding


def test_iid_with_two_moments_applies(normal):
    verdict = theorem_applicability(normal, kernels.get_kernel("variance", moment_order=2.0))
    assert verdict.applicable
    assert verdict.case == "iid"


def test_heavy_tails_fail_the_moment_condition():
    pareto = make_process("iid_pareto", alpha=2.5)
    assert not theorem_applicability(pareto, kernels.get_kernel("variance", reference=pareto)).applicable


def test_long_run_variance_closed_forms(normal, uniform, ar1):
    assert long_run_variance_analytic(ar1, kernels.get_kernel("mean", reference=ar1)) == pytest.approx(4.0)
    assert long_run_variance_analytic(normal, kernels.get_kernel("variance", reference=normal)) == pytest.approx(2.0)
    assert long_run_variance_analytic(uniform, kernels.get_kernel("gini", reference=uniform)) == pytest.approx(1 / 45)


def test_long_run_variance_of_quadratic_h1_on_ma():
    spec = make_process("ma_q_gaussian", coefficients=[1.0, 1.0])
    # gamma_0 = 2, gamma_1 = 1: 4 * 2 * (1/2)^2 * (4 + 2 * 1)
    value = long_run_variance_analytic(spec, kernels.get_kernel("variance", reference=spec))
    assert value == pytest.approx(12.0)


def test_long_run_variance_without_closed_form():
    pareto = make_process("iid_pareto", alpha=3.0)
    assert long_run_variance_analytic(pareto, kernels.get_kernel("gini", reference=pareto)) is None
    assert long_run_variance_analytic(pareto, kernels.get_kernel("variance", reference=pareto)) is None
    assert long_run_variance_analytic(pareto, kernels.get_kernel("mean")) is None
