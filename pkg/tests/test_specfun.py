import math

import numpy as np
import pytest

from src.errors import DomainError
from src.sim import block_generator
from src.specfun import (
    chisq4_quantile,
    chisq4_tail,
    fisher_critical,
    irwin_hall_cdf,
    norm_cdf,
    norm_isf,
    norm_quantile,
    norm_sf,
    trapezoid_cdf,
)


def test_norm_cdf_reference_values():
    assert norm_cdf(0.0) == pytest.approx(0.5, abs=1e-15)
    assert norm_cdf(1.959964) == pytest.approx(0.975, abs=1e-6)


def test_norm_sf_keeps_precision_in_the_tail():
    assert norm_sf(10.0) == pytest.approx(7.619853024160527e-24, rel=1e-6)
    assert norm_sf(-40.0) == 1.0


def test_quantiles_invert_cdf():
    p = np.array([1e-12, 0.001, 0.025, 0.5, 0.8, 0.999])
    assert np.allclose(norm_cdf(norm_quantile(p)), p, rtol=1e-10)
    assert np.allclose(norm_sf(norm_isf(p)), p, rtol=1e-10)
    assert norm_isf(0.025) == pytest.approx(1.959964, abs=1e-6)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, math.nan])
def test_quantile_rejects_values_outside_open_unit_interval(p):
    with pytest.raises(DomainError):
        norm_quantile(p)


def test_scalar_in_scalar_out():
    assert isinstance(norm_cdf(0.3), float)
    assert isinstance(norm_cdf(np.array([0.3])), np.ndarray)


def test_chisq4_tail_closed_form():
    x = 7.3
    assert chisq4_tail(x) == pytest.approx(math.exp(-x / 2) * (1 + x / 2), rel=1e-14)
    assert chisq4_tail(0.0) == 1.0
    assert chisq4_tail(math.inf) == 0.0
    with pytest.raises(DomainError):
        chisq4_tail(-1.0)


def test_chisq4_quantile_inverts_tail():
    x = chisq4_quantile(0.95)
    assert chisq4_tail(x) == pytest.approx(0.05, rel=1e-10)


def test_fisher_critical_value():
    c_f = fisher_critical(0.025)
    assert c_f == pytest.approx(5.81e-5, abs=2e-7)
    # product at the critical value sits exactly on the overall level
    assert c_f * (1 - math.log(c_f)) == pytest.approx(0.025**2, rel=1e-9)


def test_irwin_hall_two_uniforms():
    assert irwin_hall_cdf(0.027, 2) == pytest.approx(0.0003645, rel=1e-12)
    assert irwin_hall_cdf(1.5, 2) == pytest.approx(1 - 0.5**2 / 2)
    assert irwin_hall_cdf(-1.0, 2) == 0.0
    assert irwin_hall_cdf(2.5, 2) == 1.0


def test_irwin_hall_three_uniforms():
    assert irwin_hall_cdf(0.155, 3) == pytest.approx(0.155**3 / 6, abs=1e-12)
    assert irwin_hall_cdf(1.5, 3) == pytest.approx(0.5, abs=1e-12)


def test_irwin_hall_is_monotone():
    x = np.linspace(0, 4, 401)
    values = irwin_hall_cdf(x, 4)
    assert np.all(np.diff(values) >= 0)
    assert values[0] == 0.0 and values[-1] == 1.0


@pytest.mark.parametrize("n", [0, 11, 2.5])
def test_irwin_hall_rejects_unsupported_n(n):
    with pytest.raises(DomainError):
        irwin_hall_cdf(0.5, n)


def test_trapezoid_cdf_branches():
    assert trapezoid_cdf(0.05, 1, 2) == pytest.approx(0.05**2 / 4)
    assert trapezoid_cdf(1.5, 1, 2) == pytest.approx((1.5 - 0.5) / 2)
    assert trapezoid_cdf(2.5, 1, 2) == pytest.approx(1 - 0.5**2 / 4)
    assert trapezoid_cdf(3.5, 1, 2) == 1.0


def test_trapezoid_cdf_equal_weights_matches_irwin_hall():
    x = np.linspace(0, 2, 41)
    assert np.allclose(trapezoid_cdf(x, 1, 1), irwin_hall_cdf(x, 2))


def test_trapezoid_cdf_rejects_bad_weights():
    with pytest.raises(DomainError):
        trapezoid_cdf(0.5, 2, 1)
    with pytest.raises(DomainError):
        trapezoid_cdf(0.5, 0, 1)


def kolmogorov_distance(samples, cdf):
    x = np.sort(samples)
    n = len(x)
    f = cdf(x)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(0, n) / n
    return max(upper.max(), lower.max())


@pytest.mark.parametrize("wo, wr", [(1.0, 2.0), (1.0, 1.0), (0.5, 3.0)])
def test_trapezoid_cdf_matches_simulated_weighted_sums(wo, wr):
    u = block_generator(17, 0).random((2, 10**6))
    sums = wo * u[0] + wr * u[1]
    assert kolmogorov_distance(sums, lambda x: trapezoid_cdf(x, wo, wr)) < 0.002


@pytest.mark.parametrize("n", [2, 3])
def test_irwin_hall_matches_simulated_sums(n):
    sums = block_generator(18, 0).random((n, 10**6)).sum(axis=0)
    assert kolmogorov_distance(sums, lambda x: irwin_hall_cdf(x, n)) < 0.002
