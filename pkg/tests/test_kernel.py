import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import integrate

from hawkes_density.errors import DomainError, KernelError, RegimeError
from hawkes_density.models import ExponentialKernel, TabulatedKernel
from hawkes_density.services.kernel import (
    convolution_power,
    delay_integral,
    growth_exponent,
    kernel_moments,
    laplace,
    mean_delay,
    total_mass,
    weighted_series,
)


@pytest.fixture
def exp_table():
    """phi(t) = 2 exp(-t) sampled every 0.01 on [0, 30]."""
    grid = np.linspace(0.0, 30.0, 3001)
    return TabulatedKernel(grid=grid, values=2.0 * np.exp(-grid))


@pytest.fixture
def short_exp_table():
    grid = np.linspace(0.0, 10.0, 1001)
    return TabulatedKernel(grid=grid, values=2.0 * np.exp(-grid))


def test_exponential_closed_forms(exp_kernel):
    """Test Lambda, kappa and the Laplace transform of a exp(-b t)."""
    assert total_mass(exp_kernel) == 2.0
    assert mean_delay(exp_kernel) == 1.0
    assert laplace(exp_kernel, 1.0) == pytest.approx(1.0)
    assert exp_kernel(-1.0) == 0.0
    assert exp_kernel(0.0) == 2.0


def test_growth_exponent_exponential(exp_kernel):
    assert growth_exponent(exp_kernel, 0.85) == pytest.approx(0.7, abs=1e-12)


def test_growth_exponent_needs_supercritical(exp_kernel):
    with pytest.raises(RegimeError):
        growth_exponent(exp_kernel, 0.35)
    with pytest.raises(RegimeError):
        growth_exponent(exp_kernel, 0.5)


def test_tabulated_moments_match_exponential(exp_table):
    """Trapezoid quadrature on a fine grid reproduces the closed forms."""
    assert total_mass(exp_table) == pytest.approx(2.0, rel=1e-4)
    assert mean_delay(exp_table) == pytest.approx(1.0, rel=1e-4)
    alpha0 = growth_exponent(exp_table, 0.85)
    assert alpha0 == pytest.approx(0.7, abs=1e-3)
    assert abs(0.85 * laplace(exp_table, alpha0) - 1.0) < 1e-10


def test_kernel_moments(exp_kernel):
    moments = kernel_moments(exp_kernel, 0.85)
    assert moments.total_mass == 2.0
    assert moments.mean_delay == 1.0
    assert moments.growth_exponent == pytest.approx(0.7)
    assert kernel_moments(exp_kernel, 0.35).growth_exponent is None


def test_convolution_power_closed_form(exp_kernel):
    assert convolution_power(exp_kernel, 1, 0.5) == pytest.approx(2.0 * math.exp(-0.5))
    assert convolution_power(exp_kernel, 2, 1.0) == pytest.approx(4.0 * math.exp(-1.0))
    values = convolution_power(exp_kernel, 3, np.array([0.0, 1.0]))
    assert values[0] == 0.0
    assert values[1] == pytest.approx(8.0 * math.exp(-1.0) / 2.0)


def test_convolution_power_zero_is_rejected(exp_kernel):
    with pytest.raises(DomainError):
        convolution_power(exp_kernel, 0, 1.0)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_convolution_power_mass(exp_kernel, n):
    """Integral of phi^{*n} equals Lambda^n."""
    mass, _ = integrate.quad(lambda s: convolution_power(exp_kernel, n, s), 0, np.inf)
    assert mass == pytest.approx(2.0**n, rel=1e-6)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0, 5.0])
@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_convolution_semigroup(exp_kernel, m, n, t):
    """phi^{*m} convolved with phi^{*n} is phi^{*(m+n)}."""

    def integrand(s):
        return convolution_power(exp_kernel, m, t - s) * convolution_power(exp_kernel, n, s)

    value, _ = integrate.quad(integrand, 0, t)
    expected = convolution_power(exp_kernel, m + n, t)
    assert value == pytest.approx(expected, rel=1e-6, abs=1e-12)


def test_tabulated_convolution_power(exp_table):
    for t in (1.0, 2.0, 5.0):
        expected = 4.0 * t * math.exp(-t)
        assert convolution_power(exp_table, 2, t) == pytest.approx(expected, rel=1e-3)


def test_tabulated_power_needs_uniform_grid():
    kernel = TabulatedKernel(grid=[0.0, 1.0, 3.0], values=[1.0, 0.5, 0.1])
    assert kernel.step is None
    with pytest.raises(KernelError):
        convolution_power(kernel, 2, 1.0)


def test_delay_integral_dirac_convention(exp_kernel):
    assert delay_integral(exp_kernel, 0, 3.5) == 3.5


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_delay_integral_matches_quadrature(exp_kernel, n):
    t = 3.0
    expected, _ = integrate.quad(
        lambda s: s * convolution_power(exp_kernel, n, t - s), 0, t
    )
    assert delay_integral(exp_kernel, n, t) == pytest.approx(expected, rel=1e-8)


def test_delay_integral_error_bounds(exp_kernel):
    """0 <= Lambda^n t - int_0^t s phi^{*n}(t-s) ds <= n Lambda^n kappa."""
    lam, kappa = 2.0, 1.0
    for n in range(1, 6):
        for t in np.linspace(0.1, 30.0, 50):
            eps = lam**n * t - delay_integral(exp_kernel, n, float(t))
            assert -1e-9 <= eps <= n * lam**n * kappa + 1e-9


def test_weighted_series_truncation_matches_closed_form(exp_kernel):
    closed = weighted_series(exp_kernel, 0.3, 2.0)
    assert closed == pytest.approx(0.6 * math.exp(-0.8))
    assert weighted_series(exp_kernel, 0.3, 2.0, truncate=True) == pytest.approx(
        closed, rel=1e-12
    )
    assert weighted_series(exp_kernel, 0.0, 2.0, truncate=True) == 0.0


@pytest.mark.parametrize(
    "rho, t, expected",
    [(0.35, 0.0, 0.7), (0.5, 3.0, 1.0), (0.85, 2.0, 1.7 * math.exp(1.4))],
)
def test_weighted_series_examples(exp_kernel, rho, t, expected):
    assert weighted_series(exp_kernel, rho, t) == pytest.approx(expected, rel=1e-12)
    assert weighted_series(exp_kernel, rho, t, truncate=True) == pytest.approx(
        expected, rel=1e-8
    )


def test_other_closed_forms():
    assert mean_delay(ExponentialKernel(a=3.0, b=2.0)) == 0.5
    assert total_mass(ExponentialKernel(a=0.5, b=1.0)) == 0.5
    assert growth_exponent(ExponentialKernel(a=2.0, b=1.0), 0.51) == pytest.approx(0.02)


def test_weighted_series_tabulated(short_exp_table):
    expected = 0.6 * math.exp(-0.4)
    assert weighted_series(short_exp_table, 0.3, 1.0) == pytest.approx(expected, rel=2e-3)


def test_tabulated_kernel_validation():
    with pytest.raises(ValidationError):
        TabulatedKernel(grid=[0.0, 2.0, 1.0], values=[1.0, 1.0, 1.0])
    with pytest.raises(ValidationError):
        TabulatedKernel(grid=[0.0, 1.0], values=[1.0, -1.0])
    with pytest.raises(ValidationError):
        ExponentialKernel(a=0.0, b=1.0)


def test_tabulated_monotonicity(exp_table):
    assert exp_table.non_increasing
    hump = TabulatedKernel(grid=[0.0, 1.0, 2.0], values=[0.0, 1.0, 0.0])
    assert not hump.non_increasing
    assert hump(0.5) == pytest.approx(0.5)
    assert hump(3.0) == 0.0
