"""Analytic and numerical quantities derived from an excitation kernel.

Exponential kernels get closed forms everywhere; tabulated kernels use the
composite trapezoid rule on their own grid. The n = 0 convolution power is the
Dirac mass at 0; it is never sampled, integral-form functions add its
contribution analytically.
"""
import logging
import math
from typing import Optional, Union

import numpy as np
from scipy import integrate, optimize, special

from ..errors import ConvergenceError, DomainError, KernelError, RegimeError
from ..models.kernel import ExponentialKernel, Kernel, KernelMoments, TabulatedKernel

logger = logging.getLogger(__name__)

SERIES_RTOL = 1e-14
SERIES_MAX_TERMS = 10_000
ROOT_RESIDUAL = 1e-10
TAIL_SHARE = 1e-3


def total_mass(kernel: Kernel) -> float:
    """Lambda, the integral of phi over [0, inf)."""
    if isinstance(kernel, ExponentialKernel):
        return kernel.a / kernel.b
    mass = float(integrate.trapezoid(kernel.values, kernel.grid))
    if mass <= 0:
        raise KernelError("tabulated kernel has zero mass")
    return mass


def mean_delay(kernel: Kernel) -> float:
    """kappa = Lambda^-1 * integral of s phi(s) ds."""
    if isinstance(kernel, ExponentialKernel):
        return 1.0 / kernel.b
    moment_density = kernel.grid * kernel.values
    first = float(integrate.trapezoid(moment_density, kernel.grid))
    start = int(0.9 * kernel.grid.size)
    tail = float(integrate.trapezoid(moment_density[start:], kernel.grid[start:]))
    if first <= 0 or tail > TAIL_SHARE * first:
        raise KernelError(
            f"first moment does not settle over the grid: last decile carries "
            f"{tail:.3g} of {first:.3g}"
        )
    return first / total_mass(kernel)


def laplace(kernel: Kernel, alpha: float) -> float:
    """Integral of exp(-alpha t) phi(t) dt."""
    if isinstance(kernel, ExponentialKernel):
        return kernel.a / (kernel.b + alpha)
    return float(
        integrate.trapezoid(np.exp(-alpha * kernel.grid) * kernel.values, kernel.grid)
    )


def growth_exponent(kernel: Kernel, p: float) -> float:
    """alpha_0 > 0 solving p * laplace(kernel, alpha_0) = 1; needs p Lambda > 1."""
    mass = total_mass(kernel)
    if p * mass <= 1:
        raise RegimeError(f"p * Lambda = {p * mass:.6g} <= 1: no positive growth exponent")
    if isinstance(kernel, ExponentialKernel):
        return p * kernel.a - kernel.b

    def excess(alpha: float) -> float:
        return p * laplace(kernel, alpha) - 1.0

    lo = 1e-6
    while excess(lo) <= 0:
        lo /= 10.0
        if lo < 1e-300:
            raise ConvergenceError("could not bracket the growth exponent from below")
    hi = max(p * float(kernel.values.max()), 2 * lo)
    while excess(hi) >= 0:
        hi *= 2.0
    alpha0 = optimize.brentq(excess, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    residual = abs(excess(alpha0))
    logger.debug(f"growth exponent {alpha0:.12g} found in [{lo:.3g}, {hi:.3g}]")
    if residual >= ROOT_RESIDUAL:
        raise ConvergenceError(f"growth exponent residual {residual:.3g} too large")
    return float(alpha0)


def kernel_moments(kernel: Kernel, p: Optional[float] = None) -> KernelMoments:
    mass = total_mass(kernel)
    alpha0 = None
    if p is not None and p * mass > 1:
        alpha0 = growth_exponent(kernel, p)
    return KernelMoments(
        total_mass=mass, mean_delay=mean_delay(kernel), growth_exponent=alpha0, p=p
    )


def _tabulated_power(kernel: TabulatedKernel, n: int) -> np.ndarray:
    """phi^{*n} sampled on the kernel grid by iterated trapezoid convolution."""
    step = kernel.step
    if step is None or kernel.grid[0] != 0:
        raise KernelError("convolution powers need a uniform grid starting at 0")
    base = np.asarray(kernel.values)
    power = base.copy()
    for _ in range(n - 1):
        power = _convolve_once(step, power, base)
    return power


def convolution_power(
    kernel: Kernel, n: int, t: Union[float, np.ndarray]
) -> Union[float, np.ndarray]:
    """phi^{*n}(t) for n >= 1."""
    if n < 1:
        raise DomainError("phi^{*0} is a Dirac mass and has no pointwise value")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("convolution powers are evaluated at t >= 0")
    if isinstance(kernel, ExponentialKernel):
        log_coeff = n * math.log(kernel.a) - math.lgamma(n)
        value = np.exp(log_coeff - kernel.b * t_arr) * t_arr ** (n - 1)
    else:
        value = np.interp(t_arr, kernel.grid, _tabulated_power(kernel, n), right=0.0)
    return float(value) if np.ndim(value) == 0 else value


def delay_integral(kernel: Kernel, n: int, t: float) -> float:
    """Integral over [0, t] of s phi^{*n}(t - s) ds; equals t when n = 0."""
    if n < 0 or t < 0:
        raise DomainError("delay_integral needs n >= 0 and t >= 0")
    if n == 0:
        return float(t)
    if isinstance(kernel, ExponentialKernel):
        a, b = kernel.a, kernel.b
        return float(
            (a / b) ** n
            * (t * special.gammainc(n, b * t) - (n / b) * special.gammainc(n + 1, b * t))
        )
    inner = kernel.grid[kernel.grid < t]
    u = np.append(inner, t)
    values = np.interp(u, kernel.grid, _tabulated_power(kernel, n), right=0.0)
    return float(integrate.trapezoid((t - u) * values, u))


def weighted_series(kernel: Kernel, rho: float, t: float, truncate: bool = False) -> float:
    """Sum over n >= 1 of rho^n phi^{*n}(t).

    The exponential kernel has the closed form rho a exp(-(b - rho a) t);
    ``truncate=True`` sums the series instead, stopping once a term past the
    peak falls below 1e-14 of the running sum.
    """
    if t < 0:
        raise DomainError("weighted_series is evaluated at t >= 0")
    if isinstance(kernel, ExponentialKernel) and not truncate:
        return rho * kernel.a * math.exp(-(kernel.b - rho * kernel.a) * t)

    if isinstance(kernel, ExponentialKernel):
        growth = rho * kernel.a * t
        term = rho * kernel.a * math.exp(-kernel.b * t)
        total = term
        for n in range(1, SERIES_MAX_TERMS):
            term *= growth / n
            total += term
            if term == 0 or (n > growth and abs(term) < SERIES_RTOL * abs(total)):
                return total
        raise ConvergenceError(f"series did not settle after {SERIES_MAX_TERMS} terms")

    base = _tabulated_power(kernel, 1)
    step = kernel.step
    assert step is not None
    power = base
    total = 0.0
    for n in range(1, SERIES_MAX_TERMS):
        if n > 1:
            power = _convolve_once(step, power, base)
        weighted = rho**n * power
        total += float(np.interp(t, kernel.grid, weighted, right=0.0))
        if float(np.max(np.abs(weighted))) < SERIES_RTOL * max(abs(total), 1e-300):
            return total
    raise ConvergenceError(f"series did not settle after {SERIES_MAX_TERMS} terms")


def _convolve_once(step: float, power: np.ndarray, base: np.ndarray) -> np.ndarray:
    """One trapezoid-rule convolution step on a uniform grid from 0."""
    full = np.convolve(power, base)[: base.size]
    full -= 0.5 * (power * base[0] + power[0] * base)
    return step * full
