"""
Special Functions

Normal CDF/quantile, the chi-squared tail with 4 degrees of freedom, the
Irwin-Hall CDF and the trapezoidal CDF of a weighted sum of two uniforms.

Every function accepts a float or a numpy array and returns the same shape.
All functions are pure.
"""

from typing import Union
import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri

from .errors import DomainError, NumericalError

FloatOrArray = Union[float, np.ndarray]

IRWIN_HALL_MAX_N = 10


def _as_output(values: np.ndarray, like) -> FloatOrArray:
    return float(values) if np.ndim(like) == 0 else values


def _require_finite(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _require_open_unit(p, name: str) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError(f"{name} must lie strictly between 0 and 1")
    return arr


def norm_cdf(x: FloatOrArray) -> FloatOrArray:
    """Standard normal CDF."""
    arr = _require_finite(x, "x")
    return _as_output(np.clip(ndtr(arr), 0.0, 1.0), x)


def norm_sf(x: FloatOrArray) -> FloatOrArray:
    """Standard normal upper tail 1 - Phi(x), accurate for large x."""
    arr = _require_finite(x, "x")
    return _as_output(np.clip(ndtr(-arr), 0.0, 1.0), x)


def norm_quantile(p: FloatOrArray) -> FloatOrArray:
    """Standard normal quantile Phi^{-1}(p) for 0 < p < 1."""
    arr = _require_open_unit(p, "p")
    return _as_output(ndtri(arr), p)


def norm_isf(p: FloatOrArray) -> FloatOrArray:
    """Upper-tail quantile Phi^{-1}(1 - p), accurate for small p."""
    arr = _require_open_unit(p, "p")
    return _as_output(-ndtri(arr), p)


def norm_pdf(x: FloatOrArray) -> FloatOrArray:
    arr = _require_finite(x, "x")
    return _as_output(np.exp(-0.5 * arr * arr) / math.sqrt(2.0 * math.pi), x)


def chisq4_tail(x: FloatOrArray) -> FloatOrArray:
    """Upper tail of the chi-squared distribution with 4 df: exp(-x/2)(1 + x/2)."""
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("chi-squared statistic must be non-negative")
    with np.errstate(over="ignore", invalid="ignore"):
        tail = np.where(np.isinf(arr), 0.0, np.exp(-0.5 * arr) * (1.0 + 0.5 * arr))
    return _as_output(np.clip(tail, 0.0, 1.0), x)


def chisq4_quantile(prob: float) -> float:
    """Quantile of the chi-squared distribution with 4 df."""
    if not 0.0 < prob < 1.0:
        raise DomainError("prob must lie strictly between 0 and 1")
    return _chisq4_upper_quantile(math.log1p(-prob))


def _chisq4_upper_quantile(log_target: float) -> float:
    # solves log chisq4_tail(x) = log_target by bracketing
    def gap(x: float) -> float:
        return -0.5 * x + math.log1p(0.5 * x) - log_target

    upper = 1.0
    while gap(upper) > 0:
        upper *= 2.0
        if upper > 1e6:
            raise NumericalError("chi-squared quantile could not be bracketed", {"log_tail": log_target})
    return brentq(gap, 0.0, upper, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)


def fisher_critical(alpha: float) -> float:
    """
    Largest product po*pr giving success with Fisher's method at level alpha^2.

    c_F = exp(-x/2) where x is the (1 - alpha^2) quantile of chi-squared(4).
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie strictly between 0 and 1")
    return math.exp(-0.5 * _chisq4_upper_quantile(2.0 * math.log(alpha)))


def irwin_hall_cdf(x: FloatOrArray, n: int) -> FloatOrArray:
    """
    CDF of the sum of n independent standard uniforms.

    Alternating sum (1/n!) sum_{j <= floor(x)} (-1)^j C(n, j) (x - j)^n,
    clamped to [0, 1]. n is limited to 10 because cancellation grows with n.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if n > IRWIN_HALL_MAX_N:
        raise DomainError(f"n > {IRWIN_HALL_MAX_N} is not supported")
    n = int(n)
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("x must not be NaN")

    clipped = np.clip(arr, 0.0, float(n))
    terms = np.stack([
        np.where(clipped > j, (-1.0) ** j * math.comb(n, j) * np.maximum(clipped - j, 0.0) ** n, 0.0)
        for j in range(n + 1)
    ])
    cdf = np.sum(terms, axis=0) / math.factorial(n)
    cdf = np.where(arr <= 0.0, 0.0, np.where(arr >= n, 1.0, cdf))
    return _as_output(np.clip(cdf, 0.0, 1.0), x)


def trapezoid_cdf(x: FloatOrArray, wo: float, wr: float) -> FloatOrArray:
    """
    CDF of wo*U1 + wr*U2 for independent standard uniforms and 0 < wo <= wr.

    Quadratic on (0, wo], linear on (wo, wr], quadratic on (wr, wo + wr].
    """
    if not (math.isfinite(wo) and math.isfinite(wr)) or wo <= 0 or wr <= 0:
        raise DomainError("weights must be positive and finite")
    if wo > wr:
        raise DomainError(f"weights must satisfy wo <= wr, got wo={wo}, wr={wr}")
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("x must not be NaN")

    total = wo + wr
    prod = wo * wr
    e = np.clip(arr, 0.0, total)
    rising = e * e / (2.0 * prod)
    flat = (e - 0.5 * wo) / wr
    falling = 1.0 - (total - e) ** 2 / (2.0 * prod)
    cdf = np.where(e <= wo, rising, np.where(e <= wr, flat, falling))
    return _as_output(np.clip(cdf, 0.0, 1.0), x)
