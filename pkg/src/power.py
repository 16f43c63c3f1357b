"""
Project Power

Probability that both studies together achieve replication success when
z_o ~ N(mu, 1) and z_r ~ N(d mu sqrt(c), 1). The two-trials rule has a
closed form; the other methods integrate the conditional success
probability over the original z-value with scipy's adaptive quadrature.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence
import logging
import math

import numpy as np
import pandas as pd
from scipy.integrate import quad

from .combine import budget, budget_weighted
from .errors import DomainError, NumericalError, UsageError
from .pydantic_models import DEFAULT_WEIGHTS, Method, PowerResult, PowerScenario, Weights
from .specfun import fisher_critical, norm_cdf, norm_isf, norm_pdf, norm_quantile, norm_sf

logger = logging.getLogger(__name__)

# Integration window around mu; the normal weight outside it is below 1e-17.
HALF_WIDTH = 8.5
QUAD_EPSABS = 1e-8
QUAD_LIMIT = 200
LEVEL_EPS = 1e-15

POWER_CURVE_COLUMNS = ["method", "c", "d", "original_power", "alpha", "project_power"]


def mu_from_original_power(original_power: float, alpha: float = 0.025) -> float:
    """Mean of the original z-value giving `original_power` at one-sided level alpha."""
    if not 0.0 < original_power < 1.0:
        raise DomainError(f"original_power must lie strictly between 0 and 1, got {original_power}")
    return norm_isf(alpha) + norm_quantile(original_power)


def _replication_success(level: float, shift: float) -> float:
    """Pr(pr <= level) when z_r ~ N(shift, 1)."""
    if level >= 1.0:
        return 1.0
    if level <= 0.0:
        return 0.0
    level = min(max(level, LEVEL_EPS), 1.0 - LEVEL_EPS)
    return norm_sf(norm_isf(level) - shift)


def _integrate(
    success: Callable[[float], float],
    lower: float,
    mu: float,
    method: Method,
    breakpoints: Sequence[float] = (),
) -> float:
    a = max(lower, mu - HALF_WIDTH)
    b = mu + HALF_WIDTH
    if a >= b:
        return 0.0

    def integrand(z: float) -> float:
        return success(z) * norm_pdf(z - mu)

    points = [p for p in breakpoints if a < p < b] or None
    result = quad(integrand, a, b, epsabs=QUAD_EPSABS, limit=QUAD_LIMIT, points=points, full_output=1)
    value, abserr = result[0], result[1]
    if len(result) > 3 and abserr > 1e3 * QUAD_EPSABS:
        raise NumericalError(
            f"Quadrature for {method.value} project power did not converge",
            {"lower": a, "upper": b, "mu": mu, "estimate": value, "abserr": abserr, "message": result[3]},
        )
    return min(max(value, 0.0), 1.0)


def project_power_two_trials(s: PowerScenario) -> float:
    """Phi(mu - z_{1-alpha}) * Phi(d mu sqrt(c) - z_{1-alpha})"""
    mu = s.mu
    z_alpha = norm_isf(s.alpha)
    return norm_cdf(mu - z_alpha) * norm_cdf(s.d * mu * math.sqrt(s.c) - z_alpha)


def project_power_edgington(s: PowerScenario) -> float:
    mu = s.mu
    b = budget(s.alpha)
    shift = s.d * mu * math.sqrt(s.c)
    return _integrate(
        lambda z: _replication_success(b - norm_sf(z), shift),
        norm_isf(b),
        mu,
        Method.EDGINGTON,
    )


def project_power_edgington_weighted(s: PowerScenario) -> float:
    """Weighted Edgington; only the ratio wr/wo of the scenario's weights matters."""
    w = (s.weights or DEFAULT_WEIGHTS).normalized()
    mu = s.mu
    b_w = budget_weighted(s.alpha, w)
    shift = s.d * mu * math.sqrt(s.c)
    return _integrate(
        lambda z: _replication_success((b_w - norm_sf(z)) / w.wr, shift),
        norm_isf(b_w),
        mu,
        Method.EDGINGTON_WEIGHTED,
    )


def project_power_fisher(s: PowerScenario) -> float:
    """
    Fisher's method, integrated over z_o >= 0.

    Replication success is certain once po <= c_F, which puts a kink in the
    integrand at z_o = z_{1-c_F}.
    """
    mu = s.mu
    c_f = fisher_critical(s.alpha)
    shift = s.d * mu * math.sqrt(s.c)
    return _integrate(
        lambda z: _replication_success(c_f / norm_sf(z), shift),
        0.0,
        mu,
        Method.FISHER,
        breakpoints=(norm_isf(c_f),),
    )


def project_power_meta(s: PowerScenario) -> float:
    """Fixed-effect meta-analysis, integrated over z_o >= 0."""
    mu = s.mu
    c = s.c
    z_overall = norm_isf(s.alpha * s.alpha)
    shift = s.d * mu * math.sqrt(c)

    def success(z: float) -> float:
        threshold = (z_overall * math.sqrt(c + 1.0) - z) / math.sqrt(c)
        return norm_sf(threshold - shift)

    return _integrate(success, 0.0, mu, Method.META_ANALYSIS)


_POWER_FUNCTIONS = {
    Method.TWO_TRIALS: project_power_two_trials,
    Method.EDGINGTON: project_power_edgington,
    Method.EDGINGTON_WEIGHTED: project_power_edgington_weighted,
    Method.FISHER: project_power_fisher,
    Method.META_ANALYSIS: project_power_meta,
}


def project_power(method: Method, scenario: PowerScenario) -> float:
    try:
        func = _POWER_FUNCTIONS[Method(method)]
    except (KeyError, ValueError) as e:
        raise UsageError(f"Unknown method: {method}") from e
    return func(scenario)


def limit_power_edgington(
    original_power: float,
    alpha: float = 0.025,
    weights: Optional[Weights] = None,
) -> float:
    """
    Project power of (weighted) Edgington as c grows without bound.

    1 - Phi(z_{1-b} - z_{1-alpha} - z_{original_power}) with b = sqrt(2) alpha,
    or b_w / wo when weights are given.
    """
    if weights is None:
        b = budget(alpha)
    else:
        b = budget_weighted(alpha, weights) / weights.wo
    return norm_sf(norm_isf(b) - mu_from_original_power(original_power, alpha))


def limit_project_power(
    method: Method,
    original_power: float,
    alpha: float = 0.025,
    weights: Optional[Weights] = None,
) -> float:
    """
    Limit of project power for c to infinity, any method.

    The two-trials rule tends to the original power. Fisher and meta-analysis
    tend to Phi(mu), the mass of z_o >= 0 over which they are integrated.
    """
    mu = mu_from_original_power(original_power, alpha)
    if method == Method.TWO_TRIALS:
        return original_power
    if method == Method.EDGINGTON:
        return limit_power_edgington(original_power, alpha)
    if method == Method.EDGINGTON_WEIGHTED:
        return limit_power_edgington(original_power, alpha, weights or DEFAULT_WEIGHTS)
    if method in (Method.FISHER, Method.META_ANALYSIS):
        return norm_cdf(mu)
    raise UsageError(f"Unknown method: {method}")


def power_result(method: Method, scenario: PowerScenario, include_limit: bool = False) -> PowerResult:
    limit = None
    if include_limit:
        limit = limit_project_power(method, scenario.original_power, scenario.alpha, scenario.weights)
    return PowerResult(
        method=method,
        c=scenario.c,
        d=scenario.d,
        original_power=scenario.original_power,
        alpha=scenario.alpha,
        project_power=project_power(method, scenario),
        limit=limit,
    )


def c_grid(c_min: float, c_max: float, steps: int) -> np.ndarray:
    """Evenly spaced relative sample sizes, both ends included."""
    if not (0.0 < c_min <= c_max) or steps < 1:
        raise UsageError(f"Invalid curve grid: cmin={c_min}, cmax={c_max}, steps={steps}")
    return np.linspace(c_min, c_max, steps) if steps > 1 else np.array([c_min])


def power_curve(
    cs: Iterable[float],
    methods: Iterable[Method],
    original_power: float,
    d: float = 1.0,
    alpha: float = 0.025,
    weights: Optional[Weights] = None,
    workers: int = 1,
) -> pd.DataFrame:
    """
    Project power over a grid of relative sample sizes.

    Rows are ordered by method, then c, whatever the worker count.
    """
    scenarios: List[tuple] = [
        (Method(m), PowerScenario(original_power=original_power, c=float(c), d=d, alpha=alpha, weights=weights))
        for m in methods
        for c in cs
    ]
    logger.info(f"Evaluating {len(scenarios)} power curve points with {workers} worker(s)")

    def evaluate(item: tuple) -> float:
        method, scenario = item
        return project_power(method, scenario)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            powers = list(pool.map(evaluate, scenarios))
    else:
        powers = [evaluate(item) for item in scenarios]

    return pd.DataFrame(
        [
            {
                "method": method.value,
                "c": scenario.c,
                "d": scenario.d,
                "original_power": scenario.original_power,
                "alpha": scenario.alpha,
                "project_power": power,
            }
            for (method, scenario), power in zip(scenarios, powers)
        ],
        columns=POWER_CURVE_COLUMNS,
    )
