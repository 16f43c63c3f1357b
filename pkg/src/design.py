"""
Replication Design

Sample size of the replication study under conditional or predictive power.
The z-test sizing formulas are unchanged except that the significance level
alpha is replaced by the method's adjusted replication level, e.g. b - po
for Edgington's method.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, Optional
import logging
import math

import pandas as pd
from scipy.optimize import brentq

from .conditional import level_edgington, level_edgington_weighted, level_two_trials
from .errors import DomainError, SuccessImpossibleError, UnattainableError, UsageError
from .pydantic_models import DEFAULT_WEIGHTS, DesignInput, DesignResult, Method, PowerType, Weights
from .specfun import norm_cdf, norm_isf, norm_quantile

logger = logging.getLogger(__name__)

DESIGN_METHODS = (Method.TWO_TRIALS, Method.EDGINGTON, Method.EDGINGTON_WEIGHTED)

C_LOWER = 1e-6
C_UPPER = 1e6
C_EXPAND_LIMIT = 1e12

RATIO_CURVE_COLUMNS = ["power_type", "method", "target_power", "po", "ratio"]


def adjusted_level(
    method: Method,
    po: float,
    alpha: float = 0.025,
    weights: Optional[Weights] = None,
) -> float:
    """
    Significance level at which the replication study has to be sized.

    Raises:
        SuccessImpossibleError: If no replication result can give success.
        UsageError: For methods without a level-substitution design.
    """
    if method == Method.TWO_TRIALS:
        level = level_two_trials(po, alpha)
    elif method == Method.EDGINGTON:
        level = level_edgington(po, alpha)
    elif method == Method.EDGINGTON_WEIGHTED:
        level = level_edgington_weighted(po, alpha, weights or DEFAULT_WEIGHTS)
    else:
        raise UsageError(
            f"Sample size is available for {', '.join(m.value for m in DESIGN_METHODS)}; got {Method(method).value}"
        )
    if level <= 0.0:
        raise SuccessImpossibleError(method, po)
    return level


def _original_z(inp: DesignInput) -> float:
    if inp.po >= 0.5:
        raise DomainError(f"po must be below 0.5 for a positive original z-value, got {inp.po}")
    return (1.0 - inp.shrinkage) * norm_isf(inp.po)


def _level_of(inp: DesignInput) -> float:
    return adjusted_level(inp.method, inp.po, inp.alpha, inp.weights)


def relative_sample_size_conditional(inp: DesignInput) -> float:
    """c = (z_{1-level} + z_{1-beta})^2 / z_o^2, with z_o shrunk by `shrinkage`."""
    z_o = _original_z(inp)
    level = _level_of(inp)
    return (norm_isf(level) + norm_quantile(inp.target_power)) ** 2 / z_o**2


def absolute_sample_size(inp: DesignInput) -> int:
    """
    Per-group replication size 2 tau^2 (z_{1-level} + z_{1-beta})^2 / theta^2,
    rounded up, with theta the shrunken original effect estimate.
    """
    if inp.theta_hat_o is None or inp.tau is None:
        raise UsageError("Absolute sample size needs theta_hat_o and tau")
    if inp.theta_hat_o == 0.0:
        raise DomainError("theta_hat_o must be non-zero")
    level = _level_of(inp)
    theta = (1.0 - inp.shrinkage) * inp.theta_hat_o
    n = 2.0 * inp.tau**2 * (norm_isf(level) + norm_quantile(inp.target_power)) ** 2 / theta**2
    return math.ceil(n)


def sample_size_ratio_conditional(
    po: float,
    alpha: float = 0.025,
    target_power: float = 0.8,
    method: Method = Method.EDGINGTON,
    weights: Optional[Weights] = None,
) -> float:
    """Conditional relative sample size of `method` over the two-trials rule's; z_o cancels."""
    level = adjusted_level(method, po, alpha, weights)
    z_beta = norm_quantile(target_power)
    return (norm_isf(level) + z_beta) ** 2 / (norm_isf(alpha) + z_beta) ** 2


def predictive_power(zo: float, c: float, level: float) -> float:
    """Phi((sqrt(c) z_o - z_{1-level}) / sqrt(1 + c))"""
    if not (math.isfinite(c) and c > 0):
        raise DomainError(f"c must be positive and finite, got {c}")
    return norm_cdf((math.sqrt(c) * zo - norm_isf(level)) / math.sqrt(1.0 + c))


def relative_sample_size_predictive(inp: DesignInput) -> float:
    """
    Smallest c whose predictive power reaches the target.

    Predictive power increases in c towards Phi(z_o), so targets at or above
    that bound cannot be reached.

    Raises:
        UnattainableError: If target_power >= Phi(z_o).
    """
    z_o = _original_z(inp)
    level = _level_of(inp)
    bound = norm_cdf(z_o)
    if inp.target_power >= bound:
        raise UnattainableError(inp.target_power, bound)

    def gap(c: float) -> float:
        return predictive_power(z_o, c, level) - inp.target_power

    lower, upper = C_LOWER, C_UPPER
    while gap(lower) > 0:
        if lower < 1.0 / C_EXPAND_LIMIT:
            return lower
        lower /= 10.0
    while gap(upper) < 0:
        upper *= 10.0
        if upper > C_EXPAND_LIMIT:
            raise UnattainableError(inp.target_power, bound)
    return brentq(gap, lower, upper, xtol=1e-14, rtol=1e-10, maxiter=500)


def relative_sample_size(inp: DesignInput) -> float:
    if inp.power_type == PowerType.PREDICTIVE:
        return relative_sample_size_predictive(inp)
    return relative_sample_size_conditional(inp)


def sample_size_ratio_predictive(
    po: float,
    alpha: float = 0.025,
    target_power: float = 0.8,
    method: Method = Method.EDGINGTON,
    weights: Optional[Weights] = None,
) -> float:
    """Predictive relative sample size of `method` over the two-trials rule's."""
    common = dict(po=po, alpha=alpha, target_power=target_power, weights=weights, power_type=PowerType.PREDICTIVE)
    c_method = relative_sample_size_predictive(DesignInput(method=method, **common))
    c_two_trials = relative_sample_size_predictive(DesignInput(method=Method.TWO_TRIALS, **common))
    return c_method / c_two_trials


def sample_size_ratio(
    power_type: PowerType,
    po: float,
    alpha: float = 0.025,
    target_power: float = 0.8,
    method: Method = Method.EDGINGTON,
    weights: Optional[Weights] = None,
) -> float:
    if power_type == PowerType.PREDICTIVE:
        return sample_size_ratio_predictive(po, alpha, target_power, method, weights)
    return sample_size_ratio_conditional(po, alpha, target_power, method, weights)


def design(inp: DesignInput) -> DesignResult:
    """All design quantities for one input."""
    level = _level_of(inp)
    c = relative_sample_size(inp)
    if inp.method == Method.TWO_TRIALS:
        ratio = 1.0
    else:
        ratio = sample_size_ratio(inp.power_type, inp.po, inp.alpha, inp.target_power, inp.method, inp.weights)

    absolute = None
    if inp.theta_hat_o is not None and inp.tau is not None and inp.power_type == PowerType.CONDITIONAL:
        absolute = absolute_sample_size(inp)
    from_no = math.ceil(c * inp.no) if inp.no is not None else None

    logger.debug(f"Design {inp.method.value}/{inp.power_type.value} po={inp.po}: level={level:.6g}, c={c:.6g}")
    return DesignResult(
        method=inp.method,
        power_type=inp.power_type,
        adjusted_level=level,
        relative_sample_size=c,
        sample_size_ratio=ratio,
        absolute_sample_size=absolute,
        replication_size_from_no=from_no,
    )


def sample_size_ratio_curve(
    pos: Iterable[float],
    methods: Iterable[Method] = (Method.EDGINGTON, Method.EDGINGTON_WEIGHTED),
    target_powers: Iterable[float] = (0.8, 0.9),
    power_types: Iterable[PowerType] = (PowerType.CONDITIONAL, PowerType.PREDICTIVE),
    alpha: float = 0.025,
    weights: Optional[Weights] = None,
    workers: int = 1,
) -> pd.DataFrame:
    """
    Sample size ratio against the two-trials rule over a grid of po.

    Rows are ordered by power type, method, target power, then po.
    """
    points: List[tuple] = [
        (PowerType(pt), Method(m), float(tp), float(po))
        for pt in power_types
        for m in methods
        for tp in target_powers
        for po in pos
    ]
    logger.info(f"Evaluating {len(points)} sample size ratios with {workers} worker(s)")

    def evaluate(point: tuple) -> float:
        power_type, method, target_power, po = point
        return sample_size_ratio(power_type, po, alpha, target_power, method, weights)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ratios = list(pool.map(evaluate, points))
    else:
        ratios = [evaluate(p) for p in points]

    return pd.DataFrame(
        [
            {"power_type": pt.value, "method": m.value, "target_power": tp, "po": po, "ratio": r}
            for (pt, m, tp, po), r in zip(points, ratios)
        ],
        columns=RATIO_CURVE_COLUMNS,
    )
