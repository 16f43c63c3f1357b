"""
Conditional Levels

Significance level the replication study must reach for success, given the
original p-value. Under a null replication effect this is also the
conditional Type-I error rate.
"""

from typing import Optional
import math

from .combine import budget, budget_weighted
from .errors import DomainError, UsageError
from .pydantic_models import DEFAULT_WEIGHTS, ConditionalLevel, Method, Weights
from .specfun import fisher_critical, norm_isf, norm_sf


def _check_po(po: float) -> None:
    if not 0.0 < po < 1.0:
        raise DomainError(f"po must lie strictly between 0 and 1, got {po}")


def _clamp(level: float) -> float:
    return min(max(level, 0.0), 1.0)


def level_two_trials(po: float, alpha: float = 0.025) -> float:
    _check_po(po)
    return alpha if po <= alpha else 0.0


def level_edgington(po: float, alpha: float = 0.025) -> float:
    _check_po(po)
    return _clamp(budget(alpha) - po)


def level_edgington_weighted(po: float, alpha: float = 0.025, weights: Weights = DEFAULT_WEIGHTS) -> float:
    _check_po(po)
    b_w = budget_weighted(alpha, weights)
    return _clamp((b_w - weights.wo * po) / weights.wr)


def level_fisher(po: float, alpha: float = 0.025) -> float:
    _check_po(po)
    return _clamp(fisher_critical(alpha) / po)


def level_meta(po: float, alpha: float = 0.025, c: float = 1.0) -> float:
    """1 - Phi{(z_{1-alpha^2} sqrt(c+1) - z_o) / sqrt(c)}"""
    _check_po(po)
    if not (math.isfinite(c) and c > 0):
        raise DomainError(f"Variance ratio c must be positive and finite, got {c}")
    threshold = (norm_isf(alpha * alpha) * math.sqrt(c + 1.0) - norm_isf(po)) / math.sqrt(c)
    return _clamp(norm_sf(threshold))


def conditional_level(
    method: Method,
    po: float,
    alpha: float = 0.025,
    weights: Optional[Weights] = None,
    c: Optional[float] = None,
) -> ConditionalLevel:
    """Dispatch to the level function of `method`."""
    if method == Method.TWO_TRIALS:
        level = level_two_trials(po, alpha)
    elif method == Method.EDGINGTON:
        level = level_edgington(po, alpha)
    elif method == Method.EDGINGTON_WEIGHTED:
        level = level_edgington_weighted(po, alpha, weights or DEFAULT_WEIGHTS)
    elif method == Method.FISHER:
        level = level_fisher(po, alpha)
    elif method == Method.META_ANALYSIS:
        if c is None:
            raise UsageError("Method 'meta' requires the variance ratio c")
        level = level_meta(po, alpha, c)
    else:
        raise UsageError(f"Unknown method: {method}")
    return ConditionalLevel(method=method, po=po, level=level)
