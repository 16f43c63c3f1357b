"""
Combined P-Values

Two-trials rule, Edgington's sum of p-values (unweighted and weighted),
Fisher's product and fixed-effect meta-analysis, each giving a combined
p-value that is uniform when both true effects are null. Success at overall
level alpha^2 means combined p-value <= alpha^2.

`combined_pvalues` is the vectorised core used for grids, Monte Carlo and
datasets; the StudyPair functions are thin scalar wrappers around it.
"""

from typing import Dict, Iterable, List, Optional
import logging
import math

import numpy as np

from .errors import DomainError, UsageError
from .pydantic_models import DEFAULT_WEIGHTS, Method, MethodResult, StudyPair, Weights
from .specfun import FloatOrArray, chisq4_tail, irwin_hall_cdf, norm_isf, norm_sf, trapezoid_cdf

logger = logging.getLogger(__name__)

# Smallest/largest p-values accepted when clamping simulated or recomputed values.
P_FLOOR = 1e-16
P_CEIL = 1.0 - 1e-16


def clamp_pvalue(p: FloatOrArray, floor: float = P_FLOOR) -> FloatOrArray:
    """Clamp p-values into [floor, 1 - 1e-16] before they enter a StudyPair."""
    clamped = np.clip(np.asarray(p, dtype=float), floor, P_CEIL)
    return float(clamped) if np.ndim(p) == 0 else clamped


def _two_trials(po, pr):
    return np.maximum(po, pr) ** 2


def _edgington(po, pr):
    return irwin_hall_cdf(np.asarray(po) + np.asarray(pr), 2)


def _edgington_weighted(po, pr, weights: Weights):
    w = weights.normalized()
    return trapezoid_cdf(np.asarray(po) + w.wr * np.asarray(pr), w.wo, w.wr)


def _fisher(po, pr):
    q = np.asarray(po) * np.asarray(pr)
    # q may underflow to 0 for extreme dataset p-values; the tail is then 0
    with np.errstate(divide="ignore"):
        return chisq4_tail(-2.0 * np.log(q))


def _meta(po, pr, c: float):
    z_ma = (norm_isf(po) + math.sqrt(c) * norm_isf(pr)) / math.sqrt(1.0 + c)
    return norm_sf(z_ma)


def combined_pvalues(
    method: Method,
    po: FloatOrArray,
    pr: FloatOrArray,
    weights: Optional[Weights] = None,
    c: Optional[float] = None,
) -> FloatOrArray:
    """
    Combined p-value of `method` for scalar or array inputs.

    Args:
        method: Combination method
        po: Original one-sided p-values in (0, 1)
        pr: Replication one-sided p-values in (0, 1)
        weights: Weights for EDGINGTON_WEIGHTED (defaults to (1, 2))
        c: Variance ratio, required for META_ANALYSIS

    Raises:
        UsageError: If META_ANALYSIS is requested without c
    """
    if method == Method.TWO_TRIALS:
        values = _two_trials(po, pr)
    elif method == Method.EDGINGTON:
        values = _edgington(po, pr)
    elif method == Method.EDGINGTON_WEIGHTED:
        values = _edgington_weighted(po, pr, weights or DEFAULT_WEIGHTS)
    elif method == Method.FISHER:
        values = _fisher(po, pr)
    elif method == Method.META_ANALYSIS:
        if c is None:
            raise UsageError("Method 'meta' requires the variance ratio c")
        if not (math.isfinite(c) and c > 0):
            raise DomainError(f"Variance ratio c must be positive and finite, got {c}")
        values = _meta(po, pr, c)
    else:
        raise UsageError(f"Unknown method: {method}")

    values = np.clip(values, 0.0, 1.0)
    return float(values) if np.ndim(values) == 0 else values


def p_two_trials(pair: StudyPair) -> float:
    """max(po, pr)^2"""
    return combined_pvalues(Method.TWO_TRIALS, pair.po, pair.pr)


def p_edgington(pair: StudyPair) -> float:
    """Irwin-Hall(2) CDF at E = po + pr."""
    return combined_pvalues(Method.EDGINGTON, pair.po, pair.pr)


def p_edgington_weighted(pair: StudyPair, weights: Weights = DEFAULT_WEIGHTS) -> float:
    """Trapezoidal CDF at E_w = wo*po + wr*pr; depends only on wr/wo."""
    return combined_pvalues(Method.EDGINGTON_WEIGHTED, pair.po, pair.pr, weights=weights)


def p_fisher(pair: StudyPair) -> float:
    """q(1 - ln q) with q = po*pr."""
    return combined_pvalues(Method.FISHER, pair.po, pair.pr)


def p_meta_analysis(pair: StudyPair) -> float:
    """1 - Phi(z_MA) with z_MA = (z_o + sqrt(c) z_r) / sqrt(1 + c)."""
    return combined_pvalues(Method.META_ANALYSIS, pair.po, pair.pr, c=pair.c)


def budget(alpha: float) -> float:
    """Largest p-value sum po + pr giving success at overall level alpha^2."""
    if not 0.0 < alpha <= 0.5:
        raise DomainError(f"alpha must lie in (0, 0.5], got {alpha}")
    return math.sqrt(2.0) * alpha


def budget_weighted(alpha: float, weights: Weights = DEFAULT_WEIGHTS) -> float:
    """
    Largest weighted sum wo*po + wr*pr giving success at level alpha^2.

    Raises:
        DomainError: If the budget exceeds wo, where the quadratic branch ends.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    b_w = math.sqrt(2.0 * weights.wo * weights.wr) * alpha
    if b_w > weights.wo:
        raise DomainError(
            f"alpha={alpha} is too large for weights ({weights.wo}, {weights.wr}): budget {b_w:.6g} exceeds wo"
        )
    return b_w


def assess(
    pair: StudyPair,
    method: Method,
    alpha: float = 0.025,
    weights: Optional[Weights] = None,
) -> MethodResult:
    """
    Combined p-value of one method and its verdict at overall level alpha^2.

    Success is p <= alpha^2 (boundary inclusive).
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    p = combined_pvalues(method, pair.po, pair.pr, weights=weights, c=pair.c)
    level = alpha * alpha
    return MethodResult(method=method, p_combined=p, overall_level=level, success=p <= level)


def available_methods(pair: StudyPair) -> List[Method]:
    """Methods whose inputs are present for this pair (meta-analysis needs c)."""
    return [m for m in Method if m != Method.META_ANALYSIS or pair.c is not None]


def assess_all(
    pair: StudyPair,
    methods: Optional[Iterable[Method]] = None,
    alpha: float = 0.025,
    weights: Optional[Weights] = None,
) -> Dict[Method, MethodResult]:
    """Assess a pair with several methods; defaults to every available method."""
    chosen = list(methods) if methods is not None else available_methods(pair)
    return {m: assess(pair, m, alpha=alpha, weights=weights) for m in chosen}
