"""
Sequential Replications

Budgets for k studies combined with Edgington's method, and a two-stage
alpha-spending plan: a share gamma of alpha^2 is spent on E2 = po + pr1
after the first replication, the rest on E3 = E2 + pr2 after a second one.
"""

from typing import Iterable
import logging
import math

import pandas as pd
from scipy.optimize import brentq

from .errors import DomainError, NumericalError
from .pydantic_models import Method, MethodResult, SpendingPlan, StageDecision, Verdict
from .specfun import irwin_hall_cdf

logger = logging.getLogger(__name__)

SPENDING_CURVE_COLUMNS = ["gamma", "b2", "b3"]


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie strictly between 0 and 1, got {alpha}")


def budget_k(alpha: float, k: int) -> float:
    """
    Largest sum of k p-values giving success at overall level alpha^2.

    Inverts the first branch of the Irwin-Hall(k) CDF: (k! alpha^2)^(1/k).

    Raises:
        DomainError: If the budget would exceed 1.
    """
    _check_alpha(alpha)
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    b = (math.factorial(int(k)) * alpha * alpha) ** (1.0 / k)
    if b > 1.0:
        raise DomainError(f"Budget for alpha={alpha} and k={k} exceeds 1")
    return b


def _stage_two_mass(b2: float, b3: float) -> float:
    # Pr(E2 > b2, E2 + U <= b3) under the null, valid for b3 <= 1
    return b3**3 / 6.0 - b2 * b2 * b3 / 2.0 + b2**3 / 3.0


def spending_plan(alpha: float = 0.025, gamma: float = 0.5) -> SpendingPlan:
    """
    Budgets (b2, b3) spending gamma * alpha^2 at the first replication.

    b2 = sqrt(2 gamma) alpha; b3 makes the total rejection probability
    exactly alpha^2.
    """
    _check_alpha(alpha)
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")

    b2 = math.sqrt(2.0 * gamma) * alpha
    if gamma == 1.0:
        return SpendingPlan(alpha=alpha, gamma=gamma, b2=b2, b3=b2)
    if gamma == 0.0:
        return SpendingPlan(alpha=alpha, gamma=gamma, b2=0.0, b3=budget_k(alpha, 3))

    remaining = (1.0 - gamma) * alpha * alpha

    def gap(b3: float) -> float:
        return _stage_two_mass(b2, b3) - remaining

    if gap(1.0) < 0:
        raise NumericalError(
            "Second-stage budget could not be bracketed below 1",
            {"alpha": alpha, "gamma": gamma, "b2": b2},
        )
    b3 = brentq(gap, b2, 1.0, xtol=1e-15, maxiter=200)
    return SpendingPlan(alpha=alpha, gamma=gamma, b2=b2, b3=b3)


def stage_decision(e2: float, plan: SpendingPlan) -> StageDecision:
    """Stop for success at E2 <= b2, for futility at E2 >= b3, otherwise run a second replication."""
    if not (math.isfinite(e2) and e2 >= 0.0):
        raise DomainError(f"E2 must be a non-negative number, got {e2}")
    if e2 <= plan.b2:
        return StageDecision(verdict=Verdict.STOP_SUCCESS)
    if e2 >= plan.b3:
        return StageDecision(verdict=Verdict.STOP_FUTILITY)
    return StageDecision(verdict=Verdict.CONTINUE, next_level=plan.b3 - e2)


def final_decision(e2: float, pr2: float, plan: SpendingPlan) -> Verdict:
    """
    Overall verdict once the second replication p-value is known.

    If the first stage already stopped, its verdict stands.
    """
    first = stage_decision(e2, plan)
    if first.verdict != Verdict.CONTINUE:
        return first.verdict
    if not 0.0 < pr2 < 1.0:
        raise DomainError(f"pr2 must lie strictly between 0 and 1, got {pr2}")
    return Verdict.STOP_SUCCESS if pr2 <= first.next_level else Verdict.STOP_FUTILITY


def assess_three(po: float, pr1: float, pr2: float, alpha: float = 0.025) -> MethodResult:
    """Edgington's method for one original and two replication studies."""
    _check_alpha(alpha)
    for name, p in (("po", po), ("pr1", pr1), ("pr2", pr2)):
        if not 0.0 < p < 1.0:
            raise DomainError(f"{name} must lie strictly between 0 and 1, got {p}")
    p = irwin_hall_cdf(po + pr1 + pr2, 3)
    level = alpha * alpha
    return MethodResult(method=Method.EDGINGTON, p_combined=p, overall_level=level, success=p <= level)


def spending_curve(alpha: float = 0.025, gammas: Iterable[float] = ()) -> pd.DataFrame:
    """Budgets b2 and b3 as functions of the spent share gamma."""
    rows = []
    for gamma in gammas:
        plan = spending_plan(alpha, float(gamma))
        rows.append({"gamma": plan.gamma, "b2": plan.b2, "b3": plan.b3})
    logger.debug(f"Computed spending curve with {len(rows)} points")
    return pd.DataFrame(rows, columns=SPENDING_CURVE_COLUMNS)
