import numpy as np
import pytest

from src.errors import DomainError
from src.pydantic_models import Method, Verdict
from src.sequential import (
    SPENDING_CURVE_COLUMNS,
    assess_three,
    budget_k,
    final_decision,
    spending_curve,
    spending_plan,
    stage_decision,
)
from src.specfun import irwin_hall_cdf

LEVEL = 0.025**2


def test_budget_k():
    assert budget_k(0.025, 2) == pytest.approx(0.035355, abs=1e-6)
    assert budget_k(0.025, 3) == pytest.approx(0.15536, abs=1e-5)
    assert irwin_hall_cdf(budget_k(0.025, 4), 4) == pytest.approx(LEVEL, rel=1e-10)
    with pytest.raises(DomainError):
        budget_k(0.9, 10)
    with pytest.raises(DomainError):
        budget_k(0.025, 0)


def test_half_spending_plan():
    plan = spending_plan(0.025, 0.5)
    assert plan.b2 == pytest.approx(0.025, abs=1e-12)
    assert plan.b3 == pytest.approx(0.13, abs=0.005)
    assert plan.b3 == pytest.approx(0.1277, abs=5e-4)


def test_plan_spends_exactly_alpha_squared():
    for gamma in (0.1, 0.5, 0.9):
        plan = spending_plan(0.025, gamma)
        first = plan.b2**2 / 2
        second = plan.b3**3 / 6 - plan.b2**2 * plan.b3 / 2 + plan.b2**3 / 3
        assert first == pytest.approx(gamma * LEVEL, rel=1e-12)
        assert first + second == pytest.approx(LEVEL, rel=1e-9)


def test_plan_edge_cases():
    nothing_spent = spending_plan(0.025, 0.0)
    assert nothing_spent.b2 == 0.0
    assert nothing_spent.b3 == pytest.approx(0.15536, abs=1e-5)

    everything_spent = spending_plan(0.025, 1.0)
    assert everything_spent.b2 == pytest.approx(budget_k(0.025, 2))
    assert everything_spent.b3 == everything_spent.b2

    with pytest.raises(DomainError):
        spending_plan(0.025, 1.5)


def test_spending_curve_is_monotone():
    frame = spending_curve(0.025, np.linspace(0, 1, 5))
    assert list(frame.columns) == SPENDING_CURVE_COLUMNS
    assert np.all(np.diff(frame["b2"]) > 0)
    assert np.all(np.diff(frame["b3"]) < 0)


def test_stage_decisions():
    plan = spending_plan(0.025, 0.5)
    assert stage_decision(0.02, plan).verdict == Verdict.STOP_SUCCESS
    assert stage_decision(0.14, plan).verdict == Verdict.STOP_FUTILITY

    decision = stage_decision(0.05, plan)
    assert decision.verdict == Verdict.CONTINUE
    assert decision.next_level == pytest.approx(plan.b3 - 0.05)
    assert decision.next_level == pytest.approx(0.0777, abs=5e-4)

    with pytest.raises(DomainError):
        stage_decision(-0.1, plan)


@pytest.mark.parametrize("gamma", [0.0, 0.1, 0.5, 0.9, 1.0])
def test_stage_decision_partitions_the_whole_range(gamma):
    plan = spending_plan(0.025, gamma)
    e2_values = np.concatenate([np.linspace(0.0, 3.0, 30_001), [plan.b2, plan.b3]])
    for e2 in e2_values:
        decision = stage_decision(float(e2), plan)
        if e2 <= plan.b2:
            assert decision.verdict == Verdict.STOP_SUCCESS
        elif e2 >= plan.b3:
            assert decision.verdict == Verdict.STOP_FUTILITY
        else:
            assert decision.verdict == Verdict.CONTINUE
        assert (decision.next_level is not None) == (decision.verdict == Verdict.CONTINUE)
        if decision.next_level is not None:
            assert 0.0 < decision.next_level < plan.b3


def test_final_decision():
    plan = spending_plan(0.025, 0.5)
    assert final_decision(0.05, 0.05, plan) == Verdict.STOP_SUCCESS
    assert final_decision(0.05, 0.09, plan) == Verdict.STOP_FUTILITY
    assert final_decision(0.02, 0.9, plan) == Verdict.STOP_SUCCESS


def test_assess_three():
    result = assess_three(0.05, 0.05, 0.055)
    assert result.method == Method.EDGINGTON
    assert result.p_combined == pytest.approx(0.000620, abs=1e-6)
    assert result.success

    assert not assess_three(0.06, 0.05, 0.05).success
    assert assess_three(0.05, 0.05, 0.05).success
    with pytest.raises(DomainError):
        assess_three(0.05, 0.0, 0.05)
