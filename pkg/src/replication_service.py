"""
Replication Service Module

Facade over the analysis modules shared by the command line and the HTTP
app. It resolves defaults (weights, worker count) from settings and turns
requests into domain results.
"""

from typing import Dict, List, Optional, Sequence
import logging

from .combine import assess_all
from .conditional import conditional_level
from .config import Settings, get_settings
from .design import design
from .errors import UsageError
from .power import power_result
from .projects import analyze_records, combined_pvalue_table, success_rates
from .pydantic_models import (
    AnalysisRow,
    CombineRequest,
    ConditionalLevel,
    DesignInput,
    DesignResult,
    LevelRequest,
    Method,
    MethodResult,
    PowerRequest,
    PowerResult,
    SequentialSimConfig,
    SimConfig,
    SimResult,
    SpendingPlan,
    StageDecision,
    StudyPair,
    StudyRecord,
)
from .sequential import spending_plan, stage_decision
from .sim import run_config

logger = logging.getLogger(__name__)


def _methods_for(requested: Optional[Sequence[Method]], c: Optional[float]) -> List[Method]:
    if requested:
        return list(requested)
    return [m for m in Method if m != Method.META_ANALYSIS or c is not None]


class ReplicationService:
    """
    Replication success calculations behind one interface.

    All methods are synchronous and side-effect free apart from logging.
    """

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        logger.info(f"Replication service initialized (workers={self.settings.workers})")

    def combine(self, request: CombineRequest) -> List[MethodResult]:
        """Combined p-values and verdicts for the requested methods."""
        pair = StudyPair(po=request.po, pr=request.pr, c=request.c)
        methods = _methods_for(request.methods, request.c)
        results = assess_all(pair, methods, alpha=request.alpha, weights=request.weights)
        return [results[m] for m in methods]

    def levels(self, request: LevelRequest) -> List[ConditionalLevel]:
        """Replication significance levels (conditional Type-I error rates)."""
        return [
            conditional_level(m, request.po, request.alpha, weights=request.weights, c=request.c)
            for m in _methods_for(request.methods, request.c)
        ]

    def power(self, request: PowerRequest) -> List[PowerResult]:
        methods = list(request.methods) if request.methods else list(Method)
        logger.info(f"Computing project power for {len(methods)} method(s), c={request.scenario.c}")
        return [power_result(m, request.scenario, include_limit=request.include_limit) for m in methods]

    def sample_size(self, inp: DesignInput) -> DesignResult:
        return design(inp)

    def sequential_plan(self, alpha: float, gamma: float) -> SpendingPlan:
        return spending_plan(alpha, gamma)

    def sequential_decide(self, e2: float, alpha: float, gamma: float) -> StageDecision:
        return stage_decision(e2, spending_plan(alpha, gamma))

    def simulate(self, cfg: SimConfig | SequentialSimConfig, workers: Optional[int] = None) -> SimResult:
        """Run a Monte Carlo config; the result does not depend on `workers`."""
        return run_config(cfg, workers or self.settings.workers)

    def analyze(self, records: Sequence[StudyRecord], alpha: float = 0.025) -> List[AnalysisRow]:
        if not records:
            raise UsageError("Dataset has no accepted records")
        return analyze_records(records, alpha=alpha)

    def success_rates(self, records: Sequence[StudyRecord], alpha_sq_grid: Sequence[float]) -> List[Dict[str, object]]:
        frame = success_rates(self.analyze(records), alpha_sq_grid)
        return frame.to_dict(orient="records")

    def combined_pvalues(self, records: Sequence[StudyRecord], significance: float = 0.025) -> List[AnalysisRow]:
        return combined_pvalue_table(self.analyze(records), significance)


# Global replication service instance
_replication_service: Optional[ReplicationService] = None


def get_replication_service() -> ReplicationService:
    """Get or create the global replication service instance."""
    global _replication_service

    if _replication_service is None:
        _replication_service = ReplicationService()

    return _replication_service
