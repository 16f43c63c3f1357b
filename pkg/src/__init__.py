"""
Replisum Source Package

Replication success assessment: combined p-values of an original and a
replication study, replication significance levels, project power,
replication sample size, two-stage sequential plans, replication-project
dataset analysis and a Monte Carlo oracle.
"""

from .combine import assess, assess_all, combined_pvalues
from .conditional import conditional_level
from .design import design
from .errors import (
    DataError,
    DomainError,
    NumericalError,
    ReplisumError,
    SuccessImpossibleError,
    UnattainableError,
    UsageError,
)
from .power import limit_project_power, project_power
from .pydantic_models import (
    DesignInput,
    DesignResult,
    Method,
    MethodResult,
    PowerScenario,
    PowerType,
    StudyPair,
    Verdict,
    Weights,
)
from .replication_service import ReplicationService, get_replication_service
from .sequential import spending_plan, stage_decision
from .services import DatasetService, get_dataset_service

__all__ = [
    "assess",
    "assess_all",
    "combined_pvalues",
    "conditional_level",
    "design",
    "project_power",
    "limit_project_power",
    "spending_plan",
    "stage_decision",
    "ReplicationService",
    "get_replication_service",
    "DatasetService",
    "get_dataset_service",
    "DesignInput",
    "DesignResult",
    "Method",
    "MethodResult",
    "PowerScenario",
    "PowerType",
    "StudyPair",
    "Verdict",
    "Weights",
    "ReplisumError",
    "UsageError",
    "DomainError",
    "SuccessImpossibleError",
    "UnattainableError",
    "DataError",
    "NumericalError",
]
