"""
Pydantic Models

Domain values (study pairs, weights, results, scenarios, plans, dataset
records) and the request/response models of the HTTP surface. Domain values
are frozen so they can be shared freely between threads.
"""

from datetime import datetime, timezone
from enum import Enum
from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Method(str, Enum):
    """Replication success methods"""
    TWO_TRIALS = "two-trials"
    EDGINGTON = "edgington"
    EDGINGTON_WEIGHTED = "edgington-weighted"
    FISHER = "fisher"
    META_ANALYSIS = "meta"


class PowerType(str, Enum):
    """Power concept used for replication sample size"""
    CONDITIONAL = "conditional"
    PREDICTIVE = "predictive"


class Verdict(str, Enum):
    """Decision after the first of two sequential replications"""
    STOP_SUCCESS = "stop-success"
    STOP_FUTILITY = "stop-futility"
    CONTINUE = "continue"


FROZEN = ConfigDict(frozen=True)

Probability = Annotated[float, Field(ge=0.0, le=1.0, allow_inf_nan=False)]
OpenProbability = Annotated[float, Field(gt=0.0, lt=1.0, allow_inf_nan=False)]
PositiveReal = Annotated[float, Field(gt=0.0, allow_inf_nan=False)]


# Core values

class Weights(BaseModel):
    """
    Weights of the original and replication p-value in the weighted sum.

    Only the ratio wr/wo matters for the combined p-value.
    """
    model_config = FROZEN

    wo: PositiveReal = Field(1.0, description="Weight of the original study")
    wr: PositiveReal = Field(2.0, description="Weight of the replication study")

    @model_validator(mode="after")
    def check_order(self):
        if self.wo > self.wr:
            raise ValueError(f"Weights must satisfy wo <= wr, got wo={self.wo}, wr={self.wr}")
        return self

    @property
    def ratio(self) -> float:
        return self.wr / self.wo

    def normalized(self) -> "Weights":
        """Equivalent weights with wo = 1."""
        return Weights(wo=1.0, wr=self.ratio)


DEFAULT_WEIGHTS = Weights(wo=1.0, wr=2.0)


class StudyPair(BaseModel):
    """One-sided original and replication p-values, optionally with variance ratio c."""
    model_config = FROZEN

    po: OpenProbability = Field(..., description="One-sided original p-value")
    pr: OpenProbability = Field(..., description="One-sided replication p-value")
    c: Optional[PositiveReal] = Field(None, description="Variance ratio sigma_o^2 / sigma_r^2 (about n_r / n_o)")


class MethodResult(BaseModel):
    """Combined p-value and verdict of one method at overall level alpha^2."""
    model_config = FROZEN

    method: Method
    p_combined: Probability
    overall_level: Probability
    success: bool

    @model_validator(mode="after")
    def check_verdict(self):
        if self.success != (self.p_combined <= self.overall_level):
            raise ValueError("success must equal p_combined <= overall_level")
        return self


class ConditionalLevel(BaseModel):
    """
    Largest replication p-value that still gives success, given po.

    Equals the conditional Type-I error rate. 0 means success is impossible,
    1 means success is guaranteed.
    """
    model_config = FROZEN

    method: Method
    po: OpenProbability
    level: Probability


class PowerScenario(BaseModel):
    """Inputs to project power: original power, relative sample size c, effect ratio d."""
    model_config = FROZEN

    original_power: OpenProbability = Field(..., description="Power of the original study at level alpha")
    c: PositiveReal = Field(1.0, description="Relative sample size n_r / n_o")
    d: PositiveReal = Field(1.0, description="Effect ratio theta_r / theta_o")
    alpha: OpenProbability = Field(0.025, description="One-sided significance level")
    weights: Optional[Weights] = Field(None, description="Weights for weighted Edgington")

    @model_validator(mode="after")
    def check_mu(self):
        if self.mu <= 0:
            raise ValueError(
                f"original_power={self.original_power} at alpha={self.alpha} gives a non-positive mean z-value"
            )
        return self

    @property
    def mu(self) -> float:
        from .specfun import norm_isf, norm_quantile
        return norm_isf(self.alpha) + norm_quantile(self.original_power)


class DesignInput(BaseModel):
    """Inputs to replication sample size calculation."""
    model_config = FROZEN

    po: OpenProbability
    alpha: OpenProbability = 0.025
    target_power: OpenProbability = 0.8
    method: Method = Method.EDGINGTON
    weights: Optional[Weights] = None
    power_type: PowerType = PowerType.CONDITIONAL
    theta_hat_o: Optional[float] = Field(None, allow_inf_nan=False, description="Original effect estimate")
    tau: Optional[PositiveReal] = Field(None, description="Common standard deviation of the measurements")
    no: Optional[int] = Field(None, gt=0, description="Original sample size per group")
    shrinkage: float = Field(0.0, ge=0.0, lt=1.0, description="Fractional reduction of the original effect")


class DesignResult(BaseModel):
    """Derived replication design quantities."""
    model_config = FROZEN

    method: Method
    power_type: PowerType
    adjusted_level: Probability
    relative_sample_size: PositiveReal
    sample_size_ratio: PositiveReal = Field(..., description="Relative sample size over the two-trials rule's")
    absolute_sample_size: Optional[int] = Field(None, description="Per-group replication size from theta_hat_o and tau")
    replication_size_from_no: Optional[int] = Field(None, description="ceil(c * no)")


class SpendingPlan(BaseModel):
    """Budgets for two sequential replication studies."""
    model_config = FROZEN

    alpha: OpenProbability
    gamma: Probability = Field(..., description="Share of alpha^2 spent after the first replication")
    b2: Probability = Field(..., description="Budget for E2 = po + pr1")
    b3: Probability = Field(..., description="Budget for E3 = E2 + pr2")

    @model_validator(mode="after")
    def check_budgets(self):
        if not self.b2 <= self.b3 + 1e-15:
            raise ValueError(f"Budgets must satisfy b2 <= b3, got b2={self.b2}, b3={self.b3}")
        return self


class StageDecision(BaseModel):
    model_config = FROZEN

    verdict: Verdict
    next_level: Optional[Probability] = Field(None, description="Significance level b3 - E2 for the second replication")

    @model_validator(mode="after")
    def check_next_level(self):
        if (self.next_level is not None) != (self.verdict == Verdict.CONTINUE):
            raise ValueError("next_level is present exactly when the verdict is continue")
        if self.next_level is not None and self.next_level <= 0:
            raise ValueError("next_level must be positive")
        return self


# Datasets

class StudyRecord(BaseModel):
    """
    One row of a replication-project dataset.

    Either the correlation form (ro, no, rr, nr) or the bypass form (po, pr,
    optionally c) must be complete.
    """
    model_config = FROZEN

    project: str = Field(..., min_length=1)
    study: str = Field(..., min_length=1)
    ro: Optional[float] = Field(None, gt=-1.0, lt=1.0, allow_inf_nan=False)
    no: Optional[int] = Field(None, gt=3)
    rr: Optional[float] = Field(None, gt=-1.0, lt=1.0, allow_inf_nan=False)
    nr: Optional[int] = Field(None, gt=3)
    po: Optional[OpenProbability] = None
    pr: Optional[OpenProbability] = None
    c: Optional[PositiveReal] = None

    @model_validator(mode="after")
    def check_form(self):
        correlation = [self.ro, self.no, self.rr, self.nr]
        if all(v is not None for v in correlation):
            return self
        if self.po is not None and self.pr is not None:
            return self
        raise ValueError("record needs either ro, no, rr, nr or po, pr")

    @property
    def has_correlation_form(self) -> bool:
        return None not in (self.ro, self.no, self.rr, self.nr)


class RejectedRow(BaseModel):
    model_config = FROZEN

    line: int = Field(..., description="1-based line number in the source file (header is line 1)")
    message: str


class IngestReport(BaseModel):
    """Validated records in input order plus the rows that failed."""
    model_config = FROZEN

    source_name: str
    total_rows: int
    records: List[StudyRecord]
    rejected: List[RejectedRow]


class AnalysisRow(BaseModel):
    """Combined p-values and verdicts of all methods for one study pair."""
    model_config = FROZEN

    project: str
    study: str
    po: OpenProbability
    pr: OpenProbability
    c: Optional[PositiveReal] = None
    results: Dict[Method, MethodResult]
    wrong_direction: bool = Field(..., description="Replication estimate points the other way (pr > 0.5)")


# Simulation

class NullTruth(BaseModel):
    """Both true effects are null: po and pr independent uniform."""
    model_config = FROZEN
    kind: Literal["null"] = "null"


class ConditionalTruth(BaseModel):
    """Original p-value fixed, replication effect null."""
    model_config = FROZEN
    kind: Literal["conditional"] = "conditional"
    po: OpenProbability


class AlternativeTruth(BaseModel):
    """z_o ~ N(mu, 1) and z_r ~ N(d mu sqrt(c), 1)."""
    model_config = FROZEN
    kind: Literal["alternative"] = "alternative"
    mu: PositiveReal
    c: PositiveReal = 1.0
    d: PositiveReal = 1.0
    truncate_original: bool = Field(True, description="Count success only when z_o >= 0")


Truth = Annotated[Union[NullTruth, ConditionalTruth, AlternativeTruth], Field(discriminator="kind")]


class SimConfig(BaseModel):
    model_config = FROZEN

    kind: Literal["two-study"] = "two-study"
    method: Method
    alpha: OpenProbability = 0.025
    weights: Optional[Weights] = None
    c: Optional[PositiveReal] = Field(None, description="Variance ratio for meta-analysis; defaults to the truth's c")
    truth: Truth = Field(default_factory=NullTruth)
    n_sim: int = Field(10**6, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)


class SequentialSimConfig(BaseModel):
    model_config = FROZEN

    kind: Literal["sequential"] = "sequential"
    alpha: OpenProbability = 0.025
    gamma: Probability = 0.5
    n_sim: int = Field(10**6, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)


AnySimConfig = Annotated[Union[SimConfig, SequentialSimConfig], Field(discriminator="kind")]


class SimResult(BaseModel):
    model_config = FROZEN

    rate: Probability
    se: float = Field(..., ge=0.0)
    n_sim: int
    successes: int


# HTTP requests and responses

class CombineRequest(BaseModel):
    """
    Request model for combined p-values.

    Omitting `methods` evaluates every method whose inputs are present.
    """
    po: OpenProbability
    pr: OpenProbability
    c: Optional[PositiveReal] = None
    methods: Optional[List[Method]] = None
    alpha: OpenProbability = 0.025
    weights: Weights = DEFAULT_WEIGHTS

    model_config = {
        "json_schema_extra": {
            "examples": [
                {"po": 0.026, "pr": 0.001, "methods": ["edgington", "two-trials"], "alpha": 0.025},
                {"po": 0.001, "pr": 0.03, "c": 1.0, "alpha": 0.025},
            ]
        }
    }


class LevelRequest(BaseModel):
    po: OpenProbability
    methods: Optional[List[Method]] = None
    alpha: OpenProbability = 0.025
    c: Optional[PositiveReal] = None
    weights: Weights = DEFAULT_WEIGHTS


class PowerRequest(BaseModel):
    scenario: PowerScenario
    methods: Optional[List[Method]] = None
    include_limit: bool = False


class PowerResult(BaseModel):
    model_config = FROZEN

    method: Method
    c: PositiveReal
    d: PositiveReal
    original_power: OpenProbability
    alpha: OpenProbability
    project_power: Probability
    limit: Optional[Probability] = Field(None, description="Project power as c grows without bound")


class SequentialPlanRequest(BaseModel):
    alpha: OpenProbability = 0.025
    gamma: Probability = 0.5


class SequentialDecideRequest(SequentialPlanRequest):
    e2: float = Field(..., ge=0.0, allow_inf_nan=False)


class DatasetUploadRequest(BaseModel):
    name: str = Field(..., min_length=1, max_length=200)
    csv_text: str = Field(..., min_length=1, description="CSV content in the correlation or bypass schema")


class DatasetSummary(BaseModel):
    id: str
    name: str
    source_name: str
    total_rows: int
    accepted_rows: int
    rejected_rows: int
    ingested_at: datetime
    rejected: List[RejectedRow] = Field(default_factory=list)


class ErrorResponse(BaseModel):
    """
    Standard error response model.
    """
    error: str = Field(..., description="Error message")
    detail: Optional[str] = Field(None, description="Detailed error information")
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc), description="Error timestamp")

    model_config = {
        "json_schema_extra": {
            "example": {
                "error": "Invalid Request",
                "detail": "Method 'meta' requires the variance ratio c",
                "timestamp": "2024-09-06T17:00:00Z"
            }
        }
    }


class HealthResponse(BaseModel):
    status: str
    service: str
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    store: Dict[str, object] = Field(default_factory=dict)
