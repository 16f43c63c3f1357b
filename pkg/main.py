"""
Replisum - Main FastAPI Application

HTTP surface for replication success calculations: combined p-values,
replication significance levels, project power, sample size, sequential
plans, stored replication-project datasets and Monte Carlo checks.
"""

from datetime import datetime, timezone
from typing import Annotated, Dict, List, Union
import logging

from fastapi import Body, Depends, FastAPI, HTTPException, Path, Query, Request, status
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
import uvicorn

from src.config import get_settings
from src.errors import NumericalError
from src.projects import DEFAULT_ALPHA_SQ_GRID, ingest_text
from src.pydantic_models import (
    AnalysisRow,
    CombineRequest,
    ConditionalLevel,
    DatasetSummary,
    DatasetUploadRequest,
    DesignInput,
    DesignResult,
    ErrorResponse,
    HealthResponse,
    LevelRequest,
    MethodResult,
    PowerRequest,
    PowerResult,
    SequentialDecideRequest,
    SequentialPlanRequest,
    SequentialSimConfig,
    SimConfig,
    SimResult,
    SpendingPlan,
    StageDecision,
)
from src.replication_service import ReplicationService, get_replication_service
from src.services.dataset_service import DatasetService, get_dataset_service

settings = get_settings()

# Configure logging
logging.basicConfig(level=settings.log_level)
logger = logging.getLogger(__name__)

VERSION = "0.1.0"

ERROR_RESPONSES = {
    400: {"model": ErrorResponse, "description": "Bad Request - Input outside the domain of the calculation"},
    422: {"model": ErrorResponse, "description": "Unprocessable Entity - Validation error"},
    500: {"model": ErrorResponse, "description": "Internal Server Error - Numerical or unexpected failure"},
}

# Initialize FastAPI application
app = FastAPI(
    title="Replisum - Replication Success Service",
    description="""
    ## Replication Success Calculations

    Assess whether a replication study confirms an original finding by
    combining the one-sided p-values of both studies.

    ### Methods

    * **two-trials**: both p-values at most alpha
    * **edgington**: sum of p-values, optionally weighted
    * **fisher**: product of p-values
    * **meta**: fixed-effect meta-analysis (needs the variance ratio c)

    All methods control the overall Type-I error rate at alpha squared.
    """,
    version=VERSION,
    servers=[
        {
            "url": f"http://{settings.host}:{settings.port}",
            "description": "Development server"
        }
    ]
)

# Configure CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


# Exception Handlers
@app.exception_handler(RequestValidationError)
async def validation_exception_handler(request: Request, exc: RequestValidationError):
    """Handle request validation errors with detailed error messages"""
    logger.warning(f"Validation error on {request.method} {request.url}: {exc}")

    error_details = []
    for error in exc.errors():
        field = " -> ".join(str(loc) for loc in error["loc"])
        error_details.append(f"{field}: {error['msg']}")

    return JSONResponse(
        status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
        content=ErrorResponse(
            error="Validation Error",
            detail="Request validation failed: " + "; ".join(error_details),
            timestamp=datetime.now(timezone.utc)
        ).model_dump(mode="json")
    )


@app.exception_handler(ValueError)
async def value_error_handler(request: Request, exc: ValueError):
    """Handle usage, domain and data errors with 400 status"""
    logger.warning(f"Value error on {request.method} {request.url}: {exc}")

    return JSONResponse(
        status_code=status.HTTP_400_BAD_REQUEST,
        content=ErrorResponse(
            error="Invalid Request",
            detail=str(exc),
            timestamp=datetime.now(timezone.utc)
        ).model_dump(mode="json")
    )


@app.exception_handler(NumericalError)
async def numerical_error_handler(request: Request, exc: NumericalError):
    """Handle quadrature and root-finding failures with 500 status"""
    logger.error(f"Numerical failure on {request.method} {request.url}: {exc} {exc.diagnostics}")

    return JSONResponse(
        status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
        content=ErrorResponse(
            error="Numerical Failure",
            detail=f"{exc} ({', '.join(f'{k}={v}' for k, v in exc.diagnostics.items())})",
            timestamp=datetime.now(timezone.utc)
        ).model_dump(mode="json")
    )


@app.exception_handler(Exception)
async def general_exception_handler(request: Request, exc: Exception):
    """Handle unexpected errors with 500 status"""
    logger.error(f"Unexpected error on {request.method} {request.url}: {exc}", exc_info=True)

    return JSONResponse(
        status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
        content=ErrorResponse(
            error="Internal Server Error",
            detail="An unexpected error occurred while processing your request",
            timestamp=datetime.now(timezone.utc)
        ).model_dump(mode="json")
    )


@app.get(
    "/",
    tags=["System"],
    summary="Service Information",
)
async def root():
    """Root endpoint returning service information"""
    return {
        "service": "Replisum",
        "version": VERSION,
        "status": "running"
    }


@app.get(
    "/health",
    response_model=HealthResponse,
    tags=["System"],
    summary="Health Check",
    description="Check the service and the dataset store.",
)
async def health_check(dataset_service: DatasetService = Depends(get_dataset_service)):
    """Health check endpoint for service monitoring"""
    store = await dataset_service.health_check()
    return HealthResponse(
        status="healthy" if store.get("status") == "healthy" else "degraded",
        service="replisum",
        store=store,
    )


@app.post(
    "/api/v1/combine",
    response_model=List[MethodResult],
    tags=["Assessment"],
    summary="Combined P-Values",
    description="Combined p-value and success verdict at level alpha^2 for each requested method.",
    responses=ERROR_RESPONSES,
)
async def combine_endpoint(
    request: CombineRequest,
    service: ReplicationService = Depends(get_replication_service),
):
    return service.combine(request)


@app.post(
    "/api/v1/levels",
    response_model=List[ConditionalLevel],
    tags=["Assessment"],
    summary="Replication Significance Levels",
    description="Largest replication p-value that still gives success, given the original p-value.",
    responses=ERROR_RESPONSES,
)
async def levels_endpoint(
    request: LevelRequest,
    service: ReplicationService = Depends(get_replication_service),
):
    return service.levels(request)


@app.post(
    "/api/v1/power",
    response_model=List[PowerResult],
    tags=["Design"],
    summary="Project Power",
    responses=ERROR_RESPONSES,
)
async def power_endpoint(
    request: PowerRequest,
    service: ReplicationService = Depends(get_replication_service),
):
    return service.power(request)


@app.post(
    "/api/v1/sample-size",
    response_model=DesignResult,
    tags=["Design"],
    summary="Replication Sample Size",
    description="""
    Relative (and optionally absolute) replication sample size under
    conditional or predictive power. Available for two-trials, edgington
    and edgington-weighted.
    """,
    responses=ERROR_RESPONSES,
)
async def sample_size_endpoint(
    request: DesignInput,
    service: ReplicationService = Depends(get_replication_service),
):
    return service.sample_size(request)


@app.post(
    "/api/v1/sequential/plan",
    response_model=SpendingPlan,
    tags=["Sequential"],
    summary="Two-Stage Spending Plan",
    responses=ERROR_RESPONSES,
)
async def sequential_plan_endpoint(
    request: SequentialPlanRequest,
    service: ReplicationService = Depends(get_replication_service),
):
    return service.sequential_plan(request.alpha, request.gamma)


@app.post(
    "/api/v1/sequential/decide",
    response_model=StageDecision,
    tags=["Sequential"],
    summary="Decision After the First Replication",
    responses=ERROR_RESPONSES,
)
async def sequential_decide_endpoint(
    request: SequentialDecideRequest,
    service: ReplicationService = Depends(get_replication_service),
):
    return service.sequential_decide(request.e2, request.alpha, request.gamma)


@app.post(
    "/api/v1/datasets",
    response_model=DatasetSummary,
    status_code=status.HTTP_201_CREATED,
    tags=["Datasets"],
    summary="Upload Replication-Project Dataset",
    description="""
    Store a dataset given as CSV text with header `project,study,ro,no,rr,nr`
    or `project,study,po,pr,c`. Rows failing validation are stored as
    rejected rows with their line numbers.
    """,
    responses=ERROR_RESPONSES,
)
async def upload_dataset_endpoint(
    request: DatasetUploadRequest,
    dataset_service: DatasetService = Depends(get_dataset_service),
):
    report = ingest_text(request.csv_text, source_name=request.name)
    return await dataset_service.store_dataset(request.name, report)


@app.get(
    "/api/v1/datasets",
    response_model=List[DatasetSummary],
    tags=["Datasets"],
    summary="List Datasets",
)
async def list_datasets_endpoint(dataset_service: DatasetService = Depends(get_dataset_service)):
    return await dataset_service.list_datasets()


async def _records_or_404(dataset_service: DatasetService, dataset_id: str):
    records = await dataset_service.load_records(dataset_id)
    if records is None:
        raise HTTPException(
            status_code=status.HTTP_404_NOT_FOUND,
            detail=f"Dataset with id '{dataset_id}' not found"
        )
    return records


@app.get(
    "/api/v1/datasets/{dataset_id}/success-rates",
    response_model=List[Dict[str, object]],
    tags=["Datasets"],
    summary="Success Rates per Project",
    responses={404: {"model": ErrorResponse, "description": "Not Found - Dataset does not exist"}, **ERROR_RESPONSES},
)
async def success_rates_endpoint(
    dataset_id: str = Path(..., description="Dataset identifier"),
    alpha_sq: List[float] = Query(list(DEFAULT_ALPHA_SQ_GRID), description="Overall levels alpha^2 to evaluate"),
    service: ReplicationService = Depends(get_replication_service),
    dataset_service: DatasetService = Depends(get_dataset_service),
):
    records = await _records_or_404(dataset_service, dataset_id)
    return service.success_rates(records, alpha_sq)


@app.get(
    "/api/v1/datasets/{dataset_id}/combined-pvalues",
    response_model=List[AnalysisRow],
    tags=["Datasets"],
    summary="Combined P-Values of Non-Significant Replications",
    responses={404: {"model": ErrorResponse, "description": "Not Found - Dataset does not exist"}, **ERROR_RESPONSES},
)
async def combined_pvalues_endpoint(
    dataset_id: str = Path(..., description="Dataset identifier"),
    significance: float = Query(0.025, gt=0.0, lt=1.0, description="Replication significance threshold"),
    service: ReplicationService = Depends(get_replication_service),
    dataset_service: DatasetService = Depends(get_dataset_service),
):
    records = await _records_or_404(dataset_service, dataset_id)
    return service.combined_pvalues(records, significance)


@app.post(
    "/api/v1/simulate",
    response_model=SimResult,
    tags=["Simulation"],
    summary="Monte Carlo Success Rate",
    responses=ERROR_RESPONSES,
)
async def simulate_endpoint(
    request: Annotated[Union[SimConfig, SequentialSimConfig], Body(discriminator="kind")],
    service: ReplicationService = Depends(get_replication_service),
):
    return service.simulate(request)


if __name__ == "__main__":
    logger.info(f"Starting Replisum on {settings.host}:{settings.port}")
    logger.info(f"Swagger UI will be available at: http://{settings.host}:{settings.port}/docs")

    uvicorn.run(
        "main:app",
        host=settings.host,
        port=settings.port,
        reload=True,
        log_level=settings.log_level.lower()
    )
