"""
Dataset Service using SQLAlchemy ORM

Stores ingested replication-project datasets and loads them back as
validated study records, in input order.
"""

from datetime import datetime, timezone
from typing import Any, Dict, List, Optional
import logging
import uuid

from sqlalchemy import func, select
from sqlalchemy.ext.asyncio import AsyncEngine, AsyncSession, async_sessionmaker
from sqlalchemy.orm import selectinload

from ..models import Dataset, RejectedLine, StudyRecordRow, init_models, make_engine, make_session_factory
from ..pydantic_models import DatasetSummary, IngestReport, RejectedRow, StudyRecord

logger = logging.getLogger(__name__)

_RECORD_FIELDS = ("project", "study", "ro", "no", "rr", "nr", "po", "pr", "c")


class DatasetService:
    """
    Async dataset store.

    Each instance owns an engine; pass `database_url` to point it at a
    different store than the configured one.
    """

    def __init__(self, database_url: Optional[str] = None):
        self.engine: AsyncEngine = make_engine(database_url)
        self.session_factory: async_sessionmaker[AsyncSession] = make_session_factory(self.engine)
        self._initialized = False

    async def init(self) -> None:
        """Create missing tables once per service."""
        if not self._initialized:
            await init_models(self.engine)
            self._initialized = True

    async def dispose(self) -> None:
        await self.engine.dispose()

    async def health_check(self) -> Dict[str, Any]:
        """Perform store health check"""
        try:
            await self.init()
            async with self.session_factory() as session:
                result = await session.execute(select(func.count()).select_from(Dataset))
                dataset_count = result.scalar()

                return {
                    "status": "healthy",
                    "database": self.engine.url.get_backend_name(),
                    "dataset_count": dataset_count,
                    "connection": "active"
                }
        except Exception as e:
            logger.error(f"Dataset store health check failed: {e}")
            return {
                "status": "unhealthy",
                "error": str(e),
                "database": self.engine.url.get_backend_name()
            }

    async def store_dataset(self, name: str, report: IngestReport) -> DatasetSummary:
        """Persist an ingest report: metadata, accepted records and rejected rows."""
        await self.init()
        dataset = Dataset(
            id=str(uuid.uuid4()),
            name=name,
            source_name=report.source_name,
            total_rows=report.total_rows,
            accepted_rows=len(report.records),
            rejected_rows=len(report.rejected),
            ingested_at=datetime.now(timezone.utc).replace(tzinfo=None),
        )
        dataset.records = [
            StudyRecordRow(position=i, **rec.model_dump(include=set(_RECORD_FIELDS)))
            for i, rec in enumerate(report.records)
        ]
        dataset.rejected = [RejectedLine(line=r.line, message=r.message) for r in report.rejected]

        async with self.session_factory() as session:
            session.add(dataset)
            await session.commit()

        logger.info(
            f"Stored dataset '{name}' ({dataset.id}): {dataset.accepted_rows} records, "
            f"{dataset.rejected_rows} rejected rows"
        )
        return self._summary(dataset)

    async def list_datasets(self) -> List[DatasetSummary]:
        """All datasets, oldest first, without their rejected rows."""
        await self.init()
        async with self.session_factory() as session:
            result = await session.execute(select(Dataset).order_by(Dataset.ingested_at, Dataset.id))
            return [self._summary(ds, include_rejected=False) for ds in result.scalars().all()]

    async def get_dataset(self, dataset_id: str) -> Optional[DatasetSummary]:
        """Get dataset metadata and rejected rows by ID"""
        await self.init()
        async with self.session_factory() as session:
            result = await session.execute(
                select(Dataset).options(selectinload(Dataset.rejected)).where(Dataset.id == dataset_id)
            )
            dataset = result.scalar_one_or_none()
            return self._summary(dataset) if dataset else None

    async def load_records(self, dataset_id: str) -> Optional[List[StudyRecord]]:
        """Accepted records of a dataset in input order, or None if it does not exist."""
        await self.init()
        async with self.session_factory() as session:
            exists = await session.get(Dataset, dataset_id)
            if exists is None:
                return None
            result = await session.execute(
                select(StudyRecordRow)
                .where(StudyRecordRow.dataset_id == dataset_id)
                .order_by(StudyRecordRow.position)
            )
            return [
                StudyRecord(**{field: getattr(row, field) for field in _RECORD_FIELDS})
                for row in result.scalars().all()
            ]

    @staticmethod
    def _summary(dataset: Dataset, include_rejected: bool = True) -> DatasetSummary:
        rejected = []
        if include_rejected:
            rejected = [RejectedRow(line=r.line, message=r.message) for r in dataset.rejected]
        return DatasetSummary(
            id=dataset.id,
            name=dataset.name,
            source_name=dataset.source_name,
            total_rows=dataset.total_rows,
            accepted_rows=dataset.accepted_rows,
            rejected_rows=dataset.rejected_rows,
            ingested_at=dataset.ingested_at,
            rejected=rejected,
        )


# Global dataset service instance
_dataset_service: Optional[DatasetService] = None


def get_dataset_service() -> DatasetService:
    """Get or create the global dataset service instance."""
    global _dataset_service

    if _dataset_service is None:
        _dataset_service = DatasetService()

    return _dataset_service
