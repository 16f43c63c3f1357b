"""
Dataset Models

SQLAlchemy models for ingested replication-project datasets: the dataset
metadata, its accepted study records in input order, and the rejected rows
with their line numbers.
"""

from datetime import datetime
from typing import List, Optional

from sqlalchemy import DateTime, Float, ForeignKey, Integer, String, Text, func
from sqlalchemy.orm import Mapped, mapped_column, relationship

from .base import Base


class Dataset(Base):
    __tablename__ = "datasets"

    id: Mapped[str] = mapped_column(String, primary_key=True)
    name: Mapped[str] = mapped_column(String, index=True)
    source_name: Mapped[str] = mapped_column(String)
    total_rows: Mapped[int] = mapped_column(Integer)
    accepted_rows: Mapped[int] = mapped_column(Integer)
    rejected_rows: Mapped[int] = mapped_column(Integer)
    ingested_at: Mapped[datetime] = mapped_column(DateTime, default=func.now())

    # Relationships
    records: Mapped[List["StudyRecordRow"]] = relationship(
        back_populates="dataset", cascade="all, delete-orphan", order_by="StudyRecordRow.position"
    )
    rejected: Mapped[List["RejectedLine"]] = relationship(
        back_populates="dataset", cascade="all, delete-orphan", order_by="RejectedLine.line"
    )

    def __repr__(self):
        return f"<Dataset(id='{self.id}', name='{self.name}', accepted={self.accepted_rows})>"


class StudyRecordRow(Base):
    __tablename__ = "study_records"

    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    dataset_id: Mapped[str] = mapped_column(String, ForeignKey("datasets.id", ondelete="CASCADE"), index=True)
    position: Mapped[int] = mapped_column(Integer)
    project: Mapped[str] = mapped_column(String, index=True)
    study: Mapped[str] = mapped_column(String)
    ro: Mapped[Optional[float]] = mapped_column(Float)
    no: Mapped[Optional[int]] = mapped_column(Integer)
    rr: Mapped[Optional[float]] = mapped_column(Float)
    nr: Mapped[Optional[int]] = mapped_column(Integer)
    po: Mapped[Optional[float]] = mapped_column(Float)
    pr: Mapped[Optional[float]] = mapped_column(Float)
    c: Mapped[Optional[float]] = mapped_column(Float)

    dataset: Mapped["Dataset"] = relationship(back_populates="records")

    def __repr__(self):
        return f"<StudyRecordRow(dataset_id='{self.dataset_id}', project='{self.project}', study='{self.study}')>"


class RejectedLine(Base):
    __tablename__ = "rejected_rows"

    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    dataset_id: Mapped[str] = mapped_column(String, ForeignKey("datasets.id", ondelete="CASCADE"), index=True)
    line: Mapped[int] = mapped_column(Integer)
    message: Mapped[str] = mapped_column(Text)

    dataset: Mapped["Dataset"] = relationship(back_populates="rejected")
