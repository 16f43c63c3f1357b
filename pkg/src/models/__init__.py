"""
SQLAlchemy Models for the Dataset Store
"""

from .base import Base, init_models, make_engine, make_session_factory
from .dataset import Dataset, RejectedLine, StudyRecordRow

__all__ = [
    "Base",
    "init_models",
    "make_engine",
    "make_session_factory",
    "Dataset",
    "RejectedLine",
    "StudyRecordRow",
]
