"""
Services Package

This package contains service layers that encapsulate storage and
provide clean interfaces for different operations.
"""

from .dataset_service import DatasetService, get_dataset_service

__all__ = [
    "DatasetService",
    "get_dataset_service",
]
