"""
Configuration

Settings come from environment variables; the CLI can additionally read a
key=value file whose entries act as flag defaults.
"""

from pathlib import Path
from typing import Dict, Optional
import logging
import os

from pydantic import BaseModel, Field

from .errors import UsageError

logger = logging.getLogger(__name__)

DEFAULT_DATABASE_URL = "sqlite+aiosqlite:///data/replisum.db"


class Settings(BaseModel):
    """Runtime settings resolved from the environment."""
    host: str = Field("localhost", description="HTTP bind host")
    port: int = Field(8000, ge=1, le=65535, description="HTTP bind port")
    database_url: str = Field(DEFAULT_DATABASE_URL, description="SQLAlchemy async URL of the dataset store")
    log_level: str = Field("INFO", description="Logging level name")
    seed: int = Field(20240101, ge=0, lt=2**64, description="Default simulation seed")
    workers: int = Field(1, ge=1, description="Default worker count for simulations and grid sweeps")


def load_settings() -> Settings:
    """Build settings from REPLISUM_* environment variables."""
    try:
        return Settings(
            host=os.getenv("REPLISUM_HOST", "localhost"),
            port=int(os.getenv("REPLISUM_PORT", 8000)),
            database_url=os.getenv("REPLISUM_DATABASE_URL", DEFAULT_DATABASE_URL),
            log_level=os.getenv("REPLISUM_LOG_LEVEL", "INFO").upper(),
            seed=int(os.getenv("REPLISUM_SEED", 20240101)),
            workers=int(os.getenv("REPLISUM_WORKERS", 1)),
        )
    except ValueError as e:
        raise UsageError(f"Invalid REPLISUM_* environment setting: {e}") from e


_settings_instance: Optional[Settings] = None

def get_settings() -> Settings:
    """Get or create the global settings instance."""
    global _settings_instance

    if _settings_instance is None:
        _settings_instance = load_settings()

    return _settings_instance


def read_config_file(path: str | Path) -> Dict[str, str]:
    """
    Parse a key=value configuration file.

    Blank lines and lines starting with '#' are ignored. Keys are normalised
    to flag destinations (dashes become underscores, leading dashes dropped).

    Raises:
        UsageError: If the file is missing or a line has no '='.
    """
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"Configuration file not found: {path}")

    entries: Dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip().lstrip("-").replace("-", "_")
        if not key:
            raise UsageError(f"{path}:{lineno}: empty key")
        entries[key] = value.strip()

    logger.debug(f"Read {len(entries)} configuration entries from {path}")
    return entries
