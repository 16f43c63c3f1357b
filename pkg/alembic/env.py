"""
Alembic environment for the replisum dataset store.

The store URL comes from REPLISUM_DATABASE_URL when set, otherwise from
alembic.ini. The app talks to SQLite through aiosqlite; migrations use the
plain sqlite driver and batch mode, since SQLite cannot alter columns in
place.
"""

from logging.config import fileConfig
import os

from sqlalchemy import engine_from_config, pool
from sqlalchemy.engine import make_url

from alembic import context

from src.models import Base, Dataset, RejectedLine, StudyRecordRow  # noqa: F401

config = context.config

if config.config_file_name is not None:
    fileConfig(config.config_file_name)


def store_url() -> str:
    """Synchronous form of the configured store URL."""
    raw = os.getenv("REPLISUM_DATABASE_URL") or config.get_main_option("sqlalchemy.url")
    url = make_url(raw)
    return url.set(drivername=url.get_backend_name()).render_as_string(hide_password=False)


def run_migrations_offline() -> None:
    """Emit the migration SQL instead of applying it."""
    context.configure(
        url=store_url(),
        target_metadata=Base.metadata,
        literal_binds=True,
        render_as_batch=True,
    )
    with context.begin_transaction():
        context.run_migrations()


def run_migrations_online() -> None:
    section = config.get_section(config.config_ini_section, {})
    section["sqlalchemy.url"] = store_url()
    engine = engine_from_config(section, prefix="sqlalchemy.", poolclass=pool.NullPool)

    with engine.connect() as connection:
        context.configure(connection=connection, target_metadata=Base.metadata, render_as_batch=True)
        with context.begin_transaction():
            context.run_migrations()


if context.is_offline_mode():
    run_migrations_offline()
else:
    run_migrations_online()
