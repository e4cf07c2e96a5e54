"""
Database initialization and session management.
"""

import logging
from contextlib import contextmanager

from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker

from surfalg.config import CONFIG

from .models import Base

logger = logging.getLogger(__name__)

engine = None

SessionLocal = sessionmaker(autocommit=False, autoflush=False)


def configure_engine(url: str | None = None):
    """Bind the session factory to `url`, defaulting to database.url"""
    global engine
    url = url or CONFIG.get("database.url", "sqlite:///./surfalg.db")
    connect_args = {"check_same_thread": False} if url.startswith("sqlite") else {}
    engine = create_engine(url, echo=False, connect_args=connect_args)
    SessionLocal.configure(bind=engine)
    logger.debug(f"[Database] bound to {url}")
    return engine


def init_db(url: str | None = None):
    """Initialize database, create all tables"""
    if engine is None or url is not None:
        configure_engine(url)
    try:
        Base.metadata.create_all(bind=engine)
    except Exception as e:
        logger.debug(f"[Database] initialization: {e}")


@contextmanager
def get_db_context():
    """Context manager for database sessions"""
    if engine is None:
        init_db()
    db = SessionLocal()
    try:
        yield db
        db.commit()
    except Exception:
        db.rollback()
        raise
    finally:
        db.close()
