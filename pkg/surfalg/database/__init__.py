from .models import Base, Run, RunCheck
from .engine import configure_engine, init_db, get_db_context, SessionLocal

__all__ = [
    "Base",
    "Run",
    "RunCheck",
    "configure_engine",
    "init_db",
    "SessionLocal",
    "get_db_context",
]
