"""
SQLAlchemy ORM models for recorded check runs.
"""

from datetime import datetime, timezone

from sqlalchemy import DateTime, ForeignKey, Integer, String, Text
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, relationship


class Base(DeclarativeBase):
    """Base class for all models"""

    pass


class Run(Base):
    """One command-line invocation"""

    __tablename__ = "runs"

    id: Mapped[int] = mapped_column(primary_key=True)
    verb: Mapped[str] = mapped_column(String(32))
    surface: Mapped[str] = mapped_column(String(255))
    options: Mapped[str] = mapped_column(Text, default="{}")  # JSON of parsed flags
    status: Mapped[str] = mapped_column(
        String(20), default="running"
    )  # running, passed, failed, error
    exit_code: Mapped[int | None] = mapped_column(Integer, nullable=True)
    started_at: Mapped[datetime] = mapped_column(
        DateTime, default=lambda: datetime.now(timezone.utc)
    )
    completed_at: Mapped[datetime | None] = mapped_column(DateTime, nullable=True)

    checks: Mapped[list["RunCheck"]] = relationship(
        back_populates="run", cascade="all, delete-orphan"
    )

    def __repr__(self):
        return f"<Run(id={self.id}, verb='{self.verb}', status='{self.status}')>"


class RunCheck(Base):
    """A single verdict line produced by a run"""

    __tablename__ = "run_checks"

    id: Mapped[int] = mapped_column(primary_key=True)
    run_id: Mapped[int] = mapped_column(ForeignKey("runs.id"))
    name: Mapped[str] = mapped_column(String(255))
    status: Mapped[str] = mapped_column(String(20))  # passed, failed, error
    detail: Mapped[str] = mapped_column(Text, default="")
    probabilistic: Mapped[bool] = mapped_column(default=False)

    run: Mapped["Run"] = relationship(back_populates="checks")

    def __repr__(self):
        return f"<RunCheck(id={self.id}, name='{self.name}', status='{self.status}')>"


__all__ = [
    "Base",
    "Run",
    "RunCheck",
]
