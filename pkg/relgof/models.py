# relgof/models.py

from sqlalchemy import (
    JSON,
    Boolean,
    Column,
    DateTime,
    Float,
    ForeignKey,
    Integer,
    String,
    Text,
    UniqueConstraint,
    func,
)
from sqlalchemy.orm import relationship

from relgof.database import Base


class Run(Base):
    """One stored trials run: the config echo plus its summary."""

    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, index=True)
    created_at = Column(DateTime(timezone=True), server_default=func.now(), nullable=False)
    problem = Column(String, nullable=False, index=True)
    method = Column(String, nullable=False, index=True)
    J = Column(Integer, nullable=False)
    alpha = Column(Float, nullable=False)
    n = Column(Integer, nullable=False)
    trials = Column(Integer, nullable=False)
    rejections = Column(Integer, nullable=False)
    failures = Column(Integer, nullable=False, default=0)
    rejection_rate = Column(Float, nullable=False)
    ci_low = Column(Float, nullable=False)
    ci_high = Column(Float, nullable=False)
    config = Column(JSON)

    records = relationship(
        "TrialRecordRow",
        back_populates="run",
        cascade="all, delete-orphan",
        order_by="TrialRecordRow.trial_index",
    )


class TrialRecordRow(Base):
    __tablename__ = "trial_records"
    __table_args__ = (
        UniqueConstraint('run_id', 'trial_index', name='uix_run_trial'),
    )

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("runs.id", ondelete="CASCADE"), nullable=False, index=True)
    trial_index = Column(Integer, nullable=False)
    method = Column(String, nullable=False)
    stat = Column(Float)
    threshold = Column(Float)  # null when the variance was degenerate
    p_value = Column(Float)
    reject = Column(Boolean, nullable=False, default=False)
    degenerate = Column(Boolean, nullable=False, default=False)
    wall_time_seconds = Column(Float)
    error = Column(Text)

    run = relationship("Run", back_populates="records")
