from blackchain.db.base import Base
from sqlalchemy import (
    Column,
    DateTime,
    Float,
    ForeignKey,
    Integer,
    JSON,
    String,
)
from sqlalchemy.orm import relationship

import datetime


class Run(Base):
    """One simulated scenario and the metrics it produced."""

    __tablename__ = "runs"

    id = Column(Integer, primary_key=True)
    seed = Column(Integer, index=True)
    created_at = Column(DateTime, default=datetime.datetime.utcnow)
    out_dir = Column(String)
    config = Column(JSON)
    attackers = Column(Integer)
    attackers_revoked = Column(Integer)
    false_revocations = Column(Integer)
    revocation_latency_mean = Column(Float)
    revocation_latency_max = Column(Float)
    # lt_id -> ticks
    revocation_latency = Column(JSON)
    reports_generated = Column(Integer)
    reports_committed = Column(Integer)
    reports_aggregated = Column(Integer)
    ledger_bytes = Column(Integer)
    naive_edr_bytes = Column(Integer)
    dedup_ratio = Column(Float)
    bft_committed = Column(Integer)
    bft_failed = Column(Integer)
    global_blocks = Column(Integer)
    metrics = Column(JSON)

    audit_entries = relationship(
        "AuditRecord", back_populates="run", cascade="all, delete-orphan"
    )


class AuditRecord(Base):
    """A linkage resolution or revocation performed by an SCMS region."""

    __tablename__ = "audit_entries"

    id = Column(Integer, primary_key=True)
    run_id = Column(Integer, ForeignKey("runs.id"), index=True)
    tick = Column(Integer)
    region = Column(Integer)
    event = Column(String)
    p_id = Column(String)
    lt_id = Column(String, index=True)
    cause_tx_hash = Column(String)

    run = relationship("Run", back_populates="audit_entries")
