from blackchain.db.base import Base, _sql_value
from blackchain.db.models import AuditRecord, Run
from blackchain.entities.metrics import RunMetrics

from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker

import logging
import typing

_RUN_COLUMNS = [
    "attackers",
    "attackers_revoked",
    "false_revocations",
    "revocation_latency_mean",
    "revocation_latency_max",
    "reports_generated",
    "reports_committed",
    "reports_aggregated",
    "ledger_bytes",
    "naive_edr_bytes",
    "dedup_ratio",
    "bft_committed",
    "bft_failed",
    "global_blocks",
]


class Store(object):
    """Helper methods to interact with the run database."""

    def __init__(self, uri: str, delete_first: bool = False):
        """
        Opens (and creates if needed) the run database.

        Args:
            uri (str): SQLAlchemy database URI. The literal "test" selects
                an in-memory SQLite database.
            delete_first (bool): Whether all the tables in the db should be
                deleted.
        """
        if uri.lower().strip() == "test":
            uri = "sqlite:///:memory:"

        self.engine = create_engine(uri)

        if delete_first:
            Base.metadata.drop_all(self.engine)
        Base.metadata.create_all(self.engine)

        self.Session = sessionmaker(self.engine)
        self.session = self.Session()

    def __del__(self):
        """On destruction, close session."""
        session = getattr(self, "session", None)
        if session is not None:
            session.close()

    def record_run(
        self,
        config: typing.Mapping[str, typing.Any],
        metrics: RunMetrics,
        audit_entries: typing.Iterable = (),
    ) -> int:
        """Stores a finished run with its SCMS audit entries. Returns the
        run id."""
        row = metrics.to_row()
        run = Run(
            seed=metrics.seed,
            out_dir=config.get("out"),
            config=dict(config),
            revocation_latency=dict(metrics.revocation_latency),
            metrics={k: _sql_value(v) for k, v in row.items()},
            **{k: _sql_value(row[k]) for k in _RUN_COLUMNS},
        )
        run.audit_entries = [
            AuditRecord(
                tick=e.tick,
                region=e.region,
                event=e.event,
                p_id=e.p_id,
                lt_id=e.lt_id,
                cause_tx_hash=e.cause_tx_hash,
            )
            for e in audit_entries
        ]
        self.session.add(run)
        self.session.commit()
        logging.info(
            f"Recorded run {run.id} (seed {run.seed}) with "
            f"{len(run.audit_entries)} audit entries."
        )
        return run.id

    def get_run(self, run_id: int) -> typing.Optional[Run]:
        return self.session.query(Run).filter(Run.id == run_id).first()

    def recent_runs(self, limit: int = 10) -> typing.List[Run]:
        """Most recent runs first."""
        return (
            self.session.query(Run)
            .order_by(Run.id.desc())
            .limit(limit)
            .all()
        )

    def audit_trail(self, lt_id: str) -> typing.List[AuditRecord]:
        """Every recorded resolution and revocation of lt_id."""
        return (
            self.session.query(AuditRecord)
            .filter(AuditRecord.lt_id == lt_id)
            .order_by(AuditRecord.run_id, AuditRecord.tick, AuditRecord.id)
            .all()
        )
