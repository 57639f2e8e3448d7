"""
metrics.py

Outcome of one simulated run. Every counter is filled in by the harness;
to_row flattens the record into the stable column set used by the metrics
CSV, the sweep table and the runs table of the Store.
"""

import dataclasses
import math
import typing

COLUMNS = [
    "seed",
    "attackers",
    "attackers_revoked",
    "false_revocations",
    "revocation_latency_mean",
    "revocation_latency_max",
    "revocation_latency_ticks",
    "reports_generated",
    "reports_committed",
    "reports_aggregated",
    "reports_rejected_cluster",
    "reports_rejected_rsu",
    "reports_rejected_audit",
    "trust_statements",
    "beacons_sent",
    "ledger_bytes",
    "naive_edr_bytes",
    "dedup_ratio",
    "bft_committed",
    "bft_failed",
    "conflicting_certificates",
    "degenerate_groups",
    "cluster_blocks_committed",
    "cluster_blocks_rejected",
    "global_blocks",
    "max_active_pseudonyms",
    "max_sybil_endorsements",
]


@dataclasses.dataclass
class RunMetrics:
    seed: int = 0
    # lt_id -> ticks from its first false beacon to the global block
    # revoking it
    revocation_latency: typing.Dict[str, int] = dataclasses.field(
        default_factory=dict
    )
    attackers: int = 0
    attackers_revoked: int = 0
    false_revocations: int = 0
    reports_generated: int = 0
    reports_committed: int = 0
    reports_aggregated: int = 0
    reports_rejected_cluster: int = 0
    reports_rejected_rsu: int = 0
    reports_rejected_audit: int = 0
    trust_statements: int = 0
    beacons_sent: int = 0
    ledger_bytes: int = 0
    naive_edr_bytes: int = 0
    bft_committed: int = 0
    bft_failed: int = 0
    conflicting_certificates: int = 0
    degenerate_groups: int = 0
    cluster_blocks_committed: int = 0
    cluster_blocks_rejected: int = 0
    global_blocks: int = 0
    max_active_pseudonyms: int = 0
    max_sybil_endorsements: int = 0

    @property
    def dedup_ratio(self) -> float:
        if not self.naive_edr_bytes:
            return math.nan
        return self.ledger_bytes / self.naive_edr_bytes

    @property
    def revocation_latency_mean(self) -> float:
        if not self.revocation_latency:
            return math.nan
        values = self.revocation_latency.values()
        return sum(values) / len(values)

    @property
    def revocation_latency_max(self) -> float:
        return float(max(self.revocation_latency.values(), default=math.nan))

    @property
    def revocation_latency_ticks(self) -> str:
        """Per-attacker latency as "lt_id:ticks" pairs joined by ";"."""
        return ";".join(
            f"{lt_id}:{ticks}" for lt_id, ticks in sorted(self.revocation_latency.items())
        )

    def to_row(self) -> typing.Dict[str, typing.Any]:
        return {column: getattr(self, column) for column in COLUMNS}

    def __repr__(self):
        return (
            f"RunMetrics(seed={self.seed}, attackers_revoked="
            f"{self.attackers_revoked}/{self.attackers}, false_revocations="
            f"{self.false_revocations}, global_blocks={self.global_blocks})"
        )
