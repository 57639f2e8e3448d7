from blackchain.entities.beacon import (
    Beacon,
    CheckName,
    KinematicState,
    MisbehaviorReport,
    TrustStatement,
)
from blackchain.entities.cluster import Cluster, ClusterBlock, Endorsement
from blackchain.entities.identity import (
    LongTermCertificate,
    Pseudonym,
    PseudonymPool,
    RevocationState,
)
from blackchain.entities.ledger import (
    GlobalBlock,
    IntroductionTx,
    ParticipantIdentity,
    RevocationTx,
)
from blackchain.entities.metrics import RunMetrics
from blackchain.entities.node import NodeId, NodeKind, Position
from blackchain.entities.rsu import (
    AggregatedStatement,
    QuorumSignature,
    RevocationCandidate,
    RsuGroup,
)

__all__ = [
    "AggregatedStatement",
    "Beacon",
    "CheckName",
    "Cluster",
    "ClusterBlock",
    "Endorsement",
    "GlobalBlock",
    "IntroductionTx",
    "KinematicState",
    "LongTermCertificate",
    "MisbehaviorReport",
    "NodeId",
    "NodeKind",
    "ParticipantIdentity",
    "Position",
    "Pseudonym",
    "PseudonymPool",
    "QuorumSignature",
    "RevocationCandidate",
    "RevocationState",
    "RevocationTx",
    "RsuGroup",
    "RunMetrics",
    "TrustStatement",
]
