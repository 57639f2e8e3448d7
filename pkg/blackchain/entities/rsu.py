from blackchain import crypto
from blackchain.entities.base import Base
from blackchain.entities.beacon import MisbehaviorReport
from blackchain.entities.encoding import Decoder, Encoder
from blackchain.entities.node import NodeId

import typing


def fault_tolerance(n: int) -> int:
    """f for a group of n members."""
    return (n - 1) // 3


def bft_quorum(n: int) -> int:
    return 2 * fault_tolerance(n) + 1


class RsuGroup(Base):
    def __init__(
        self,
        group_id: str,
        members: typing.Iterable[NodeId],
        grid_cell: typing.Tuple[int, int],
    ):
        self._members = tuple(sorted(members))
        if not self._members:
            raise ValueError("An RSU group needs at least one member.")
        self._group_id = group_id
        self._grid_cell = tuple(grid_cell)

    @property
    def group_id(self) -> str:
        return self._group_id

    @property
    def members(self) -> typing.Tuple[NodeId, ...]:
        return self._members

    @property
    def grid_cell(self) -> typing.Tuple[int, int]:
        return self._grid_cell

    @property
    def f(self) -> int:
        return fault_tolerance(len(self._members))

    @property
    def quorum(self) -> int:
        return bft_quorum(len(self._members))

    @property
    def degenerate(self) -> bool:
        return self.f == 0

    def leader(self, height: int) -> NodeId:
        return self._members[height % len(self._members)]

    def encode(self, enc: Encoder):
        enc.text(self.group_id)
        enc.seq(self.members, lambda e, m: m.encode(e))
        enc.i64(self.grid_cell[0]).i64(self.grid_cell[1])


class RevocationCandidate(typing.NamedTuple):
    suspect_p_id: str
    report_hashes: typing.Tuple[bytes, ...]
    locally_flagged: bool = False

    def encode(self, enc: Encoder):
        enc.text(self.suspect_p_id)
        enc.seq(self.report_hashes, lambda e, h: e.blob(h))
        enc.boolean(self.locally_flagged)

    @classmethod
    def decode(cls, dec: Decoder) -> "RevocationCandidate":
        return cls(dec.text(), tuple(dec.seq(lambda d: d.blob())), dec.boolean())


class QuorumSignature(typing.NamedTuple):
    signer: NodeId
    public_key: bytes
    signature: bytes

    def verify(self, statement_hash: bytes) -> bool:
        return crypto.verify(self.public_key, statement_hash, self.signature)

    def encode(self, enc: Encoder):
        self.signer.encode(enc)
        enc.blob(self.public_key).blob(self.signature)

    @classmethod
    def decode(cls, dec: Decoder) -> "QuorumSignature":
        return cls(NodeId.decode(dec), dec.blob(), dec.blob())


class AggregatedStatement(Base):
    """Partial state of an RSU group for one height, certified by a quorum
    of the group's members."""

    def __init__(
        self,
        group_id: str,
        height: int,
        included_blocks: typing.List[bytes],
        revocation_candidates: typing.List[RevocationCandidate],
        evidence_bundle: typing.List[MisbehaviorReport],
        quorum_cert: typing.List[QuorumSignature] = None,
    ):
        self._group_id = group_id
        self._height = height
        self._included_blocks = list(included_blocks)
        self._revocation_candidates = list(revocation_candidates)
        self._evidence_bundle = list(evidence_bundle)
        self._quorum_cert = list(quorum_cert or [])
        self._statement_hash = crypto.digest(self.signing_bytes())

    @property
    def group_id(self) -> str:
        return self._group_id

    @property
    def height(self) -> int:
        return self._height

    @property
    def included_blocks(self) -> typing.List[bytes]:
        return self._included_blocks

    @property
    def revocation_candidates(self) -> typing.List[RevocationCandidate]:
        return self._revocation_candidates

    @property
    def evidence_bundle(self) -> typing.List[MisbehaviorReport]:
        return self._evidence_bundle

    @property
    def quorum_cert(self) -> typing.List[QuorumSignature]:
        return self._quorum_cert

    @property
    def statement_hash(self) -> bytes:
        return self._statement_hash

    def with_certificate(
        self, quorum_cert: typing.List[QuorumSignature]
    ) -> "AggregatedStatement":
        return AggregatedStatement(
            self.group_id,
            self.height,
            self.included_blocks,
            self.revocation_candidates,
            self.evidence_bundle,
            sorted(quorum_cert, key=lambda s: s.signer),
        )

    def report(self, report_hash: bytes) -> typing.Optional[MisbehaviorReport]:
        for report in self.evidence_bundle:
            if report.hash == report_hash:
                return report
        return None

    def signing_bytes(self) -> bytes:
        enc = Encoder()
        enc.text(self.group_id).u64(self.height)
        enc.seq(self.included_blocks, lambda e, h: e.blob(h))
        enc.seq(self.revocation_candidates, lambda e, c: c.encode(e))
        enc.seq(self.evidence_bundle, lambda e, r: r.encode(e))
        return enc.getvalue()

    def encode(self, enc: Encoder):
        enc.raw(self.signing_bytes())
        enc.seq(self.quorum_cert, lambda e, s: s.encode(e))

    @classmethod
    def decode(cls, dec: Decoder) -> "AggregatedStatement":
        return cls(
            group_id=dec.text(),
            height=dec.u64(),
            included_blocks=dec.seq(lambda d: d.blob()),
            revocation_candidates=dec.seq(RevocationCandidate.decode),
            evidence_bundle=dec.seq(MisbehaviorReport.decode),
            quorum_cert=dec.seq(QuorumSignature.decode),
        )
