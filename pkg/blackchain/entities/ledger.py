"""
Entities of the public permissionless chain.
"""
from blackchain import crypto
from blackchain.entities.base import Base
from blackchain.entities.encoding import Decoder, Encoder
from blackchain.entities.rsu import AggregatedStatement

import typing

INTRODUCTION_TAG = 1
REVOCATION_TAG = 2


class ParticipantIdentity(typing.NamedTuple):
    """Public identity introduced on chain: an RSU, an MA or a group key."""

    kind: str
    name: str
    group_id: str
    public_key: bytes

    def encode(self, enc: Encoder):
        enc.text(self.kind).text(self.name).text(self.group_id)
        enc.blob(self.public_key)

    @classmethod
    def decode(cls, dec: Decoder) -> "ParticipantIdentity":
        return cls(dec.text(), dec.text(), dec.text(), dec.blob())


class Approval(typing.NamedTuple):
    approver_key: bytes
    signature: bytes

    def encode(self, enc: Encoder):
        enc.blob(self.approver_key).blob(self.signature)

    @classmethod
    def decode(cls, dec: Decoder) -> "Approval":
        return cls(dec.blob(), dec.blob())


def introduction_message(subject: ParticipantIdentity) -> bytes:
    enc = Encoder()
    enc.text("introduce")
    subject.encode(enc)
    return crypto.digest(enc.getvalue())


class IntroductionTx(Base):
    def __init__(
        self,
        subject: ParticipantIdentity,
        approvals: typing.List[Approval],
    ):
        self._subject = subject
        self._approvals = sorted(approvals, key=lambda a: a.approver_key)

    @property
    def subject(self) -> ParticipantIdentity:
        return self._subject

    @property
    def approvals(self) -> typing.List[Approval]:
        return self._approvals

    @property
    def tx_hash(self) -> bytes:
        return self.hash

    def valid_approvers(self) -> typing.Set[bytes]:
        message = introduction_message(self.subject)
        return {
            a.approver_key
            for a in self.approvals
            if crypto.verify(a.approver_key, message, a.signature)
        }

    def encode(self, enc: Encoder):
        enc.u8(INTRODUCTION_TAG)
        self.subject.encode(enc)
        enc.seq(self.approvals, lambda e, a: a.encode(e))

    @classmethod
    def decode(cls, dec: Decoder) -> "IntroductionTx":
        return cls(
            ParticipantIdentity.decode(dec), dec.seq(Approval.decode)
        )


class RevocationTx(Base):
    """Revocation decision: the RSU group's certified statement with all its
    evidence, references to the introduction of every signer and the
    suspects the deciding MA revokes."""

    def __init__(
        self,
        statement: AggregatedStatement,
        references: typing.List[bytes],
        decided_suspects: typing.List[str],
    ):
        self._statement = statement
        self._references = list(references)
        self._decided_suspects = sorted(set(decided_suspects))

    @property
    def statement(self) -> AggregatedStatement:
        return self._statement

    @property
    def report_bundle(self):
        return self._statement.evidence_bundle

    @property
    def group_signature(self):
        return self._statement.quorum_cert

    @property
    def references(self) -> typing.List[bytes]:
        return self._references

    @property
    def decided_suspects(self) -> typing.List[str]:
        return self._decided_suspects

    @property
    def tx_hash(self) -> bytes:
        return self.hash

    def encode(self, enc: Encoder):
        enc.u8(REVOCATION_TAG)
        self.statement.encode(enc)
        enc.seq(self.references, lambda e, r: e.blob(r))
        enc.seq(self.decided_suspects, lambda e, s: e.text(s))

    @classmethod
    def decode(cls, dec: Decoder) -> "RevocationTx":
        return cls(
            AggregatedStatement.decode(dec),
            dec.seq(lambda d: d.blob()),
            dec.seq(lambda d: d.text()),
        )


Transaction = typing.Union[IntroductionTx, RevocationTx]


def decode_tx(dec: Decoder) -> Transaction:
    tag = dec.u8()
    if tag == INTRODUCTION_TAG:
        return IntroductionTx.decode(dec)
    if tag == REVOCATION_TAG:
        return RevocationTx.decode(dec)
    raise ValueError(f"Unknown transaction tag {tag}.")


def txs_digest(txs: typing.List[Transaction]) -> bytes:
    enc = Encoder()
    enc.seq(txs, lambda e, tx: e.blob(tx.tx_hash))
    return crypto.digest(enc.getvalue())


class GlobalBlock(Base):
    def __init__(
        self,
        height: int,
        prev_hash: bytes,
        txs: typing.List[Transaction],
        difficulty_bits: int,
        nonce: int = 0,
        miner: str = "",
        pow_hash: bytes = b"",
    ):
        self._height = height
        self._prev_hash = prev_hash
        self._txs = list(txs)
        self._difficulty_bits = difficulty_bits
        self._nonce = nonce
        self._miner = miner
        self._pow_hash = pow_hash

    @property
    def height(self) -> int:
        return self._height

    @property
    def prev_hash(self) -> bytes:
        return self._prev_hash

    @property
    def txs(self) -> typing.List[Transaction]:
        return self._txs

    @property
    def difficulty_bits(self) -> int:
        return self._difficulty_bits

    @property
    def nonce(self) -> int:
        return self._nonce

    @property
    def miner(self) -> str:
        return self._miner

    @property
    def pow_hash(self) -> bytes:
        return self._pow_hash

    def header_bytes(self, nonce: int = None) -> bytes:
        enc = Encoder()
        enc.u64(self.height).blob(self.prev_hash)
        enc.blob(txs_digest(self.txs)).u8(self.difficulty_bits)
        enc.text(self.miner)
        enc.u64(self.nonce if nonce is None else nonce)
        return enc.getvalue()

    def revocations(self) -> typing.List[RevocationTx]:
        return [tx for tx in self.txs if isinstance(tx, RevocationTx)]

    def introductions(self) -> typing.List[IntroductionTx]:
        return [tx for tx in self.txs if isinstance(tx, IntroductionTx)]

    def encode(self, enc: Encoder):
        enc.raw(self.header_bytes()).blob(self.pow_hash)
        enc.seq(self.txs, lambda e, tx: tx.encode(e))

    @classmethod
    def decode(cls, dec: Decoder) -> "GlobalBlock":
        height = dec.u64()
        prev_hash = dec.blob()
        # The stored digest is recomputed from txs; a mismatch surfaces when
        # the verifier compares the re-encoded block with the stored bytes.
        dec.blob()
        difficulty_bits = dec.u8()
        miner = dec.text()
        nonce = dec.u64()
        pow_hash = dec.blob()
        txs = dec.seq(decode_tx)
        return cls(
            height, prev_hash, txs, difficulty_bits, nonce, miner, pow_hash
        )
