from blackchain import crypto
from blackchain.entities.base import Base
from blackchain.entities.beacon import MisbehaviorReport
from blackchain.entities.encoding import Encoder
from blackchain.entities.identity import Pseudonym

import typing


def cluster_genesis_hash(cluster_id: str) -> bytes:
    """prev_hash of the first block in a cluster's chain."""
    return crypto.digest(b"cluster-genesis:" + cluster_id.encode("utf-8"))


class Cluster(Base):
    def __init__(
        self,
        members: typing.Iterable[str],
        head: str,
        formed_at: int,
    ):
        self._members = tuple(sorted(members))
        if head not in self._members:
            raise ValueError(f"Cluster head {head} is not a member.")
        self._head = head
        self._formed_at = formed_at
        self._cluster_id = crypto.digest(self._identity_bytes())[:8].hex()

    def _identity_bytes(self) -> bytes:
        enc = Encoder()
        enc.u64(self._formed_at).seq(self._members, lambda e, m: e.text(m))
        return enc.getvalue()

    @property
    def cluster_id(self) -> str:
        return self._cluster_id

    @property
    def members(self) -> typing.Tuple[str, ...]:
        return self._members

    @property
    def head(self) -> str:
        return self._head

    @property
    def formed_at(self) -> int:
        return self._formed_at

    @property
    def quorum(self) -> int:
        return len(self._members) // 2 + 1

    def encode(self, enc: Encoder):
        enc.text(self.cluster_id).text(self.head).raw(self._identity_bytes())


class Endorsement(Base):
    """A member's signature over a candidate block hash."""

    def __init__(
        self, certificate: Pseudonym, block_hash: bytes, signature: bytes
    ):
        self._certificate = certificate
        self._block_hash = block_hash
        self._signature = signature

    @classmethod
    def create(
        cls,
        certificate: Pseudonym,
        keypair: crypto.KeyPair,
        block_hash: bytes,
    ) -> "Endorsement":
        return cls(certificate, block_hash, keypair.sign(block_hash))

    @property
    def certificate(self) -> Pseudonym:
        return self._certificate

    @property
    def block_hash(self) -> bytes:
        return self._block_hash

    @property
    def signature(self) -> bytes:
        return self._signature

    @property
    def voter(self) -> str:
        return self._certificate.p_id

    def verify(self) -> bool:
        return crypto.verify(
            self.certificate.public_key, self.block_hash, self.signature
        )

    def encode(self, enc: Encoder):
        self.certificate.encode(enc)
        enc.blob(self.block_hash).blob(self.signature)


class ClusterBlock(Base):
    """Block of a permissioned per-cluster chain. Endorsements are collected
    after the candidate is proposed, so they are excluded from block_hash."""

    _frozen = False

    def __init__(
        self,
        cluster_id: str,
        height: int,
        prev_hash: bytes,
        members: typing.Iterable[str],
        reports: typing.List[MisbehaviorReport],
        revocation_votes: typing.Dict[str, typing.Iterable[str]],
        tick: int,
        proposer: str,
        votes: typing.List[Endorsement] = None,
    ):
        self._cluster_id = cluster_id
        self._height = height
        self._prev_hash = prev_hash
        self._members = tuple(sorted(members))
        self._reports = list(reports)
        self._revocation_votes = {
            suspect: tuple(sorted(set(voters)))
            for suspect, voters in sorted(revocation_votes.items())
        }
        self._tick = tick
        self._proposer = proposer
        self._votes = list(votes or [])
        self._block_hash = crypto.digest(self.signing_bytes())

    @property
    def cluster_id(self) -> str:
        return self._cluster_id

    @property
    def height(self) -> int:
        return self._height

    @property
    def prev_hash(self) -> bytes:
        return self._prev_hash

    @property
    def members(self) -> typing.Tuple[str, ...]:
        return self._members

    @property
    def reports(self) -> typing.List[MisbehaviorReport]:
        return self._reports

    @property
    def revocation_votes(self) -> typing.Dict[str, typing.Tuple[str, ...]]:
        return self._revocation_votes

    @property
    def tick(self) -> int:
        return self._tick

    @property
    def proposer(self) -> str:
        return self._proposer

    @property
    def votes(self) -> typing.List[Endorsement]:
        return self._votes

    @property
    def block_hash(self) -> bytes:
        return self._block_hash

    @property
    def quorum(self) -> int:
        return len(self._members) // 2 + 1

    def add_vote(self, endorsement: Endorsement):
        if endorsement.block_hash != self._block_hash:
            raise ValueError("Endorsement is for a different block.")
        if endorsement.voter in {v.voter for v in self._votes}:
            return
        self._votes.append(endorsement)

    def distinct_endorsers(self) -> typing.Set[str]:
        return {
            v.voter
            for v in self._votes
            if v.voter in self._members
            and v.block_hash == self._block_hash
        }

    @property
    def committed(self) -> bool:
        return len(self.distinct_endorsers()) >= self.quorum

    def signing_bytes(self) -> bytes:
        enc = Encoder()
        enc.text(self.cluster_id).u64(self.height).blob(self.prev_hash)
        enc.seq(self.members, lambda e, m: e.text(m))
        enc.seq(self.reports, lambda e, r: r.encode(e))
        enc.seq(
            self.revocation_votes.items(),
            lambda e, kv: e.text(kv[0]).seq(kv[1], lambda e2, v: e2.text(v)),
        )
        enc.u64(self.tick).text(self.proposer)
        return enc.getvalue()

    def encode(self, enc: Encoder):
        enc.raw(self.signing_bytes())
        enc.seq(
            sorted(self.votes, key=lambda v: v.voter),
            lambda e, v: v.encode(e),
        )
