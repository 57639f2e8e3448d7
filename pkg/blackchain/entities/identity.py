"""
Identity entities issued by the SCMS authorities: long-term certificates,
pseudonym certificates, the pseudonym pool a vehicle holds and the
revocation state of a region.
"""
from blackchain import crypto
from blackchain.entities.base import Base
from blackchain.entities.encoding import Decoder, Encoder
from blackchain.entities.node import NodeId

import typing


class LongTermCertificate(Base):
    _frozen = False

    def __init__(
        self,
        holder: NodeId,
        lt_id: str,
        public_key: bytes,
        region: int,
        revoked: bool = False,
    ):
        self._holder = holder
        self._lt_id = lt_id
        self._public_key = public_key
        self._region = region
        self._revoked = revoked

    @property
    def holder(self) -> NodeId:
        return self._holder

    @property
    def lt_id(self) -> str:
        return self._lt_id

    @property
    def public_key(self) -> bytes:
        return self._public_key

    @property
    def region(self) -> int:
        return self._region

    @property
    def revoked(self) -> bool:
        return self._revoked

    def mark_revoked(self):
        """Revocation is one-way."""
        self._revoked = True

    def encode(self, enc: Encoder):
        self.holder.encode(enc)
        enc.text(self.lt_id).blob(self.public_key).u32(self.region)
        enc.boolean(self.revoked)


class Pseudonym(Base):
    """A pseudonym certificate. This is what gets attached to every signed
    message; the private key stays in the owner's PseudonymPool."""

    def __init__(
        self,
        p_id: str,
        public_key: bytes,
        valid_from: int,
        valid_to: int,
        region: int,
        linkage_token: bytes,
        pca_signature: bytes = b"",
    ):
        if not valid_from < valid_to:
            raise ValueError("Pseudonym validity must satisfy from < to.")
        self._p_id = p_id
        self._public_key = public_key
        self._valid_from = valid_from
        self._valid_to = valid_to
        self._region = region
        self._linkage_token = linkage_token
        self._pca_signature = pca_signature

    @property
    def p_id(self) -> str:
        return self._p_id

    @property
    def public_key(self) -> bytes:
        return self._public_key

    @property
    def valid_from(self) -> int:
        return self._valid_from

    @property
    def valid_to(self) -> int:
        return self._valid_to

    @property
    def region(self) -> int:
        return self._region

    @property
    def linkage_token(self) -> bytes:
        return self._linkage_token

    @property
    def pca_signature(self) -> bytes:
        return self._pca_signature

    def valid_at(self, t: int) -> bool:
        return self._valid_from <= t <= self._valid_to

    def signing_bytes(self) -> bytes:
        enc = Encoder()
        enc.text(self.p_id).blob(self.public_key)
        enc.u64(self.valid_from).u64(self.valid_to).u32(self.region)
        enc.blob(self.linkage_token)
        return enc.getvalue()

    def verify_issuer(self, pca_public_key: bytes) -> bool:
        return crypto.verify(
            pca_public_key, self.signing_bytes(), self.pca_signature
        )

    def encode(self, enc: Encoder):
        enc.raw(self.signing_bytes()).blob(self.pca_signature)

    @classmethod
    def decode(cls, dec: Decoder) -> "Pseudonym":
        return cls(
            p_id=dec.text(),
            public_key=dec.blob(),
            valid_from=dec.u64(),
            valid_to=dec.u64(),
            region=dec.u32(),
            linkage_token=dec.blob(),
            pca_signature=dec.blob(),
        )


class PseudonymPool(object):
    """Ordered pseudonyms of one long-term identity together with the
    private keys the owner signs with."""

    def __init__(self, owner: str):
        self.owner = owner
        self.pseudonyms: typing.List[Pseudonym] = []
        self._keys: typing.Dict[str, crypto.KeyPair] = {}

    def extend(self, issued: typing.List[typing.Tuple[Pseudonym, crypto.KeyPair]]):
        for pseudonym, keypair in issued:
            self.pseudonyms.append(pseudonym)
            self._keys[pseudonym.p_id] = keypair

    def active(self, t: int) -> typing.List[Pseudonym]:
        return [p for p in self.pseudonyms if p.valid_at(t)]

    def keypair(self, p_id: str) -> crypto.KeyPair:
        return self._keys[p_id]

    def __contains__(self, p_id: str) -> bool:
        return p_id in self._keys

    @property
    def covered_until(self) -> int:
        if not self.pseudonyms:
            return -1
        return self.pseudonyms[-1].valid_to

    def __len__(self):
        return len(self.pseudonyms)

    def __repr__(self):
        return f"PseudonymPool({self.owner}, {len(self)} pseudonyms)"


class RevocationState(object):
    """Revocation sets of one region. All three only ever grow; the tick of
    each revocation is kept so validators can ask "revoked at tick t"."""

    def __init__(self):
        self._revoked_lt: typing.Dict[str, int] = {}
        self._revoked_pseudonyms: typing.Dict[str, int] = {}
        self._ra_blacklist: typing.Set[str] = set()

    @property
    def revoked_lt(self) -> typing.FrozenSet[str]:
        return frozenset(self._revoked_lt)

    @property
    def revoked_pseudonyms(self) -> typing.FrozenSet[str]:
        return frozenset(self._revoked_pseudonyms)

    @property
    def ra_blacklist(self) -> typing.FrozenSet[str]:
        return frozenset(self._ra_blacklist)

    def revoke_lt(self, lt_id: str, tick: int):
        self._revoked_lt.setdefault(lt_id, tick)
        self._ra_blacklist.add(lt_id)

    def revoke_pseudonym(self, p_id: str, tick: int):
        self._revoked_pseudonyms.setdefault(p_id, tick)

    def is_blacklisted(self, lt_id: str) -> bool:
        return lt_id in self._ra_blacklist

    def pseudonym_revoked(self, p_id: str, at: typing.Optional[int] = None) -> bool:
        """True when p_id is revoked (at or before tick `at`, if given)."""
        tick = self._revoked_pseudonyms.get(p_id)
        if tick is None:
            return False
        return at is None or tick <= at

    def lt_revoked_at(self, lt_id: str) -> typing.Optional[int]:
        return self._revoked_lt.get(lt_id)

    def __repr__(self):
        return (
            f"RevocationState(lt={len(self._revoked_lt)}, "
            f"pseudonyms={len(self._revoked_pseudonyms)})"
        )
