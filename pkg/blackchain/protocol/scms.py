"""
Security Credential Management System of one region.

The five authorities are modeled as one service with separate roles: the
ECA enrolls long-term identities, the RA gates pseudonym issuance on the
blacklist, the PCA signs pseudonym certificates, the LA holds the sealed
linkage table and the MA role authorizes linkage resolution through a
committed revocation on the global chain.
"""
from blackchain import crypto
from blackchain.entities.identity import (
    LongTermCertificate,
    Pseudonym,
    PseudonymPool,
    RevocationState,
)
from blackchain.entities.node import NodeId
from blackchain.entities.utils import (
    AuthorizationError,
    DuplicateEnrollmentError,
    IssuanceRefusedError,
    UnknownIdentityError,
)

import hmac
import logging
import typing


class AuditEntry(typing.NamedTuple):
    tick: int
    region: int
    event: str
    p_id: str
    lt_id: str
    cause_tx_hash: str


AUDIT_COLUMNS = list(AuditEntry._fields)


def check_window(window_ticks: int, overlap_ticks: int):
    """Windows must overlap partially and never let three windows meet."""
    if not window_ticks > overlap_ticks > 0:
        raise ValueError(
            "Pseudonym windows need window_ticks > overlap_ticks > 0."
        )
    if 2 * overlap_ticks >= window_ticks:
        raise ValueError(
            "2 * overlap_ticks must stay below window_ticks, otherwise "
            "three pseudonyms could be valid at once."
        )


class Scms(object):
    def __init__(self, region: int, rng):
        self.region = region
        self._rng = rng
        self._pca = crypto.KeyPair.from_rng(rng)
        self._la_secret = rng.bytes(32)
        self._certificates: typing.Dict[str, LongTermCertificate] = {}
        self._enrolled: typing.Dict[NodeId, str] = {}
        self._pools: typing.Dict[str, PseudonymPool] = {}
        self._pseudonyms: typing.Dict[str, Pseudonym] = {}
        self._linkage: typing.Dict[bytes, str] = {}
        self._issued_count: typing.Dict[str, int] = {}
        self.revocations = RevocationState()
        self.audit_log: typing.List[AuditEntry] = []

    @property
    def pca_public_key(self) -> bytes:
        return self._pca.public_key

    # ----------------------------- ECA ----------------------------- #

    def enroll(self, node: NodeId) -> LongTermCertificate:
        if node in self._enrolled:
            raise DuplicateEnrollmentError(f"{node} is already enrolled.")
        keypair = crypto.KeyPair.from_rng(self._rng)
        lt_id = f"lt{self.region}-{crypto.digest(keypair.public_key)[:6].hex()}"
        while lt_id in self._certificates:
            lt_id += "x"
        certificate = LongTermCertificate(
            node, lt_id, keypair.public_key, self.region
        )
        self._certificates[lt_id] = certificate
        self._enrolled[node] = lt_id
        self._pools[lt_id] = PseudonymPool(lt_id)
        logging.debug(f"Region {self.region} enrolled {node} as {lt_id}.")
        return certificate

    def certificate(self, lt_id: str) -> LongTermCertificate:
        if lt_id not in self._certificates:
            raise UnknownIdentityError(f"Unknown long-term id {lt_id}.")
        return self._certificates[lt_id]

    def lt_id_of(self, node: NodeId) -> str:
        if node not in self._enrolled:
            raise UnknownIdentityError(f"{node} is not enrolled.")
        return self._enrolled[node]

    # -------------------------- RA and PCA -------------------------- #

    def issue_pseudonyms(
        self,
        lt_id: str,
        horizon_ticks: int,
        window_ticks: int,
        overlap_ticks: int,
        now: int = 0,
    ) -> typing.List[Pseudonym]:
        """Extends lt_id's pool so it covers [now, now + horizon_ticks] with
        windows of window_ticks that overlap their predecessor by
        overlap_ticks."""
        check_window(window_ticks, overlap_ticks)
        pool = self.pool(lt_id)
        if self.revocations.is_blacklisted(lt_id):
            raise IssuanceRefusedError(
                f"RA refuses pseudonyms for blacklisted {lt_id}."
            )

        step = window_ticks - overlap_ticks
        start = now
        if pool.pseudonyms:
            start = max(pool.pseudonyms[-1].valid_from + step, now)
        end = now + horizon_ticks

        issued = []
        covered = pool.covered_until
        while covered < end:
            pseudonym, keypair = self._sign_pseudonym(
                lt_id, start, start + window_ticks
            )
            issued.append((pseudonym, keypair))
            covered = pseudonym.valid_to
            start += step
        pool.extend(issued)
        return [p for p, _ in issued]

    def _sign_pseudonym(
        self, lt_id: str, valid_from: int, valid_to: int
    ) -> typing.Tuple[Pseudonym, crypto.KeyPair]:
        keypair = crypto.KeyPair.from_rng(self._rng)
        count = self._issued_count.get(lt_id, 0)
        self._issued_count[lt_id] = count + 1
        token = hmac.new(
            self._la_secret, f"{lt_id}/{count}".encode("utf-8"), "sha256"
        ).digest()
        p_id = crypto.digest(keypair.public_key)[:8].hex()
        unsigned = Pseudonym(
            p_id, keypair.public_key, valid_from, valid_to, self.region, token
        )
        pseudonym = Pseudonym(
            p_id,
            keypair.public_key,
            valid_from,
            valid_to,
            self.region,
            token,
            self._pca.sign(unsigned.signing_bytes()),
        )
        self._pseudonyms[p_id] = pseudonym
        self._linkage[token] = lt_id
        return pseudonym, keypair

    def pool(self, lt_id: str) -> PseudonymPool:
        if lt_id not in self._pools:
            raise UnknownIdentityError(f"Unknown long-term id {lt_id}.")
        return self._pools[lt_id]

    def active_pseudonyms(self, lt_id: str, t: int) -> typing.List[Pseudonym]:
        return self.pool(lt_id).active(t)

    def issued(self, p_id: str) -> bool:
        return p_id in self._pseudonyms

    # ------------------------------ LA ------------------------------ #

    def resolve_linkage(
        self, p_id: str, tx_hash: bytes, ledger, tick: int = 0
    ) -> str:
        """Reveals the owner of p_id. Only a revocation committed on the
        global chain that names p_id authorizes the lookup."""
        tx = ledger.find_revocation(tx_hash) if ledger is not None else None
        if tx is None or p_id not in tx.decided_suspects:
            raise AuthorizationError(
                f"No committed revocation authorizes linking {p_id}."
            )
        if p_id not in self._pseudonyms:
            raise UnknownIdentityError(
                f"Region {self.region} never issued pseudonym {p_id}."
            )
        lt_id = self._linkage[self._pseudonyms[p_id].linkage_token]
        self.audit_log.append(
            AuditEntry(tick, self.region, "resolve", p_id, lt_id, tx_hash.hex())
        )
        return lt_id

    # ------------------------------ MA ------------------------------ #

    def revoke(self, lt_id: str, tick: int = 0, cause: bytes = b"") -> RevocationState:
        """Blacklists lt_id and revokes its unexpired pseudonyms. Foreign
        long-term ids (cross-border revocation) are blacklisted only."""
        if lt_id in self.revocations.revoked_lt:
            return self.revocations
        self.revocations.revoke_lt(lt_id, tick)
        revoked = []
        if lt_id in self._certificates:
            self._certificates[lt_id].mark_revoked()
            for pseudonym in self._pools[lt_id].pseudonyms:
                if pseudonym.valid_to >= tick:
                    self.revocations.revoke_pseudonym(pseudonym.p_id, tick)
                    revoked.append(pseudonym.p_id)
        for p_id in revoked or [""]:
            self.audit_log.append(
                AuditEntry(tick, self.region, "revoke", p_id, lt_id, cause.hex())
            )
        logging.info(
            f"Region {self.region} revoked {lt_id} at tick {tick} "
            f"({len(revoked)} pseudonyms)."
        )
        return self.revocations

    def __repr__(self):
        return f"Scms(region={self.region}, enrolled={len(self._certificates)})"
