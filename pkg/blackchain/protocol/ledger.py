"""
The public permissionless chain kept by the MAs.

A Ledger is one replica. It accepts a block only after re-checking proof of
work, linkage, every introduction threshold and every revocation down to
the signed beacons, so replaying a chain file into an empty Ledger is the
full audit.
"""
from blackchain import crypto
from blackchain.config import GenesisConfig
from blackchain.entities.encoding import Decoder, Encoder
from blackchain.entities.ledger import (
    Approval,
    GlobalBlock,
    IntroductionTx,
    ParticipantIdentity,
    RevocationTx,
    Transaction,
    introduction_message,
)
from blackchain.entities.node import NodeId
from blackchain.entities.rsu import AggregatedStatement, bft_quorum
from blackchain.entities.utils import (
    VALID,
    AuthorizationError,
    ChainParseError,
    InvalidTransactionError,
    UnintroducedSignerError,
    UnknownIdentityError,
    Verdict,
    reject,
)
from blackchain.protocol.rsu import verify_statement

import json
import logging
import struct
import typing

_FRAME = struct.Struct(">I")
_NONCE = struct.Struct(">Q")


class Participant(typing.NamedTuple):
    identity: ParticipantIdentity
    # Introduction tx hash, or the genesis hash for genesis participants.
    reference: bytes
    height: int


class AuditResult(typing.NamedTuple):
    ok: bool
    height: int = -1
    reason: str = ""

    def __bool__(self):
        return self.ok


class Ledger(object):
    """One replica of the global chain and the state derived from it."""

    def __init__(self, genesis: GenesisConfig):
        self.genesis = genesis
        self.blocks: typing.List[GlobalBlock] = []
        self._participants: typing.Dict[bytes, Participant] = {}
        self._txs: typing.Dict[bytes, typing.Tuple[Transaction, int]] = {}
        self._named: typing.Dict[str, int] = {}
        for identity in genesis.participants:
            self._participants[identity.public_key] = Participant(
                identity, genesis.genesis_hash, -1
            )

    # ------------------------------ View ------------------------------ #

    @property
    def height(self) -> int:
        """Height the next block will have."""
        return len(self.blocks)

    @property
    def tip_hash(self) -> bytes:
        if not self.blocks:
            return self.genesis.genesis_hash
        return self.blocks[-1].pow_hash

    @property
    def total_difficulty(self) -> int:
        return sum(1 << b.difficulty_bits for b in self.blocks)

    def participant(self, public_key: bytes) -> typing.Optional[Participant]:
        return self._participants.get(public_key)

    def group_members(self, group_id: str) -> typing.Dict[str, bytes]:
        return {
            p.identity.name: p.identity.public_key
            for p in self._participants.values()
            if p.identity.kind == "rsu" and p.identity.group_id == group_id
        }

    def find_tx(self, tx_hash: bytes) -> typing.Optional[Transaction]:
        found = self._txs.get(tx_hash)
        return found[0] if found else None

    def find_revocation(self, tx_hash: bytes) -> typing.Optional[RevocationTx]:
        tx = self.find_tx(tx_hash)
        return tx if isinstance(tx, RevocationTx) else None

    def named_suspects(self) -> typing.Set[str]:
        """p_ids named by committed revocations."""
        return set(self._named)

    # ---------------------------- Validation ---------------------------- #

    def check_introduction(self, tx: IntroductionTx) -> Verdict:
        if tx.subject.public_key in self._participants:
            return reject("already-introduced")
        approvers = {
            key for key in tx.valid_approvers() if key in self._participants
        }
        needed = len(self._participants) // 2 + 1
        if len(approvers) < needed:
            return reject("approvals")
        return VALID

    def check_revocation(self, tx: RevocationTx) -> Verdict:
        stmt = tx.statement
        if len(tx.references) != len(stmt.quorum_cert):
            return reject("references")
        for sig, ref in zip(stmt.quorum_cert, tx.references):
            participant = self._participants.get(sig.public_key)
            if participant is None or participant.reference != ref:
                return reject("dangling-reference")
            if participant.identity.name != str(sig.signer):
                return reject("dangling-reference")
        members = self.group_members(stmt.group_id)
        if not members:
            return reject("unknown-group")
        verdict = verify_statement(
            stmt,
            members,
            bft_quorum(len(members)),
            self.genesis.anchors,
            self.genesis.detection,
        )
        if not verdict:
            return verdict
        candidates = {c.suspect_p_id for c in stmt.revocation_candidates}
        if not tx.decided_suspects or not set(tx.decided_suspects) <= candidates:
            return reject("decided-suspects")
        if all(s in self._named for s in tx.decided_suspects):
            return reject("already-revoked")
        return VALID

    def check_tx(self, tx: Transaction) -> Verdict:
        if tx.tx_hash in self._txs:
            return reject("duplicate-tx")
        if isinstance(tx, IntroductionTx):
            return self.check_introduction(tx)
        if isinstance(tx, RevocationTx):
            return self.check_revocation(tx)
        return reject("tx-kind")

    def check_block(self, block: GlobalBlock) -> Verdict:
        """Checks block as the next block of this replica. Transactions of
        one block only see the state before that block."""
        if block.height != self.height:
            return reject("height")
        if block.prev_hash != self.tip_hash:
            return reject("linkage")
        if block.difficulty_bits != self.genesis.difficulty_bits:
            return reject("difficulty")
        if block.pow_hash != crypto.digest(block.header_bytes()):
            return reject("pow-hash")
        if crypto.leading_zero_bits(block.pow_hash) < block.difficulty_bits:
            return reject("pow")
        hashes = [tx.tx_hash for tx in block.txs]
        if hashes != sorted(set(hashes)):
            return reject("tx-order")
        subjects = [tx.subject.public_key for tx in block.introductions()]
        if len(subjects) != len(set(subjects)):
            return reject("duplicate-introduction")
        for tx in block.txs:
            verdict = self.check_tx(tx)
            if not verdict:
                return reject(f"tx:{verdict.reason}")
        return VALID

    def append(self, block: GlobalBlock) -> Verdict:
        verdict = self.check_block(block)
        if not verdict:
            return verdict
        height = block.height
        for tx in block.txs:
            self._txs[tx.tx_hash] = (tx, height)
            if isinstance(tx, IntroductionTx):
                self._participants[tx.subject.public_key] = Participant(
                    tx.subject, tx.tx_hash, height
                )
            else:
                for p_id in tx.decided_suspects:
                    self._named.setdefault(p_id, height)
        self.blocks.append(block)
        return verdict

    def __repr__(self):
        return f"Ledger(height={self.height}, tip={self.tip_hash.hex()[:16]})"


# ---------------------------- Transactions ---------------------------- #


def approve(keypair: crypto.KeyPair, subject: ParticipantIdentity) -> Approval:
    return Approval(keypair.public_key, keypair.sign(introduction_message(subject)))


def introduce_participant(
    subject: ParticipantIdentity,
    approvals: typing.Iterable[Approval],
    ledger: Ledger,
) -> IntroductionTx:
    tx = IntroductionTx(subject, list(approvals))
    verdict = ledger.check_introduction(tx)
    if not verdict:
        raise InvalidTransactionError(
            f"Introduction of {subject.name} is invalid ({verdict.reason})."
        )
    return tx


def build_revocation_tx(
    stmt: AggregatedStatement,
    ledger: Ledger,
    pending: typing.Container[str] = (),
) -> RevocationTx:
    """Turns a certified statement into a revocation of every candidate not
    yet named on chain (or in pending)."""
    references = []
    for sig in stmt.quorum_cert:
        participant = ledger.participant(sig.public_key)
        if participant is None:
            raise UnintroducedSignerError(
                f"{sig.signer} signed without being introduced on chain."
            )
        references.append(participant.reference)
    decided = [
        c.suspect_p_id
        for c in stmt.revocation_candidates
        if c.suspect_p_id not in ledger.named_suspects()
        and c.suspect_p_id not in pending
    ]
    tx = RevocationTx(stmt, references, decided)
    verdict = ledger.check_revocation(tx)
    if not verdict:
        raise InvalidTransactionError(
            f"Statement {stmt.statement_hash.hex()[:16]} cannot be committed "
            f"({verdict.reason})."
        )
    return tx


def solve(block: GlobalBlock) -> GlobalBlock:
    """Searches the nonce. The nonce is the last header field, so only its
    eight bytes change between attempts."""
    prefix = block.header_bytes(0)[: -_NONCE.size]
    nonce = 0
    while True:
        pow_hash = crypto.digest(prefix + _NONCE.pack(nonce))
        if crypto.leading_zero_bits(pow_hash) >= block.difficulty_bits:
            break
        nonce += 1
    return GlobalBlock(
        block.height,
        block.prev_hash,
        block.txs,
        block.difficulty_bits,
        nonce,
        block.miner,
        pow_hash,
    )


def select_txs(
    mempool: typing.Iterable[Transaction], ledger: Ledger
) -> typing.List[Transaction]:
    """Valid mempool transactions in tx_hash order. A transaction made
    redundant by an earlier one in the same block is left out."""
    chosen = []
    named = set()
    seen = set()
    for tx in sorted(mempool, key=lambda t: t.tx_hash):
        if tx.tx_hash in seen or not ledger.check_tx(tx):
            continue
        if isinstance(tx, RevocationTx):
            if all(s in named for s in tx.decided_suspects):
                continue
            named.update(tx.decided_suspects)
        elif any(
            isinstance(c, IntroductionTx)
            and c.subject.public_key == tx.subject.public_key
            for c in chosen
        ):
            continue
        seen.add(tx.tx_hash)
        chosen.append(tx)
    return chosen


def mine_block(
    mempool: typing.Iterable[Transaction],
    ledger: Ledger,
    miner: str = "",
    heartbeat: bool = False,
) -> typing.Optional[GlobalBlock]:
    txs = select_txs(mempool, ledger)
    if not txs and not heartbeat:
        return None
    candidate = GlobalBlock(
        ledger.height,
        ledger.tip_hash,
        txs,
        ledger.genesis.difficulty_bits,
        miner=miner,
    )
    return solve(candidate)


# ------------------------------- Audit -------------------------------- #


def encode_chain(blocks: typing.Iterable[GlobalBlock]) -> bytes:
    enc = Encoder()
    for block in blocks:
        enc.blob(block.canonical_bytes())
    return enc.getvalue()


def split_frames(data: bytes) -> typing.List[bytes]:
    frames = []
    pos = 0
    while pos < len(data):
        if pos + _FRAME.size > len(data):
            raise ChainParseError(f"Truncated frame header at offset {pos}.")
        (length,) = _FRAME.unpack_from(data, pos)
        pos += _FRAME.size
        if pos + length > len(data):
            raise ChainParseError(
                f"Frame at offset {pos} needs {length} bytes, "
                f"{len(data) - pos} left."
            )
        frames.append(bytes(data[pos : pos + length]))
        pos += length
    return frames


def decode_chain(data: bytes) -> typing.List[GlobalBlock]:
    """Strict decode: any malformed frame raises ChainParseError."""
    blocks = []
    for frame in split_frames(data):
        try:
            blocks.append(GlobalBlock.from_bytes(frame))
        except ValueError as e:
            raise ChainParseError(str(e))
    return blocks


def verify_chain(
    blocks: typing.Iterable[GlobalBlock], genesis: GenesisConfig
) -> AuditResult:
    ledger = Ledger(genesis)
    for block in blocks:
        verdict = ledger.append(block)
        if not verdict:
            return AuditResult(False, block.height, verdict.reason)
    return AuditResult(True, ledger.height - 1)


def _whole_block_at(data: bytes) -> bool:
    """Whether data starts with a complete block, whatever follows it."""
    try:
        GlobalBlock.decode(Decoder(data))
    except (ChainParseError, ValueError):
        return False
    return True


def audit_chain(data: bytes, genesis: GenesisConfig) -> AuditResult:
    """Full audit of a chain file. A file that ends inside a frame raises
    ChainParseError. A block that fails to decode, does not re-encode to its
    exact bytes or sits in a frame of the wrong length fails verification
    at its position."""
    ledger = Ledger(genesis)
    pos = 0
    while pos < len(data):
        height = ledger.height
        if pos + _FRAME.size > len(data):
            raise ChainParseError(f"Truncated frame header at offset {pos}.")
        (length,) = _FRAME.unpack_from(data, pos)
        start = pos + _FRAME.size
        if start + length > len(data):
            # An intact block behind an overlong length is a corrupted
            # prefix, not a short file.
            if _whole_block_at(bytes(data[start:])):
                return AuditResult(False, height, "framing")
            raise ChainParseError(
                f"Frame at offset {start} needs {length} bytes, "
                f"{len(data) - start} left."
            )
        frame = bytes(data[start : start + length])
        pos = start + length
        try:
            block = GlobalBlock.from_bytes(frame)
        except (ChainParseError, ValueError) as e:
            return AuditResult(False, height, f"decode:{e}")
        if block.canonical_bytes() != frame:
            return AuditResult(False, height, "encoding")
        verdict = ledger.append(block)
        if not verdict:
            return AuditResult(False, height, verdict.reason)
    return AuditResult(True, ledger.height - 1)


def export_chain(blocks: typing.Iterable[GlobalBlock]) -> typing.Iterator[str]:
    """One JSON document per block."""
    for block in blocks:
        yield json.dumps(block.to_dictionary(), sort_keys=True)


def choose_chain(
    chains: typing.Sequence[typing.Sequence[GlobalBlock]],
    genesis: GenesisConfig,
) -> typing.List[GlobalBlock]:
    """Greatest total difficulty among chains that verify; ties go to the
    lower tip hash."""
    best, best_key = [], None
    for chain in chains:
        replica = Ledger(genesis)
        if not all(replica.append(block) for block in chain):
            continue
        key = (-replica.total_difficulty, replica.tip_hash)
        if best_key is None or key < best_key:
            best, best_key = list(chain), key
    return best


# ------------------------------ Revocation ------------------------------ #


def suspect_region(tx: RevocationTx, p_id: str) -> typing.Optional[int]:
    """Issuing region of p_id, read from the certificates in the evidence."""
    for report in tx.report_bundle:
        for beacon in report.evidence:
            if beacon.p_id == p_id:
                return beacon.certificate.region
    return None


def apply_revocations(
    block: GlobalBlock,
    scms_by_region: typing.Mapping[int, typing.Any],
    ledger: Ledger,
    tick: int = 0,
    region: typing.Optional[int] = None,
) -> typing.List[str]:
    """Resolves every decided suspect at its issuing region and revokes the
    owner in every region. With region set, only suspects issued there are
    handled. Returns the long-term ids revoked."""
    revoked = []
    for tx in block.revocations():
        for p_id in tx.decided_suspects:
            home = suspect_region(tx, p_id)
            if region is not None and home != region:
                continue
            scms = scms_by_region.get(home)
            if scms is None:
                logging.warning(f"No SCMS issued {p_id}; it stays on chain.")
                continue
            try:
                lt_id = scms.resolve_linkage(p_id, tx.tx_hash, ledger, tick)
            except (AuthorizationError, UnknownIdentityError) as e:
                logging.warning(f"Linkage of {p_id} failed: {e}")
                continue
            for region_id in sorted(scms_by_region):
                scms_by_region[region_id].revoke(lt_id, tick, tx.tx_hash)
            if lt_id not in revoked:
                revoked.append(lt_id)
    return revoked


# ------------------------- Management authority ------------------------- #


class ManagementAuthority(object):
    """An MA: validates RSU statements, keeps a mempool and a ledger replica,
    mines in turn and adopts the best chain it hears about."""

    def __init__(
        self,
        node: NodeId,
        keypair: crypto.KeyPair,
        region: int,
        genesis: GenesisConfig,
    ):
        self.node = node
        self.keypair = keypair
        self.region = region
        self.ledger = Ledger(genesis)
        self.mempool: typing.Dict[bytes, Transaction] = {}
        self.parked: typing.Dict[bytes, AggregatedStatement] = {}
        self.seen_statements: typing.Set[bytes] = set()
        self.rejected_statements = 0

    @property
    def identity(self) -> ParticipantIdentity:
        return ParticipantIdentity("ma", str(self.node), "", self.keypair.public_key)

    def submit(self, tx: Transaction):
        self.mempool.setdefault(tx.tx_hash, tx)

    def _pending_suspects(self) -> typing.Set[str]:
        return {
            s
            for tx in self.mempool.values()
            if isinstance(tx, RevocationTx)
            for s in tx.decided_suspects
        }

    def receive_statement(self, stmt: AggregatedStatement) -> bool:
        """Queues a revocation for a certified statement. Duplicates are
        ignored; statements whose signers are not introduced yet wait."""
        h = stmt.statement_hash
        if h in self.seen_statements:
            return False
        self.seen_statements.add(h)
        return self._consider(stmt)

    def _consider(self, stmt: AggregatedStatement) -> bool:
        pending = self._pending_suspects() | self.ledger.named_suspects()
        if all(c.suspect_p_id in pending for c in stmt.revocation_candidates):
            return False
        try:
            tx = build_revocation_tx(stmt, self.ledger, pending)
        except UnintroducedSignerError:
            self.parked[stmt.statement_hash] = stmt
            return False
        except InvalidTransactionError as e:
            self.rejected_statements += 1
            logging.info(f"{self.node} rejected a statement: {e}")
            return False
        self.submit(tx)
        return True

    def retry_parked(self):
        parked, self.parked = self.parked, {}
        for stmt in parked.values():
            self._consider(stmt)

    def _prune(self):
        self.mempool = {
            h: tx for h, tx in self.mempool.items() if self.ledger.check_tx(tx)
        }

    def mine(self, heartbeat: bool = False) -> typing.Optional[GlobalBlock]:
        block = mine_block(
            self.mempool.values(), self.ledger, str(self.node), heartbeat
        )
        if block is None:
            return None
        verdict = self.ledger.append(block)
        if not verdict:
            raise InvalidTransactionError(f"Own block rejected: {verdict.reason}")
        self._prune()
        self.retry_parked()
        logging.info(
            f"{self.node} mined block {block.height} with {len(block.txs)} txs."
        )
        return block

    def receive_chain(self, chain: typing.Sequence[GlobalBlock]) -> typing.List[GlobalBlock]:
        """Adopts chain when it beats the local one. Returns the blocks that
        became new on the local replica."""
        own = self.ledger.blocks
        extends = len(chain) > len(own) and all(
            a.pow_hash == b.pow_hash for a, b in zip(own, chain)
        )
        new_blocks = []
        if extends:
            for block in chain[len(own):]:
                if not self.ledger.append(block):
                    break
                new_blocks.append(block)
        else:
            best = choose_chain([own, chain], self.ledger.genesis)
            if best and best[-1].pow_hash != (own[-1].pow_hash if own else None):
                orphaned = [tx for b in own for tx in b.txs]
                replica = Ledger(self.ledger.genesis)
                for block in best:
                    replica.append(block)
                known = {b.pow_hash for b in own}
                new_blocks = [b for b in best if b.pow_hash not in known]
                self.ledger = replica
                for tx in orphaned:
                    self.submit(tx)
        if new_blocks:
            self._prune()
            self.retry_parked()
        return new_blocks

    def __repr__(self):
        return f"ManagementAuthority({self.node}, region={self.region})"
