"""
RSU groups and their quorum-certificate rounds.

RSUs of one grid cell form a group. Every member validates the cluster
blocks delivered to it; once per round the height's leader aggregates the
union of validated blocks, members echo the statement hash they accept and
sign it after seeing 2f+1 echoes. A statement commits with 2f+1 signatures.
"""
from blackchain import crypto
from blackchain.entities.beacon import MisbehaviorReport
from blackchain.entities.cluster import ClusterBlock, cluster_genesis_hash
from blackchain.entities.node import NodeId, Position
from blackchain.entities.rsu import (
    AggregatedStatement,
    QuorumSignature,
    RevocationCandidate,
    RsuGroup,
)
from blackchain.entities.utils import VALID, Verdict, reject
from blackchain.protocol.cluster import local_revocation_decision, tally_votes
from blackchain.protocol.vehicle import (
    DetectionParams,
    TrustAnchors,
    verify_report,
)

import enum
import logging
import math
import typing

RevokedCheck = typing.Callable[[str, int], bool]


def _never_revoked(p_id: str, tick: int) -> bool:
    return False


def group_rsus(
    rsu_positions: typing.Mapping[NodeId, Position], cell_size_m: float
) -> typing.List[RsuGroup]:
    if cell_size_m <= 0:
        raise ValueError("Cell size must be positive.")
    cells: typing.Dict[typing.Tuple[int, int], typing.List[NodeId]] = {}
    for node, pos in sorted(rsu_positions.items()):
        cell = (
            int(math.floor(pos.x / cell_size_m)),
            int(math.floor(pos.y / cell_size_m)),
        )
        cells.setdefault(cell, []).append(node)
    return [
        RsuGroup(f"g{i}_{j}", members, (i, j))
        for (i, j), members in sorted(cells.items())
    ]


# ------------------------ Cluster block validation ------------------------ #


class RoadSideUnit(object):
    def __init__(
        self,
        node: NodeId,
        keypair: crypto.KeyPair,
        position: Position,
        group: RsuGroup,
    ):
        self.node = node
        self.keypair = keypair
        self.position = position
        self.group = group
        self.pending: typing.Dict[bytes, ClusterBlock] = {}
        # (cluster_id, height) -> (block_hash, prev_hash)
        self.seen: typing.Dict[typing.Tuple[str, int], typing.Tuple[bytes, bytes]] = {}
        self.rejected = 0

    @property
    def public_key(self) -> bytes:
        return self.keypair.public_key

    def record(self, block: ClusterBlock):
        self.seen[(block.cluster_id, block.height)] = (
            block.block_hash,
            block.prev_hash,
        )

    def receive_block(
        self,
        block: ClusterBlock,
        anchors: TrustAnchors,
        params: DetectionParams = DetectionParams(),
        is_revoked: RevokedCheck = _never_revoked,
    ) -> Verdict:
        verdict = validate_cluster_block(self, block, anchors, params, is_revoked)
        if not verdict:
            self.rejected += 1
            logging.debug(
                f"{self.node} rejected block {block.cluster_id}/{block.height}"
                f" ({verdict.reason})."
            )
            return verdict
        if (block.cluster_id, block.height) in self.seen:
            return verdict
        self.record(block)
        self.pending[block.block_hash] = block
        return verdict

    def settle(self, blocks: typing.Iterable[ClusterBlock]):
        """Drops blocks covered by a committed statement."""
        for block in blocks:
            self.record(block)
            self.pending.pop(block.block_hash, None)

    def __repr__(self):
        return f"RoadSideUnit({self.node}, group={self.group.group_id})"


def validate_cluster_block(
    rsu: RoadSideUnit,
    block: ClusterBlock,
    anchors: TrustAnchors,
    params: DetectionParams = DetectionParams(),
    is_revoked: RevokedCheck = _never_revoked,
) -> Verdict:
    """Full independent check of a committed cluster block against rsu's
    view of that cluster's chain."""
    key = (block.cluster_id, block.height)
    seen = rsu.seen.get(key)
    if seen is not None and seen[0] != block.block_hash:
        return reject("fork")
    if block.height == 0:
        if block.prev_hash != cluster_genesis_hash(block.cluster_id):
            return reject("linkage")
    else:
        before = rsu.seen.get((block.cluster_id, block.height - 1))
        if before is not None and before[0] != block.prev_hash:
            return reject("linkage")
    after = rsu.seen.get((block.cluster_id, block.height + 1))
    if after is not None and after[1] != block.block_hash:
        return reject("linkage")

    if not block.members or block.proposer != min(block.members):
        return reject("proposer")
    if any(is_revoked(m, block.tick) for m in block.members):
        return reject("revoked-member")

    endorsers = set()
    for vote in block.votes:
        if vote.block_hash != block.block_hash or vote.voter not in block.members:
            return reject("endorsement")
        certificate = vote.certificate
        anchor = anchors.get(certificate.region)
        if (
            anchor is None
            or not certificate.valid_at(block.tick)
            or not certificate.verify_issuer(anchor)
            or not vote.verify()
        ):
            return reject("endorsement")
        endorsers.add(vote.voter)
    if len(endorsers) < block.quorum:
        return reject("quorum")

    for report in block.reports:
        verdict = verify_report(report, anchors, params)
        if not verdict:
            return reject(f"report:{verdict.reason}")
    expected = tally_votes(block.reports, block.members)
    if block.revocation_votes != {
        s: tuple(sorted(v)) for s, v in sorted(expected.items())
    }:
        return reject("votes")
    return VALID


# ------------------------------ Aggregation ------------------------------ #


def _block_order(block: ClusterBlock):
    return (block.cluster_id, block.height, block.block_hash)


def aggregate(
    group_id: str, height: int, blocks: typing.Iterable[ClusterBlock]
) -> AggregatedStatement:
    """Partial state over validated blocks. Reports shared by several blocks
    appear once in the evidence bundle."""
    unique = {b.block_hash: b for b in blocks}
    ordered = sorted(unique.values(), key=_block_order)
    reports: typing.Dict[bytes, MisbehaviorReport] = {}
    support: typing.Dict[str, typing.Set[bytes]] = {}
    for block in ordered:
        for report in block.reports:
            reports.setdefault(report.hash, report)
            for suspect in report.suspects:
                support.setdefault(suspect, set()).add(report.hash)
    candidates = [
        RevocationCandidate(
            suspect,
            tuple(sorted(hashes)),
            any(local_revocation_decision(b, suspect) for b in ordered),
        )
        for suspect, hashes in sorted(support.items())
    ]
    return AggregatedStatement(
        group_id,
        height,
        [b.block_hash for b in ordered],
        candidates,
        [reports[h] for h in sorted(reports)],
    )


def verify_statement(
    stmt: AggregatedStatement,
    member_keys: typing.Mapping[str, bytes],
    quorum: int,
    anchors: TrustAnchors,
    params: DetectionParams = DetectionParams(),
) -> Verdict:
    """Checks the quorum certificate against the group's known member keys
    (keyed by member name) and every candidate's evidence."""
    signers = set()
    for sig in stmt.quorum_cert:
        name = str(sig.signer)
        if member_keys.get(name) != sig.public_key:
            return reject("unknown-signer")
        if not sig.verify(stmt.statement_hash):
            return reject("group-signature")
        signers.add(name)
    if len(signers) < quorum:
        return reject("quorum")

    bundle = {}
    for report in stmt.evidence_bundle:
        if report.hash in bundle:
            return reject("duplicate-evidence")
        bundle[report.hash] = report
    suspects = [c.suspect_p_id for c in stmt.revocation_candidates]
    if suspects != sorted(set(suspects)):
        return reject("candidates")
    for candidate in stmt.revocation_candidates:
        if not candidate.report_hashes:
            return reject("no-evidence")
        for h in candidate.report_hashes:
            report = bundle.get(h)
            if report is None or candidate.suspect_p_id not in report.suspects:
                return reject("dangling-evidence")
    for report in stmt.evidence_bundle:
        verdict = verify_report(report, anchors, params)
        if not verdict:
            return reject(f"report:{verdict.reason}")
    return VALID


# ------------------------------- BFT round ------------------------------- #


class RsuBehavior(str, enum.Enum):
    HONEST = "honest"
    SILENT = "silent"
    EQUIVOCATE = "equivocate"


class BftOutcome(typing.NamedTuple):
    """committed is the statement honest members hold a certificate for, or
    None (no decision). certified lists every statement that gathered a
    valid quorum certificate during the round."""

    height: int
    leader: NodeId
    committed: typing.Optional[AggregatedStatement]
    certified: typing.List[AggregatedStatement]
    blocks: typing.List[ClusterBlock]

    @property
    def decided(self) -> bool:
        return self.committed is not None


BlockValidator = typing.Callable[[NodeId, ClusterBlock], bool]

Proposal = typing.Tuple[AggregatedStatement, typing.List[ClusterBlock]]


def conflicting_proposal(
    stmt: AggregatedStatement, blocks: typing.List[ClusterBlock]
) -> Proposal:
    """Another statement for the same (group, height). Dropping the last
    block keeps it well-formed; without blocks a candidate with no evidence
    is invented."""
    if blocks:
        subset = blocks[:-1]
        return aggregate(stmt.group_id, stmt.height, subset), subset
    fake = RevocationCandidate("0" * 16, (), True)
    return (
        AggregatedStatement(stmt.group_id, stmt.height, [], [fake], []),
        [],
    )


def _accepts(
    member: NodeId,
    proposal: Proposal,
    validate: BlockValidator,
) -> bool:
    stmt, blocks = proposal
    if not all(validate(member, b) for b in blocks):
        return False
    rebuilt = aggregate(stmt.group_id, stmt.height, blocks)
    return rebuilt.statement_hash == stmt.statement_hash


def bft_round(
    group: RsuGroup,
    height: int,
    proposals: typing.Mapping[NodeId, typing.Iterable[ClusterBlock]],
    keys: typing.Mapping[NodeId, crypto.KeyPair],
    validate: BlockValidator,
    behaviors: typing.Mapping[NodeId, RsuBehavior] = None,
    split: typing.Container[NodeId] = None,
) -> BftOutcome:
    """One propose/echo/confirm exchange among group members.

    behaviors marks Byzantine members (silent or equivocating). An
    equivocating leader sends the conflicting proposal to the members in
    split (every second member by default)."""
    behaviors = behaviors or {}
    members = group.members
    leader = group.leader(height)
    role = {m: RsuBehavior(behaviors.get(m, RsuBehavior.HONEST)) for m in members}
    if split is None:
        split = set(members[1::2])

    # Propose
    union: typing.Dict[bytes, ClusterBlock] = {}
    for member in members:
        for block in proposals.get(member, ()):
            union.setdefault(block.block_hash, block)
    delivered: typing.Dict[NodeId, Proposal] = {}
    sent: typing.List[Proposal] = []
    if role[leader] != RsuBehavior.SILENT:
        blocks = sorted(
            (b for b in union.values() if validate(leader, b)), key=_block_order
        )
        honest = (aggregate(group.group_id, height, blocks), blocks)
        sent.append(honest)
        if role[leader] == RsuBehavior.EQUIVOCATE:
            sent.append(conflicting_proposal(*honest))
        for member in members:
            delivered[member] = sent[-1] if member in split else sent[0]

    statements: typing.Dict[bytes, Proposal] = {}
    echoes: typing.Dict[bytes, typing.Set[NodeId]] = {}
    accepted: typing.Dict[NodeId, bytes] = {}

    def echo(member: NodeId, proposal: Proposal):
        h = proposal[0].statement_hash
        statements.setdefault(h, proposal)
        echoes.setdefault(h, set()).add(member)

    # Echo: honest members echo at most one hash per height.
    for member in members:
        proposal = delivered.get(member)
        if proposal is None or role[member] == RsuBehavior.SILENT:
            continue
        if role[member] == RsuBehavior.EQUIVOCATE:
            if member == leader:
                for proposal in sent:
                    echo(member, proposal)
            else:
                echo(member, conflicting_proposal(*proposal))
            continue
        if _accepts(member, proposal, validate):
            accepted[member] = proposal[0].statement_hash
            echo(member, proposal)

    # Confirm
    signatures: typing.Dict[bytes, typing.List[QuorumSignature]] = {}
    for member in members:
        if role[member] == RsuBehavior.SILENT:
            continue
        if role[member] == RsuBehavior.EQUIVOCATE:
            to_sign = [h for h, who in echoes.items() if member in who]
        else:
            h = accepted.get(member)
            to_sign = [h] if h and len(echoes[h]) >= group.quorum else []
        for h in to_sign:
            keypair = keys[member]
            signatures.setdefault(h, []).append(
                QuorumSignature(member, keypair.public_key, keypair.sign(h))
            )

    certified = []
    for h in sorted(signatures):
        valid = {s.signer for s in signatures[h] if s.verify(h)}
        if len(valid) >= group.quorum:
            certified.append(statements[h][0].with_certificate(signatures[h]))

    committed = None
    honest_signed = {
        h
        for m, h in accepted.items()
        if any(s.signer == m for s in signatures.get(h, ()))
    }
    for stmt in certified:
        if stmt.statement_hash in honest_signed:
            committed = stmt
            break
    blocks = []
    if committed is not None:
        blocks = statements[committed.statement_hash][1]
    if group.degenerate:
        logging.debug(f"Group {group.group_id} runs with f=0.")
    return BftOutcome(height, leader, committed, certified, list(blocks))


def report_to_ma(
    stmt: AggregatedStatement,
    sender: NodeId,
    mas: typing.Iterable[NodeId],
    network,
    handler,
):
    """Sends a certified statement to every MA over the reliable links."""
    if not stmt.quorum_cert:
        raise ValueError("Only certified statements are reported.")
    for ma in sorted(mas):
        network.send(sender, ma, stmt, handler, kind="statement")
