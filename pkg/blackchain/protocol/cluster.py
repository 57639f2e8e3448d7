"""
Vehicle clusters and their permissioned chains.

Clusters are formed greedily over the lexicographic order of pseudonym ids
and headed by their smallest member. The head proposes one block per epoch
with the reports it received, members re-validate and endorse, and a block
backed by a majority of members is forwarded to the nearest RSU.
"""
from blackchain import crypto
from blackchain.entities.beacon import MisbehaviorReport
from blackchain.entities.cluster import (
    Cluster,
    ClusterBlock,
    Endorsement,
    cluster_genesis_hash,
)
from blackchain.entities.identity import Pseudonym
from blackchain.entities.node import NodeId, Position
from blackchain.entities.utils import VALID, NotHeadError, Verdict, reject
from blackchain.protocol.vehicle import (
    DetectionParams,
    TrustAnchors,
    verify_report,
)
from blackchain.sim.network import RadioModel

import logging
import typing


def form_clusters(
    positions: typing.Mapping[str, Position],
    radio: RadioModel,
    t: int = 0,
) -> typing.List[Cluster]:
    unassigned = sorted(positions)
    clusters = []
    while unassigned:
        seed = unassigned.pop(0)
        members = [seed]
        for candidate in list(unassigned):
            if all(
                radio.in_range(positions[candidate], positions[m])
                for m in members
            ):
                members.append(candidate)
                unassigned.remove(candidate)
        clusters.append(Cluster(members, min(members), t))
    return clusters


class ClusterView(object):
    """One node's view of a cluster chain: the committed tip and the
    candidate it endorsed at each height."""

    def __init__(self, cluster: Cluster):
        self.cluster = cluster
        self.height = -1
        self.tip = cluster_genesis_hash(cluster.cluster_id)
        self.blocks: typing.List[ClusterBlock] = []
        self.endorsed: typing.Dict[int, bytes] = {}

    @property
    def next_height(self) -> int:
        return self.height + 1

    def accept(self, block: ClusterBlock) -> bool:
        """Appends a committed block extending the tip."""
        if (
            not block.committed
            or block.cluster_id != self.cluster.cluster_id
            or block.prev_hash != self.tip
        ):
            return False
        self.blocks.append(block)
        self.height = block.height
        self.tip = block.block_hash
        return True

    def __repr__(self):
        return f"ClusterView({self.cluster.cluster_id}, height={self.height})"


def tally_votes(
    reports: typing.Iterable[MisbehaviorReport],
    members: typing.Container[str],
) -> typing.Dict[str, typing.Set[str]]:
    """suspect -> member reporters accusing it. Nobody votes on itself."""
    votes: typing.Dict[str, typing.Set[str]] = {}
    for report in reports:
        if report.reporter_p_id not in members:
            continue
        for suspect in report.suspects:
            if suspect != report.reporter_p_id:
                votes.setdefault(suspect, set()).add(report.reporter_p_id)
    return votes


def propose_block(
    cluster: Cluster,
    proposer: str,
    view: ClusterView,
    pending_reports: typing.Iterable[MisbehaviorReport],
    t: int,
    anchors: TrustAnchors,
    params: DetectionParams = DetectionParams(),
) -> ClusterBlock:
    """Candidate block for the next height. Reports are deduplicated by hash
    and those failing verification are left out. A candidate is produced
    even without reports."""
    if proposer != cluster.head:
        raise NotHeadError(
            f"{proposer} is not the head of cluster {cluster.cluster_id}."
        )
    reports = {}
    for report in pending_reports:
        if report.hash in reports:
            continue
        verdict = verify_report(report, anchors, params)
        if not verdict:
            logging.debug(
                f"Head of {cluster.cluster_id} excluded a report "
                f"({verdict.reason})."
            )
            continue
        reports[report.hash] = report
    included = [reports[h] for h in sorted(reports)]
    return ClusterBlock(
        cluster.cluster_id,
        view.next_height,
        view.tip,
        cluster.members,
        included,
        tally_votes(included, cluster.members),
        t,
        proposer,
    )


def check_candidate(
    candidate: ClusterBlock,
    cluster: Cluster,
    view: ClusterView,
    anchors: TrustAnchors,
    params: DetectionParams = DetectionParams(),
) -> Verdict:
    if candidate.proposer != cluster.head:
        return reject("not-head")
    if candidate.cluster_id != cluster.cluster_id:
        return reject("cluster")
    if candidate.members != cluster.members:
        return reject("members")
    if candidate.height != view.next_height or candidate.prev_hash != view.tip:
        return reject("prev-hash")
    endorsed = view.endorsed.get(candidate.height)
    if endorsed is not None and endorsed != candidate.block_hash:
        return reject("already-endorsed")
    for report in candidate.reports:
        if not verify_report(report, anchors, params):
            return reject("report")
    expected = tally_votes(candidate.reports, cluster.members)
    if candidate.revocation_votes != {
        s: tuple(sorted(v)) for s, v in sorted(expected.items())
    }:
        return reject("votes")
    return VALID


def vote_block(
    member: Pseudonym,
    keypair: crypto.KeyPair,
    candidate: ClusterBlock,
    cluster: Cluster,
    view: ClusterView,
    anchors: TrustAnchors,
    params: DetectionParams = DetectionParams(),
) -> typing.Union[Endorsement, Verdict]:
    """Endorsement when member independently accepts every report and the
    candidate extends its view; otherwise the rejecting Verdict. A member
    endorses at most one candidate per height."""
    if member.p_id not in cluster.members:
        return reject("not-member")
    verdict = check_candidate(candidate, cluster, view, anchors, params)
    if not verdict:
        return verdict
    view.endorsed[candidate.height] = candidate.block_hash
    return Endorsement.create(member, keypair, candidate.block_hash)


def local_revocation_decision(block: ClusterBlock, suspect: str) -> bool:
    """Majority of the other members voted against suspect."""
    if not block.committed:
        return False
    voters = set(block.revocation_votes.get(suspect, ()))
    voters &= set(block.members)
    voters.discard(suspect)
    return len(voters) >= (len(block.members) - 1) // 2 + 1


def nearest_rsu(
    position: Position,
    rsu_positions: typing.Mapping[NodeId, Position],
    radio: RadioModel,
) -> typing.Optional[NodeId]:
    in_range = [
        (position.distance_to(p), node)
        for node, p in rsu_positions.items()
        if radio.in_range(position, p)
    ]
    if not in_range:
        return None
    return min(in_range)[1]


class BlockForwarder(object):
    """Committed blocks waiting at a cluster head for an RSU in range."""

    def __init__(self):
        self.buffer: typing.List[ClusterBlock] = []

    def enqueue(self, block: ClusterBlock):
        if not block.committed:
            raise ValueError("Only committed blocks are forwarded.")
        self.buffer.append(block)

    def forward_to_rsu(
        self,
        position: Position,
        rsu_positions: typing.Mapping[NodeId, Position],
        radio: RadioModel,
    ) -> typing.Tuple[typing.Optional[NodeId], typing.List[ClusterBlock]]:
        """Hands the whole buffer, in commit order, to the nearest RSU in
        range. Keeps it buffered when no RSU is reachable."""
        if not self.buffer:
            return None, []
        target = nearest_rsu(position, rsu_positions, radio)
        if target is None:
            return None, []
        blocks, self.buffer = self.buffer, []
        return target, blocks

    def __len__(self):
        return len(self.buffer)
