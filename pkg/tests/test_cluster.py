import unittest

from blackchain.entities.cluster import Endorsement, cluster_genesis_hash
from blackchain.entities.node import Position, rsu
from blackchain.entities.utils import NotHeadError
from blackchain.protocol.adversary import bad_mouth_report, forge_block
from blackchain.protocol.cluster import (
    BlockForwarder,
    ClusterView,
    check_candidate,
    form_clusters,
    local_revocation_decision,
    nearest_rsu,
    propose_block,
    tally_votes,
    vote_block,
)
from blackchain.sim.network import RadioModel
from tests.fixtures import World


class TestFormation(unittest.TestCase):
    radio = RadioModel(500.0)

    def testNeighborsShareCluster(self):
        positions = {
            "c": Position(0, 0),
            "a": Position(100, 0),
            "b": Position(200, 0),
        }
        clusters = form_clusters(positions, self.radio, 7)
        self.assertEqual(len(clusters), 1)
        self.assertEqual(clusters[0].members, ("a", "b", "c"))
        self.assertEqual(clusters[0].head, "a")
        self.assertEqual(clusters[0].formed_at, 7)

    def testEveryMemberWithinRangeOfEveryOther(self):
        positions = {
            "a": Position(0, 0),
            "b": Position(400, 0),
            "c": Position(800, 0),
        }
        clusters = form_clusters(positions, self.radio)
        self.assertEqual([c.members for c in clusters], [("a", "b"), ("c",)])

    def testPartition(self):
        positions = {f"p{i}": Position(300.0 * i, 0) for i in range(6)}
        clusters = form_clusters(positions, self.radio)
        members = [m for c in clusters for m in c.members]
        self.assertEqual(sorted(members), sorted(positions))
        for c in clusters:
            self.assertEqual(c.head, min(c.members))

    def testClusterIdDependsOnMembers(self):
        positions = {"a": Position(0, 0), "b": Position(10, 0)}
        first = form_clusters(positions, self.radio, 0)[0]
        again = form_clusters(positions, self.radio, 0)[0]
        later = form_clusters(positions, self.radio, 50)[0]
        self.assertEqual(first.cluster_id, again.cluster_id)
        self.assertNotEqual(first.cluster_id, later.cluster_id)


class TestClusterChain(unittest.TestCase):
    def setUp(self):
        self.world = World(vehicles=4)
        self.honest = self.world.vehicles[:-1]
        self.attacker = self.world.vehicles[-1]
        self.cluster = self.world.cluster(self.honest)
        self.report = self.world.false_report(
            self.honest[0], self.attacker, self.cluster.cluster_id
        )
        self.views = {m: ClusterView(self.cluster) for m in self.cluster.members}

    def propose(self, reports, t=2):
        return propose_block(
            self.cluster,
            self.cluster.head,
            self.views[self.cluster.head],
            reports,
            t,
            self.world.anchors,
        )

    def testOnlyHeadProposes(self):
        other = next(m for m in self.cluster.members if m != self.cluster.head)
        with self.assertRaises(NotHeadError):
            propose_block(
                self.cluster,
                other,
                self.views[other],
                [],
                2,
                self.world.anchors,
            )

    def testEmptyCandidate(self):
        candidate = self.propose([])
        self.assertEqual(candidate.reports, [])
        self.assertEqual(candidate.height, 0)
        self.assertEqual(
            candidate.prev_hash, cluster_genesis_hash(self.cluster.cluster_id)
        )

    def testDuplicateReportsIncludedOnce(self):
        candidate = self.propose([self.report, self.report])
        self.assertEqual(len(candidate.reports), 1)
        suspect = self.world.p_id(self.attacker, 1)
        self.assertEqual(
            candidate.revocation_votes,
            {suspect: (self.report.reporter_p_id,)},
        )

    def testHeadDropsInvalidReports(self):
        fake = bad_mouth_report(
            self.honest[1],
            [self.attacker.emit_beacon(0), self.attacker.emit_beacon(1)],
            self.cluster.cluster_id,
            1,
        )
        candidate = self.propose([fake, self.report])
        self.assertEqual(candidate.reports, [self.report])

    def testCommitAndChain(self):
        block = self.world.commit(self.cluster, [self.report], 2, self.views)
        self.assertTrue(block.committed)
        self.assertEqual(len(block.distinct_endorsers()), len(self.cluster.members))
        for view in self.views.values():
            self.assertEqual(view.height, 0)
            self.assertEqual(view.tip, block.block_hash)
        follow = self.world.commit(self.cluster, [], 3, self.views)
        self.assertEqual(follow.height, 1)
        self.assertEqual(follow.prev_hash, block.block_hash)

    def testEndorsementExcludedFromHash(self):
        candidate = self.propose([self.report])
        before = candidate.block_hash
        member = self.cluster.members[0]
        candidate.add_vote(
            Endorsement.create(
                self.world.certificate(member),
                self.world.holder(member).pool.keypair(member),
                before,
            )
        )
        self.assertEqual(candidate.block_hash, before)
        self.assertEqual(len(candidate.votes), 1)

    def testOneEndorsementPerHeight(self):
        member = self.cluster.members[-1]
        first = self.propose([self.report])
        second = self.propose([])
        args = (self.cluster, self.views[member], self.world.anchors)
        keypair = self.world.holder(member).pool.keypair(member)
        certificate = self.world.certificate(member)
        self.assertIsInstance(
            vote_block(certificate, keypair, first, *args), Endorsement
        )
        verdict = vote_block(certificate, keypair, second, *args)
        self.assertEqual(verdict.reason, "already-endorsed")

    def testForgedBlockRejectedByMembers(self):
        fake = bad_mouth_report(
            self.honest[1],
            [self.attacker.emit_beacon(0), self.attacker.emit_beacon(1)],
            self.cluster.cluster_id,
            1,
        )
        forged = forge_block(
            self.cluster, self.views[self.cluster.head], [fake], 2
        )
        for member in self.cluster.members:
            verdict = check_candidate(
                forged, self.cluster, self.views[member], self.world.anchors
            )
            self.assertEqual(verdict.reason, "report")

    def testOutsiderCannotVote(self):
        candidate = self.propose([])
        outsider = self.world.p_id(self.attacker)
        verdict = vote_block(
            self.world.certificate(outsider),
            self.attacker.pool.keypair(outsider),
            candidate,
            self.cluster,
            ClusterView(self.cluster),
            self.world.anchors,
        )
        self.assertEqual(verdict.reason, "not-member")

    def testUncommittedBlockNotAccepted(self):
        candidate = self.propose([self.report])
        self.assertFalse(candidate.committed)
        self.assertFalse(self.views[self.cluster.head].accept(candidate))

    def testLocalDecisionNeedsMajorityOfOthers(self):
        block = self.world.commit(self.cluster, [self.report], 2, self.views)
        suspect = self.world.p_id(self.attacker, 1)
        # one accuser out of three members
        self.assertFalse(local_revocation_decision(block, suspect))

    def testOutsideReportersDoNotVote(self):
        self.assertEqual(tally_votes([self.report], ()), {})


class TestForwarding(unittest.TestCase):
    radio = RadioModel(500.0)

    def setUp(self):
        self.rsus = {rsu(0): Position(0, 0), rsu(1): Position(900, 0)}

    def testNearestInRange(self):
        self.assertEqual(nearest_rsu(Position(600, 0), self.rsus, self.radio), rsu(1))
        self.assertIsNone(nearest_rsu(Position(450, 1000), self.rsus, self.radio))

    def testBufferedUntilReachable(self):
        world = World(vehicles=4)
        block, _ = world.attacked_block()
        forwarder = BlockForwarder()
        forwarder.enqueue(block)
        self.assertEqual(
            forwarder.forward_to_rsu(Position(450, 1000), self.rsus, self.radio),
            (None, []),
        )
        self.assertEqual(len(forwarder), 1)
        target, blocks = forwarder.forward_to_rsu(
            Position(10, 0), self.rsus, self.radio
        )
        self.assertEqual((target, blocks), (rsu(0), [block]))
        self.assertEqual(len(forwarder), 0)

    def testOnlyCommittedBlocksForwarded(self):
        world = World(vehicles=3)
        cluster = world.cluster(world.vehicles)
        candidate = propose_block(
            cluster,
            cluster.head,
            ClusterView(cluster),
            [],
            0,
            world.anchors,
        )
        with self.assertRaises(ValueError):
            BlockForwarder().enqueue(candidate)
