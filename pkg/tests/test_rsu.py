import itertools
import unittest

from blackchain.entities.node import Position, ma, rsu
from blackchain.entities.rsu import RsuGroup, bft_quorum, fault_tolerance
from blackchain.protocol.rsu import (
    RsuBehavior,
    aggregate,
    bft_round,
    conflicting_proposal,
    group_rsus,
    report_to_ma,
    validate_cluster_block,
    verify_statement,
)
from tests.fixtures import World


class TestGrouping(unittest.TestCase):
    positions = {
        rsu(0): Position(250, 250),
        rsu(1): Position(750, 250),
        rsu(2): Position(250, 750),
        rsu(3): Position(1250, 250),
    }

    def testGridCells(self):
        groups = group_rsus(self.positions, 1000.0)
        self.assertEqual(
            [(g.group_id, g.members) for g in groups],
            [("g0_0", (rsu(0), rsu(1), rsu(2))), ("g1_0", (rsu(3),))],
        )

    def testDegenerateGroup(self):
        groups = group_rsus(self.positions, 1000.0)
        self.assertTrue(groups[1].degenerate)
        self.assertEqual(groups[1].quorum, 1)
        self.assertTrue(groups[0].degenerate)

    def testQuorumSizes(self):
        self.assertEqual([fault_tolerance(n) for n in (1, 3, 4, 7)], [0, 0, 1, 2])
        self.assertEqual([bft_quorum(n) for n in (1, 4, 7, 10)], [1, 3, 5, 7])

    def testLeaderRotates(self):
        group = RsuGroup("g", [rsu(2), rsu(0), rsu(1)], (0, 0))
        self.assertEqual([group.leader(h) for h in range(4)], [rsu(0), rsu(1), rsu(2), rsu(0)])

    def testBadCellSize(self):
        with self.assertRaises(ValueError):
            group_rsus(self.positions, 0)


class TestValidation(unittest.TestCase):
    def setUp(self):
        self.world = World(vehicles=4)
        self.block, self.attacker = self.world.attacked_block()
        self.unit = self.world.rsus[self.world.group.members[0]]

    def validate(self, block, **kw):
        return validate_cluster_block(
            self.unit, block, self.world.anchors, self.world.params, **kw
        )

    def testCommittedBlockValid(self):
        self.assertTrue(self.validate(self.block))

    def testForkRejected(self):
        self.assertTrue(self.unit.receive_block(self.block, self.world.anchors))
        cluster = self.world.cluster(self.world.vehicles[:-1])
        rival = self.world.commit(cluster, [], 5)
        self.assertEqual(rival.height, self.block.height)
        self.assertEqual(self.validate(rival).reason, "fork")
        self.assertEqual(
            self.unit.receive_block(rival, self.world.anchors).reason, "fork"
        )
        self.assertEqual(self.unit.rejected, 1)

    def testRevokedMember(self):
        verdict = self.validate(self.block, is_revoked=lambda p_id, t: True)
        self.assertEqual(verdict.reason, "revoked-member")

    def testQuorumNeeded(self):
        self.block.votes[:] = self.block.votes[:1]
        self.assertEqual(self.validate(self.block).reason, "quorum")

    def testReceiveIsIdempotent(self):
        for _ in range(2):
            self.assertTrue(self.unit.receive_block(self.block, self.world.anchors))
        self.assertEqual(list(self.unit.pending), [self.block.block_hash])
        self.unit.settle([self.block])
        self.assertEqual(self.unit.pending, {})


class TestAggregation(unittest.TestCase):
    def setUp(self):
        self.world = World(vehicles=4)
        self.block, self.attacker = self.world.attacked_block()
        report = self.block.reports[0]
        pair = self.world.cluster(self.world.vehicles[:2])
        self.other = self.world.commit(pair, [report], 2)
        self.group_id = self.world.group.group_id

    def testSharedReportStoredOnce(self):
        stmt = aggregate(self.group_id, 0, [self.block, self.other])
        self.assertEqual(len(stmt.included_blocks), 2)
        self.assertEqual(len(stmt.evidence_bundle), 1)
        self.assertEqual(
            [c.suspect_p_id for c in stmt.revocation_candidates],
            [self.world.p_id(self.attacker, 1)],
        )
        self.assertEqual(len(stmt.revocation_candidates[0].report_hashes), 1)

    def testOrderIndependent(self):
        a = aggregate(self.group_id, 0, [self.block, self.other])
        b = aggregate(self.group_id, 0, [self.other, self.block, self.other])
        self.assertEqual(a.statement_hash, b.statement_hash)

    def testConflictingProposalDiffers(self):
        stmt = aggregate(self.group_id, 0, [self.block, self.other])
        conflict, blocks = conflicting_proposal(stmt, [self.block, self.other])
        self.assertEqual(len(blocks), 1)
        self.assertEqual((conflict.group_id, conflict.height), (stmt.group_id, stmt.height))
        self.assertNotEqual(conflict.statement_hash, stmt.statement_hash)

    def testCertifiedStatementVerifies(self):
        stmt = self.world.certified([self.block, self.other])
        members = {str(m): u.public_key for m, u in self.world.rsus.items()}
        quorum = self.world.group.quorum
        anchors = self.world.anchors
        self.assertTrue(verify_statement(stmt, members, quorum, anchors))
        self.assertEqual(
            verify_statement(stmt.with_certificate(stmt.quorum_cert[:2]), members, quorum, anchors).reason,
            "quorum",
        )
        stranger = dict(members)
        stranger[str(stmt.quorum_cert[0].signer)] = b"\x00" * 32
        self.assertEqual(
            verify_statement(stmt, stranger, quorum, anchors).reason,
            "unknown-signer",
        )

    def testOnlyCertifiedStatementsReported(self):
        stmt = aggregate(self.group_id, 0, [self.block])
        with self.assertRaises(ValueError):
            report_to_ma(stmt, rsu(0), [ma(0)], None, None)


class TestBftRound(unittest.TestCase):
    """Four members, f = 1, quorum 3."""

    def setUp(self):
        self.world = World(vehicles=4)
        self.block, _ = self.world.attacked_block()
        pair = self.world.cluster(self.world.vehicles[:2])
        self.other = self.world.commit(pair, [self.block.reports[0]], 2)
        self.group = self.world.group
        self.members = self.group.members
        self.keys = self.world.keys()
        self.valid = {self.block.block_hash, self.other.block_hash}
        self.byzantine = set()

    def accepts(self, member, block):
        return member in self.byzantine or block.block_hash in self.valid

    def round(self, height, behaviors=None, split=None):
        return bft_round(
            self.group,
            height,
            {self.members[0]: [self.block, self.other]},
            self.keys,
            self.accepts,
            behaviors,
            split,
        )

    def testAllHonestCommit(self):
        outcome = self.round(0)
        self.assertTrue(outcome.decided)
        self.assertEqual(outcome.leader, self.members[0])
        self.assertEqual(len(outcome.committed.included_blocks), 2)
        self.assertEqual(len(outcome.committed.quorum_cert), 4)
        self.assertEqual(outcome.certified, [outcome.committed])

    def testSilentLeaderStalls(self):
        outcome = self.round(1, {self.members[1]: RsuBehavior.SILENT})
        self.assertFalse(outcome.decided)
        self.assertEqual(outcome.certified, [])

    def testSilentFollowerTolerated(self):
        outcome = self.round(0, {self.members[3]: RsuBehavior.SILENT})
        self.assertTrue(outcome.decided)

    def testAtMostOneStatementPerHeight(self):
        behaviors = [{}] + [
            {m: b} for m in self.members for b in (RsuBehavior.SILENT, RsuBehavior.EQUIVOCATE)
        ]
        splits = [
            set(c)
            for r in range(len(self.members) + 1)
            for c in itertools.combinations(self.members, r)
        ]
        for height in range(len(self.members)):
            for behavior in behaviors:
                for split in splits:
                    outcome = self.round(height, behavior, split)
                    hashes = {s.statement_hash for s in outcome.certified}
                    self.assertLessEqual(len(hashes), 1, (height, behavior, split))
                    if outcome.decided:
                        self.assertIn(outcome.committed, outcome.certified)
                    if not behavior:
                        self.assertTrue(outcome.decided)

    def testTwoByzantineNeverCommitInvalidBlock(self):
        self.valid = {self.block.block_hash}
        for height in range(len(self.members)):
            for pair in itertools.combinations(self.members, 2):
                behaviors = {m: RsuBehavior.EQUIVOCATE for m in pair}
                self.byzantine = set(pair)
                outcome = self.round(height, behaviors)
                if outcome.decided:
                    self.assertLessEqual(
                        set(outcome.committed.included_blocks), self.valid
                    )
                    for block in outcome.blocks:
                        self.assertIn(block.block_hash, self.valid)
