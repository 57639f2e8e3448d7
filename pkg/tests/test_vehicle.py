import math
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from blackchain.entities.beacon import CheckName, MisbehaviorReport, TrustStatement
from blackchain.entities.utils import EvidenceClosureError
from blackchain.protocol.vehicle import (
    DetectionParams,
    MobilityModel,
    build_report,
    detect_misbehavior,
    select_pseudonym,
    step_mobility,
    verify_report,
)
from blackchain.sim.engine import TICKS_PER_SECOND
from tests.fixtures import World, state_at


class TestDetection(unittest.TestCase):
    def setUp(self):
        self.world = World(vehicles=2)
        self.sender, self.receiver = self.world.vehicles
        self.params = DetectionParams()

    def beacon(self, t, x, y=100.0):
        return self.sender.emit_beacon(t, state=state_at(x, y))

    def testThresholds(self):
        self.assertAlmostEqual(self.params.speed_threshold, 77.0)
        self.assertAlmostEqual(self.params.jump_threshold(10), 75.0)

    def testFirstBeaconNeverFires(self):
        self.assertIsNone(detect_misbehavior({}, self.beacon(0, 0.0)))

    def testSpeedBound(self):
        prev, incoming = self.beacon(0, 0.0), self.beacon(1, 500.0)
        statement = detect_misbehavior({prev.p_id: prev}, incoming, self.params)
        self.assertEqual(statement.check_name, CheckName.SPEED_BOUND)
        self.assertAlmostEqual(statement.computed_value, 5000.0)
        self.assertEqual(statement.threshold, self.params.speed_threshold)
        self.assertEqual(statement.inputs, [prev.hash, incoming.hash])
        self.assertEqual(statement.suspect_p_id, incoming.p_id)

    def testTeleportBelowSpeedBound(self):
        prev, incoming = self.beacon(0, 0.0), self.beacon(10, 76.0)
        statement = detect_misbehavior({prev.p_id: prev}, incoming, self.params)
        self.assertEqual(statement.check_name, CheckName.TELEPORT)
        self.assertAlmostEqual(statement.computed_value, 76.0)
        self.assertAlmostEqual(statement.threshold, 75.0)

    def testBeaconRate(self):
        prev, incoming = self.beacon(3, 0.0), self.beacon(3, 1.0)
        statement = detect_misbehavior({prev.p_id: prev}, incoming, self.params)
        self.assertEqual(statement.check_name, CheckName.BEACON_RATE)
        self.assertEqual(statement.computed_value, 2.0)
        self.assertEqual(statement.threshold, 1.0)

    def testPlausibleMovement(self):
        prev, incoming = self.beacon(0, 0.0), self.beacon(1, 2.0)
        self.assertIsNone(
            detect_misbehavior({prev.p_id: prev}, incoming, self.params)
        )

    def testReceiveQueuesOneReportPerCooldown(self):
        anchors = self.world.anchors
        self.receiver.receive(self.beacon(0, 0.0), anchors)
        self.assertIsNotNone(self.receiver.receive(self.beacon(1, 500.0), anchors))
        self.assertIsNotNone(self.receiver.receive(self.beacon(2, 0.0), anchors))
        self.assertEqual(self.receiver.statements_made, 2)
        self.assertEqual(len(self.receiver.pending), 1)

    def testOwnBeaconsIgnored(self):
        self.assertIsNone(
            self.sender.receive(self.beacon(0, 0.0), self.world.anchors)
        )
        self.assertEqual(self.sender.log, {})

    def testUnknownIssuerDropped(self):
        self.receiver.receive(self.beacon(0, 0.0), {})
        self.assertEqual(self.receiver.log, {})


class TestReports(unittest.TestCase):
    def setUp(self):
        self.world = World(vehicles=2)
        self.reporter, self.attacker = self.world.vehicles
        self.report = self.world.false_report(self.reporter, self.attacker, "c0")
        self.anchors = self.world.anchors
        pseudonym = self.report.reporter
        self.keypair = self.reporter.pool.keypair(pseudonym.p_id)

    def resigned(self, **changes):
        fields = dict(
            suspects=self.report.suspects,
            detected=self.report.detected,
            reporter=self.report.reporter,
            cluster_id=self.report.cluster_id,
            tick=self.report.tick,
            evidence=self.report.evidence,
        )
        fields.update(changes)
        return MisbehaviorReport(**fields).signed(self.keypair)

    def testReportVerifies(self):
        self.assertTrue(verify_report(self.report, self.anchors))
        self.assertEqual(self.report.suspects, [self.world.p_id(self.attacker, 1)])
        self.assertEqual(len(self.report.evidence), 2)

    def testTamperedTickBreaksSignature(self):
        report = MisbehaviorReport(
            self.report.suspects,
            self.report.detected,
            self.report.reporter,
            self.report.cluster_id,
            self.report.tick + 1,
            self.report.evidence,
            self.report.signature,
        )
        self.assertEqual(
            verify_report(report, self.anchors).reason, "reporter-signature"
        )

    def testInflatedValueFailsReexecution(self):
        statement = self.report.detected[0]
        inflated = TrustStatement(
            statement.suspect_p_id,
            statement.check_name,
            statement.inputs,
            statement.computed_value * 2,
            statement.threshold,
        )
        verdict = verify_report(self.resigned(detected=[inflated]), self.anchors)
        self.assertEqual(verdict.reason, "re-execution")

    def testMissingEvidence(self):
        verdict = verify_report(
            self.resigned(evidence=self.report.evidence[1:]), self.anchors
        )
        self.assertEqual(verdict.reason, "closure")

    def testSuspectListMustMatch(self):
        verdict = verify_report(self.resigned(suspects=[]), self.anchors)
        self.assertEqual(verdict.reason, "suspects")

    def testUnknownRegion(self):
        self.assertEqual(verify_report(self.report, {}).reason, "reporter-certificate")

    def testBuildReportNeedsEvidence(self):
        with self.assertRaises(EvidenceClosureError):
            build_report(
                self.report.detected,
                self.report.reporter,
                self.keypair,
                "c0",
                1,
                [],
            )
        with self.assertRaises(ValueError):
            build_report([], self.report.reporter, self.keypair, "c0", 1, [])

    def testTakeReportClearsPending(self):
        self.assertEqual(self.reporter.pending, [])
        self.assertIsNone(self.reporter.take_report("c0", 2))


class TestPseudonymSelection(unittest.TestCase):
    def setUp(self):
        self.vehicle = World(vehicles=1).vehicles[0]

    def testLatestWindowWins(self):
        chosen = select_pseudonym(self.vehicle.pool, 550)
        self.assertEqual(chosen.valid_from, 500)

    def testRevokedPseudonymSkipped(self):
        latest = select_pseudonym(self.vehicle.pool, 550)
        fallback = select_pseudonym(self.vehicle.pool, 550, {latest.p_id})
        self.assertEqual(fallback.valid_from, 0)

    def testSilentWhenEverythingRevoked(self):
        revoked = {p.p_id for p in self.vehicle.pool.pseudonyms}
        self.assertIsNone(self.vehicle.emit_beacon(550, revoked))
        self.assertEqual(self.vehicle.beacons_sent, 0)


class TestMobility(unittest.TestCase):
    model = MobilityModel()

    @settings(max_examples=200, deadline=None)
    @given(
        x=st.floats(0.0, 2000.0),
        y=st.floats(0.0, 2000.0),
        speed=st.floats(0.0, 70.0),
        heading=st.floats(0.0, 6.28),
        dt=st.integers(1, 50),
        seed=st.integers(0, 2 ** 32 - 1),
    )
    def testStepStaysInBounds(self, x, y, speed, heading, dt, seed):
        state = state_at(x, y, speed, heading)
        moved = step_mobility(state, dt, np.random.default_rng(seed), self.model)
        self.assertTrue(moved.is_valid(self.model.v_max))
        self.assertTrue(0.0 <= moved.position.x <= self.model.width)
        self.assertTrue(0.0 <= moved.position.y <= self.model.height)
        travelled = state.position.distance_to(moved.position)
        self.assertLessEqual(
            travelled, moved.speed * dt / TICKS_PER_SECOND + 1e-6
        )

    def testZeroStepRejected(self):
        with self.assertRaises(ValueError):
            step_mobility(state_at(0, 0), 0, np.random.default_rng(0), self.model)

    def testHeadingNormalized(self):
        state = state_at(1000.0, 1000.0, 10.0, 2 * math.pi - 1e-12)
        moved = step_mobility(state, 1, np.random.default_rng(1), self.model)
        self.assertLess(moved.heading, 2 * math.pi)
