import unittest

from blackchain.entities.node import Position, rsu, vehicle
from blackchain.entities.utils import PastTickError
from blackchain.sim.engine import Event, SimClock, Simulator
from blackchain.sim.network import Network, RadioModel, broadcast
from blackchain.sim.rng import RngRegistry


class TestEngine(unittest.TestCase):
    def setUp(self):
        self.sim = Simulator(42)
        self.trace = []

    def event(self, name):
        return Event(name, lambda: self.trace.append((self.sim.now, name)))

    def testSameTickKeepsInsertionOrder(self):
        self.sim.schedule(self.event("A"), 7)
        self.sim.schedule(self.event("B"), 7)
        self.sim.schedule(self.event("early"), 3)
        self.sim.run(10)
        self.assertEqual(self.trace, [(3, "early"), (7, "A"), (7, "B")])

    def testScheduleAtNowRunsAfterQueuedEvents(self):
        def first():
            self.trace.append((self.sim.now, "first"))
            self.sim.schedule(self.event("late"), self.sim.now)

        self.sim.schedule(Event("first", first), 5)
        self.sim.schedule(self.event("second"), 5)
        self.sim.run(5)
        self.assertEqual(
            self.trace, [(5, "first"), (5, "second"), (5, "late")]
        )

    def testPastTickRejected(self):
        self.sim.run(5)
        with self.assertRaises(PastTickError):
            self.sim.schedule(self.event("E"), 3)

    def testClockNeverMovesBack(self):
        clock = SimClock(10)
        self.assertEqual(clock.seconds, 1.0)
        with self.assertRaises(PastTickError):
            clock.advance_to(9)
        with self.assertRaises(ValueError):
            SimClock(-1)

    def testEventLogIsReplayable(self):
        def run_once():
            sim = Simulator(1)
            for i, at in enumerate([4, 2, 4, 9]):
                sim.schedule(Event(f"e{i}", lambda: None, details={"i": i}), at)
            sim.run(20)
            return sim.event_log

        self.assertEqual(run_once(), run_once())
        self.assertEqual(len(run_once()), 4)

    def testRunAdvancesClockToLimit(self):
        self.sim.run(12)
        self.assertEqual(self.sim.now, 12)
        self.assertEqual(self.sim.pending(), 0)


class TestRng(unittest.TestCase):
    def testStreamsReplay(self):
        a = RngRegistry(42).stream("mobility")
        b = RngRegistry(42).stream("mobility")
        self.assertEqual(
            [a.random() for _ in range(3)], [b.random() for _ in range(3)]
        )

    def testStreamsIndependentOfConsumption(self):
        first = RngRegistry(42)
        second = RngRegistry(42)
        for _ in range(100):
            first.stream("keys").random()
        self.assertEqual(
            first.stream("mobility").random(),
            second.stream("mobility").random(),
        )

    def testLabelsDiffer(self):
        registry = RngRegistry(42)
        a = registry.stream("a").random(1000)
        b = registry.stream("b").random(1000)
        self.assertFalse((a == b).all())

    def testSameLabelContinues(self):
        registry = RngRegistry(3)
        self.assertIs(registry.stream("x"), registry("x"))

    def testNegativeSeed(self):
        with self.assertRaises(ValueError):
            RngRegistry(-1)


class TestNetwork(unittest.TestCase):
    def setUp(self):
        self.radio = RadioModel(500.0)
        self.positions = {
            vehicle(0): Position(0.0, 0.0),
            vehicle(1): Position(100.0, 0.0),
            vehicle(2): Position(0.0, 400.0),
            vehicle(3): Position(600.0, 0.0),
        }

    def testBroadcastDistances(self):
        receivers = broadcast(vehicle(0), "hello", self.positions, self.radio)
        self.assertEqual(receivers, {vehicle(1), vehicle(2)})

    def testBoundaryInclusive(self):
        positions = {vehicle(0): Position(0, 0), vehicle(1): Position(500.0, 0)}
        self.assertEqual(
            broadcast(vehicle(0), None, positions, self.radio), {vehicle(1)}
        )

    def testAloneReceivesNothing(self):
        positions = {vehicle(0): Position(0, 0)}
        self.assertEqual(broadcast(vehicle(0), None, positions, self.radio), set())

    def testSenderWithoutPosition(self):
        with self.assertRaises(KeyError):
            broadcast(vehicle(9), None, self.positions, self.radio)

    def testRangeLimits(self):
        with self.assertRaises(ValueError):
            RadioModel(200.0)
        with self.assertRaises(ValueError):
            RadioModel(1200.0)
        self.assertEqual(RadioModel(200.0, override=True).range_m, 200.0)

    def testSymmetry(self):
        for a in self.positions:
            for b in broadcast(a, None, self.positions, self.radio):
                self.assertIn(a, broadcast(b, None, self.positions, self.radio))

    def testDeliveryNextTick(self):
        sim = Simulator(0)
        network = Network(sim, self.radio)
        received = []
        network.broadcast(
            vehicle(0),
            "b",
            self.positions,
            lambda node, payload: received.append((sim.now, node)),
        )
        self.assertEqual(received, [])
        sim.run(1)
        self.assertEqual(received, [(1, vehicle(1)), (1, vehicle(2))])
        self.assertEqual(network.deliveries, 2)

    def testLinkDelay(self):
        sim = Simulator(0)
        network = Network(sim, self.radio, link_delay=3)
        received = []
        network.send(
            rsu(0), rsu(1), "s", lambda node, payload: received.append(sim.now)
        )
        sim.run(10)
        self.assertEqual(received, [3])
        with self.assertRaises(ValueError):
            Network(sim, self.radio, link_delay=0)
