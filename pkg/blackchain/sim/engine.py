"""
Deterministic discrete-event engine.

One tick is 100 ms of simulated time. Events scheduled for the same tick run
in insertion order, so a fixed seed always yields the same event log.
"""
from blackchain.entities.node import NodeId
from blackchain.entities.utils import PastTickError
from blackchain.sim.rng import RngRegistry

import heapq
import itertools
import json
import logging
import typing

TICKS_PER_SECOND = 10


class SimClock(object):
    def __init__(self, tick: int = 0):
        if tick < 0:
            raise ValueError("Ticks are non-negative.")
        self._tick = tick

    @property
    def tick(self) -> int:
        return self._tick

    @property
    def seconds(self) -> float:
        return self._tick / TICKS_PER_SECOND

    def advance_to(self, tick: int):
        if tick < self._tick:
            raise PastTickError(
                f"Clock cannot move back from {self._tick} to {tick}."
            )
        self._tick = tick

    def __repr__(self):
        return f"SimClock({self._tick})"


class Event(object):
    """A unit of work executed by the engine at a given tick."""

    def __init__(
        self,
        kind: str,
        action: typing.Callable[[], None],
        node: typing.Optional[NodeId] = None,
        details: typing.Optional[dict] = None,
        logged: bool = True,
    ):
        self.kind = kind
        self.action = action
        self.node = node
        self.details = details or {}
        self.logged = logged

    def __repr__(self):
        return f"Event({self.kind}, node={self.node})"


class Simulator(object):
    def __init__(self, seed: int):
        self.clock = SimClock()
        self.rngs = RngRegistry(seed)
        self.event_log: typing.List[str] = []
        self._queue = []
        self._seq = itertools.count()

    @property
    def now(self) -> int:
        return self.clock.tick

    def rng(self, stream: str):
        return self.rngs.stream(stream)

    def schedule(self, event: Event, at: int):
        """Queues event for tick `at`. Same-tick events keep insertion
        order, including events added while that tick is running."""
        if at < self.now:
            raise PastTickError(
                f"Cannot schedule {event.kind} at {at}; now is {self.now}."
            )
        heapq.heappush(self._queue, (at, next(self._seq), event))

    def schedule_in(self, event: Event, delay: int):
        self.schedule(event, self.now + delay)

    def pending(self) -> int:
        return len(self._queue)

    def log(self, kind: str, node: typing.Optional[NodeId] = None, **details):
        record = {"tick": self.now, "node": str(node) if node else None, "event": kind}
        record.update(details)
        self.event_log.append(json.dumps(record, sort_keys=True, default=str))

    def step(self) -> bool:
        """Runs the next queued event. Returns False when the queue is empty."""
        if not self._queue:
            return False
        at, _, event = heapq.heappop(self._queue)
        self.clock.advance_to(at)
        if event.logged:
            self.log(event.kind, event.node, **event.details)
        event.action()
        return True

    def run(self, until: int):
        """Runs every event scheduled at or before tick `until`."""
        while self._queue and self._queue[0][0] <= until:
            self.step()
        if self.now < until:
            self.clock.advance_to(until)
        logging.debug(f"Simulation reached tick {self.now}.")
