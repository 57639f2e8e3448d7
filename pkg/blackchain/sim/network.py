"""
Range-limited broadcast radio and reliable infrastructure links.

Propagation is a unit disc: a node receives a broadcast iff its distance to
the sender is at most range_m. Broadcasts are delivered at the next tick,
point-to-point links after a fixed delay.
"""
from blackchain.entities.node import NodeId, Position
from blackchain.sim.engine import Event, Simulator

import typing

MIN_RANGE_M = 300.0
MAX_RANGE_M = 1000.0


class RadioModel(object):
    def __init__(self, range_m: float = 500.0, override: bool = False):
        if range_m <= 0:
            raise ValueError("Radio range must be positive.")
        if not override and not MIN_RANGE_M <= range_m <= MAX_RANGE_M:
            raise ValueError(
                f"Radio range {range_m} m outside [{MIN_RANGE_M}, "
                f"{MAX_RANGE_M}] m; pass override=True to force it."
            )
        self.range_m = float(range_m)

    def in_range(self, a: Position, b: Position) -> bool:
        return a.distance_to(b) <= self.range_m

    def __repr__(self):
        return f"RadioModel(range_m={self.range_m})"


def broadcast(
    sender: NodeId,
    payload: typing.Any,
    positions: typing.Mapping[NodeId, Position],
    radio: RadioModel,
) -> typing.Set[NodeId]:
    """Nodes other than sender within range of sender's position."""
    if sender not in positions:
        raise KeyError(f"{sender} has no position.")
    origin = positions[sender]
    return {
        node
        for node, pos in positions.items()
        if node != sender and radio.in_range(origin, pos)
    }


Handler = typing.Callable[[NodeId, typing.Any], None]


class Network(object):
    """Binds the radio and the infrastructure links to a simulator."""

    def __init__(
        self,
        sim: Simulator,
        radio: RadioModel,
        link_delay: int = 1,
    ):
        if link_delay < 1:
            raise ValueError("Link delay is at least one tick.")
        self.sim = sim
        self.radio = radio
        self.link_delay = link_delay
        self.deliveries = 0

    def broadcast(
        self,
        sender: NodeId,
        payload: typing.Any,
        positions: typing.Mapping[NodeId, Position],
        handler: Handler,
        kind: str = "deliver",
    ) -> typing.Set[NodeId]:
        receivers = broadcast(sender, payload, positions, self.radio)
        ordered = sorted(receivers)

        def deliver():
            for receiver in ordered:
                handler(receiver, payload)

        if ordered:
            self.deliveries += len(ordered)
            self.sim.schedule_in(
                Event(kind, deliver, node=sender, logged=False), 1
            )
        return receivers

    def send(
        self,
        src: NodeId,
        dst: NodeId,
        payload: typing.Any,
        handler: Handler,
        kind: str = "link",
        delay: int = None,
    ):
        """Reliable point-to-point delivery (RSU to RSU, RSU to MA, MA to MA)."""
        self.deliveries += 1
        self.sim.schedule_in(
            Event(
                kind,
                lambda: handler(dst, payload),
                node=dst,
                details={"from": str(src)},
            ),
            self.link_delay if delay is None else delay,
        )
