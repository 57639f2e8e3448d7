from blackchain.entities.encoding import Decoder, Encoder

import enum
import math
import typing


class NodeKind(str, enum.Enum):
    MA = "ma"
    RSU = "rsu"
    VEHICLE = "vehicle"


class NodeId(typing.NamedTuple):
    """Ground-truth identity of a simulated node. Never visible to the
    protocol logic of other nodes, which only ever sees pseudonyms."""

    kind: NodeKind
    index: int

    def __str__(self):
        return f"{self.kind.value}-{self.index}"

    def encode(self, enc: Encoder):
        enc.text(self.kind.value).u32(self.index)

    @classmethod
    def decode(cls, dec: Decoder) -> "NodeId":
        return cls(NodeKind(dec.text()), dec.u32())


def vehicle(index: int) -> NodeId:
    return NodeId(NodeKind.VEHICLE, index)


def rsu(index: int) -> NodeId:
    return NodeId(NodeKind.RSU, index)


def ma(index: int) -> NodeId:
    return NodeId(NodeKind.MA, index)


class Position(typing.NamedTuple):
    x: float
    y: float

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def encode(self, enc: Encoder):
        enc.f64(self.x).f64(self.y)

    @classmethod
    def decode(cls, dec: Decoder) -> "Position":
        return cls(dec.f64(), dec.f64())
