"""
Messages produced by vehicles: signed beacons, trust statements and the
misbehavior reports built from them.
"""
from blackchain import crypto
from blackchain.entities.base import Base
from blackchain.entities.encoding import Decoder, Encoder
from blackchain.entities.identity import Pseudonym
from blackchain.entities.node import Position

import enum
import math
import typing


class KinematicState(typing.NamedTuple):
    position: Position
    speed: float
    heading: float

    def encode(self, enc: Encoder):
        self.position.encode(enc)
        enc.f64(self.speed).f64(self.heading)

    @classmethod
    def decode(cls, dec: Decoder) -> "KinematicState":
        return cls(Position.decode(dec), dec.f64(), dec.f64())

    def is_valid(self, v_max: float) -> bool:
        return (
            math.isfinite(self.position.x)
            and math.isfinite(self.position.y)
            and 0.0 <= self.speed <= v_max
            and 0.0 <= self.heading < 2 * math.pi
        )


class Beacon(Base):
    """Periodic broadcast signed under a pseudonym. The pseudonym
    certificate travels with the message."""

    def __init__(
        self,
        certificate: Pseudonym,
        tick: int,
        state: KinematicState,
        meta: bytes = b"",
        signature: bytes = b"",
    ):
        self._certificate = certificate
        self._tick = tick
        self._state = state
        self._meta = meta
        self._signature = signature

    @classmethod
    def create(
        cls,
        certificate: Pseudonym,
        keypair: crypto.KeyPair,
        tick: int,
        state: KinematicState,
        meta: bytes = b"",
    ) -> "Beacon":
        unsigned = cls(certificate, tick, state, meta)
        return cls(
            certificate,
            tick,
            state,
            meta,
            keypair.sign(unsigned.signing_bytes()),
        )

    @property
    def certificate(self) -> Pseudonym:
        return self._certificate

    @property
    def tick(self) -> int:
        return self._tick

    @property
    def state(self) -> KinematicState:
        return self._state

    @property
    def meta(self) -> bytes:
        return self._meta

    @property
    def signature(self) -> bytes:
        return self._signature

    @property
    def p_id(self) -> str:
        return self._certificate.p_id

    def signing_bytes(self) -> bytes:
        enc = Encoder()
        self.certificate.encode(enc)
        enc.u64(self.tick)
        self.state.encode(enc)
        enc.blob(self.meta)
        return enc.getvalue()

    def verify_signature(self) -> bool:
        return crypto.verify(
            self.certificate.public_key, self.signing_bytes(), self.signature
        )

    def encode(self, enc: Encoder):
        enc.raw(self.signing_bytes()).blob(self.signature)

    @classmethod
    def decode(cls, dec: Decoder) -> "Beacon":
        return cls(
            certificate=Pseudonym.decode(dec),
            tick=dec.u64(),
            state=KinematicState.decode(dec),
            meta=dec.blob(),
            signature=dec.blob(),
        )


class CheckName(str, enum.Enum):
    SPEED_BOUND = "speed_bound"
    TELEPORT = "teleport"
    BEACON_RATE = "beacon_rate"


IMPLAUSIBLE = "implausible"


class TrustStatement(Base):
    """Result of one plausibility check. Anyone holding the referenced
    beacons can re-execute the check and must obtain computed_value."""

    def __init__(
        self,
        suspect_p_id: str,
        check_name: CheckName,
        inputs: typing.List[bytes],
        computed_value: float,
        threshold: float,
        verdict: str = IMPLAUSIBLE,
    ):
        self._suspect_p_id = suspect_p_id
        self._check_name = CheckName(check_name)
        self._inputs = list(inputs)
        self._verdict = verdict
        self._computed_value = computed_value
        self._threshold = threshold

    @property
    def suspect_p_id(self) -> str:
        return self._suspect_p_id

    @property
    def check_name(self) -> CheckName:
        return self._check_name

    @property
    def inputs(self) -> typing.List[bytes]:
        return self._inputs

    @property
    def verdict(self) -> str:
        return self._verdict

    @property
    def computed_value(self) -> float:
        return self._computed_value

    @property
    def threshold(self) -> float:
        return self._threshold

    def encode(self, enc: Encoder):
        enc.text(self.suspect_p_id).text(self.check_name.value)
        enc.seq(self.inputs, lambda e, h: e.blob(h))
        enc.text(self.verdict).f64(self.computed_value).f64(self.threshold)

    @classmethod
    def decode(cls, dec: Decoder) -> "TrustStatement":
        suspect = dec.text()
        check = dec.text()
        if check not in {c.value for c in CheckName}:
            raise ValueError(f"Unknown check {check}.")
        inputs = dec.seq(lambda d: d.blob())
        verdict = dec.text()
        return cls(
            suspect_p_id=suspect,
            check_name=CheckName(check),
            inputs=inputs,
            computed_value=dec.f64(),
            threshold=dec.f64(),
            verdict=verdict,
        )


class MisbehaviorReport(Base):
    """Misbehavior report: suspects, detected misbehavior, reporter
    pseudonym, cluster id and the signed beacons backing every statement."""

    def __init__(
        self,
        suspects: typing.List[str],
        detected: typing.List[TrustStatement],
        reporter: Pseudonym,
        cluster_id: str,
        tick: int,
        evidence: typing.List[Beacon],
        signature: bytes = b"",
    ):
        self._suspects = list(suspects)
        self._detected = list(detected)
        self._reporter = reporter
        self._cluster_id = cluster_id
        self._tick = tick
        self._evidence = list(evidence)
        self._signature = signature

    @property
    def suspects(self) -> typing.List[str]:
        return self._suspects

    @property
    def detected(self) -> typing.List[TrustStatement]:
        return self._detected

    @property
    def reporter(self) -> Pseudonym:
        return self._reporter

    @property
    def cluster_id(self) -> str:
        return self._cluster_id

    @property
    def tick(self) -> int:
        return self._tick

    @property
    def evidence(self) -> typing.List[Beacon]:
        return self._evidence

    @property
    def signature(self) -> bytes:
        return self._signature

    @property
    def reporter_p_id(self) -> str:
        return self._reporter.p_id

    def signing_bytes(self) -> bytes:
        enc = Encoder()
        enc.seq(self.suspects, lambda e, s: e.text(s))
        enc.seq(self.detected, lambda e, s: s.encode(e))
        self.reporter.encode(enc)
        enc.text(self.cluster_id).u64(self.tick)
        enc.seq(self.evidence, lambda e, b: b.encode(e))
        return enc.getvalue()

    def signed(self, keypair: crypto.KeyPair) -> "MisbehaviorReport":
        return MisbehaviorReport(
            self.suspects,
            self.detected,
            self.reporter,
            self.cluster_id,
            self.tick,
            self.evidence,
            keypair.sign(self.signing_bytes()),
        )

    def encode(self, enc: Encoder):
        enc.raw(self.signing_bytes()).blob(self.signature)

    @classmethod
    def decode(cls, dec: Decoder) -> "MisbehaviorReport":
        return cls(
            suspects=dec.seq(lambda d: d.text()),
            detected=dec.seq(TrustStatement.decode),
            reporter=Pseudonym.decode(dec),
            cluster_id=dec.text(),
            tick=dec.u64(),
            evidence=dec.seq(Beacon.decode),
            signature=dec.blob(),
        )
