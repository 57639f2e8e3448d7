"""
Vehicle behavior: mobility, 10 Hz beaconing under the active pseudonym,
plausibility checks over received beacons and misbehavior reports.

Detection only ever looks at two signed beacons of the same pseudonym, so
every statement it produces can be re-executed by anyone holding those two
beacons. verify_report is that re-execution.
"""
from blackchain import crypto
from blackchain.entities.beacon import (
    IMPLAUSIBLE,
    Beacon,
    CheckName,
    KinematicState,
    MisbehaviorReport,
    TrustStatement,
)
from blackchain.entities.identity import Pseudonym, PseudonymPool
from blackchain.entities.node import NodeId, Position
from blackchain.entities.utils import (
    VALID,
    EvidenceClosureError,
    Verdict,
    reject,
)
from blackchain.sim.engine import TICKS_PER_SECOND

import functools
import logging
import math
import typing

TWO_PI = 2 * math.pi


class DetectionParams(typing.NamedTuple):
    v_max: float = 70.0
    tol: float = 0.1
    jump_slack: float = 5.0

    @property
    def speed_threshold(self) -> float:
        return self.v_max * (1 + self.tol)

    def jump_threshold(self, dt_ticks: int) -> float:
        return self.v_max * dt_ticks / TICKS_PER_SECOND + self.jump_slack


class MobilityModel(typing.NamedTuple):
    """Bounded random walk on speed and heading inside a rectangular world
    whose borders reflect."""

    width: float = 2000.0
    height: float = 2000.0
    v_max: float = 70.0
    accel_sigma: float = 1.0
    turn_sigma: float = 0.05


TrustAnchors = typing.Mapping[int, bytes]

# ------------------------------ Mobility ------------------------------ #


def _normalize_heading(heading: float) -> float:
    heading = heading % TWO_PI
    # Tiny negative inputs round up to exactly 2*pi.
    return 0.0 if heading >= TWO_PI else heading


def _reflect(value: float, bound: float) -> typing.Tuple[float, bool]:
    reflected = False
    if value < 0.0:
        value, reflected = -value, True
    elif value > bound:
        value, reflected = 2 * bound - value, True
    return min(max(value, 0.0), bound), reflected


def step_mobility(
    state: KinematicState, dt: int, rng, model: MobilityModel
) -> KinematicState:
    """Advances state by dt ticks. Reflection at the borders never moves a
    vehicle farther than speed * dt from where it was."""
    if dt < 1:
        raise ValueError("Mobility steps are at least one tick.")
    seconds = dt / TICKS_PER_SECOND
    speed = state.speed + float(rng.normal(0.0, model.accel_sigma)) * seconds
    speed = min(max(speed, 0.0), model.v_max)
    heading = state.heading + float(rng.normal(0.0, model.turn_sigma)) * seconds

    x = state.position.x + speed * math.cos(heading) * seconds
    y = state.position.y + speed * math.sin(heading) * seconds
    x, flip_x = _reflect(x, model.width)
    y, flip_y = _reflect(y, model.height)
    if flip_x:
        heading = math.pi - heading
    if flip_y:
        heading = -heading
    return KinematicState(Position(x, y), speed, _normalize_heading(heading))


def initial_state(rng, model: MobilityModel) -> KinematicState:
    return KinematicState(
        Position(
            float(rng.uniform(0.0, model.width)),
            float(rng.uniform(0.0, model.height)),
        ),
        float(rng.uniform(0.3 * model.v_max, 0.6 * model.v_max)),
        _normalize_heading(float(rng.uniform(0.0, TWO_PI))),
    )


# ------------------------------ Detection ------------------------------ #


def evaluate_check(
    check: CheckName,
    beacons: typing.Sequence[Beacon],
    params: DetectionParams,
) -> typing.Optional[typing.Tuple[float, float]]:
    """(computed_value, threshold) of a check over a pair of beacons of one
    pseudonym, or None when the pair is not a valid input for it."""
    if len(beacons) != 2:
        return None
    prev, incoming = beacons
    if prev.p_id != incoming.p_id or prev.hash == incoming.hash:
        return None
    dt_ticks = incoming.tick - prev.tick

    if check == CheckName.BEACON_RATE:
        if dt_ticks != 0:
            return None
        return float(len(beacons)), 1.0
    if dt_ticks <= 0:
        return None
    distance = prev.state.position.distance_to(incoming.state.position)
    if check == CheckName.SPEED_BOUND:
        return distance / (dt_ticks / TICKS_PER_SECOND), params.speed_threshold
    if check == CheckName.TELEPORT:
        return distance, params.jump_threshold(dt_ticks)
    return None


CHECK_ORDER = (CheckName.BEACON_RATE, CheckName.SPEED_BOUND, CheckName.TELEPORT)


@functools.lru_cache(maxsize=1 << 16)
def _check_pair(
    prev: Beacon, incoming: Beacon, params: DetectionParams
) -> typing.Optional[TrustStatement]:
    for check in CHECK_ORDER:
        result = evaluate_check(check, (prev, incoming), params)
        if result is None:
            continue
        value, threshold = result
        if value > threshold:
            return TrustStatement(
                incoming.p_id,
                check,
                [prev.hash, incoming.hash],
                value,
                threshold,
            )
    return None


def detect_misbehavior(
    log: typing.Mapping[str, Beacon],
    incoming: Beacon,
    params: DetectionParams = DetectionParams(),
) -> typing.Optional[TrustStatement]:
    """Checks incoming against the last beacon received from its pseudonym.
    The first beacon of a pseudonym never fires."""
    prev = log.get(incoming.p_id)
    if prev is None:
        return None
    return _check_pair(prev, incoming, params)


# ------------------------------- Reports ------------------------------- #


def build_report(
    statements: typing.Sequence[TrustStatement],
    reporter: Pseudonym,
    keypair: crypto.KeyPair,
    cluster_id: str,
    tick: int,
    evidence: typing.Iterable[Beacon],
) -> MisbehaviorReport:
    if not statements:
        raise ValueError("A report needs at least one trust statement.")
    by_hash = {}
    for beacon in evidence:
        by_hash.setdefault(beacon.hash, beacon)
    referenced = []
    for statement in statements:
        for h in statement.inputs:
            if h not in by_hash:
                raise EvidenceClosureError(
                    f"Statement on {statement.suspect_p_id} references "
                    f"beacon {h.hex()[:16]} missing from the evidence."
                )
            if h not in referenced:
                referenced.append(h)
    suspects = sorted({s.suspect_p_id for s in statements})
    report = MisbehaviorReport(
        suspects,
        list(statements),
        reporter,
        cluster_id,
        tick,
        [by_hash[h] for h in referenced],
    )
    return report.signed(keypair)


def _certificate_valid(
    certificate: Pseudonym, tick: int, anchors: TrustAnchors
) -> bool:
    anchor = anchors.get(certificate.region)
    return (
        anchor is not None
        and certificate.valid_at(tick)
        and certificate.verify_issuer(anchor)
    )


def verify_report(
    report: MisbehaviorReport,
    anchors: TrustAnchors,
    params: DetectionParams = DetectionParams(),
) -> Verdict:
    """Re-executes every statement of report from its evidence. Pure: any
    cluster head, RSU, MA or offline auditor gets the same verdict."""
    if not report.detected:
        return reject("empty")
    if not _certificate_valid(report.reporter, report.tick, anchors):
        return reject("reporter-certificate")
    if not crypto.verify(
        report.reporter.public_key, report.signing_bytes(), report.signature
    ):
        return reject("reporter-signature")

    evidence = {}
    for beacon in report.evidence:
        if not beacon.verify_signature():
            return reject("beacon-signature")
        if not _certificate_valid(beacon.certificate, beacon.tick, anchors):
            return reject("beacon-certificate")
        evidence[beacon.hash] = beacon

    if report.suspects != sorted({s.suspect_p_id for s in report.detected}):
        return reject("suspects")

    for statement in report.detected:
        if any(h not in evidence for h in statement.inputs):
            return reject("closure")
        beacons = [evidence[h] for h in statement.inputs]
        if any(b.p_id != statement.suspect_p_id for b in beacons):
            return reject("suspect-mismatch")
        result = evaluate_check(statement.check_name, beacons, params)
        if result is None:
            return reject("re-execution")
        value, threshold = result
        if (
            statement.verdict != IMPLAUSIBLE
            or value != statement.computed_value
            or threshold != statement.threshold
            or not value > threshold
        ):
            return reject("re-execution")
    return VALID


# ------------------------------- Vehicle ------------------------------- #


def select_pseudonym(
    pool: PseudonymPool, t: int, revoked: typing.Container[str] = ()
) -> typing.Optional[Pseudonym]:
    """The active, unrevoked pseudonym with the latest valid_from."""
    candidates = [p for p in pool.active(t) if p.p_id not in revoked]
    if not candidates:
        return None
    return max(candidates, key=lambda p: p.valid_from)


class Vehicle(object):
    """Protocol state of one vehicle. The engine drives it tick by tick."""

    def __init__(
        self,
        node: NodeId,
        lt_id: str,
        region: int,
        pool: PseudonymPool,
        state: KinematicState,
        params: DetectionParams = DetectionParams(),
        report_cooldown: int = 100,
    ):
        self.node = node
        self.lt_id = lt_id
        self.region = region
        self.pool = pool
        self.state = state
        self.params = params
        self.report_cooldown = report_cooldown
        self.log: typing.Dict[str, Beacon] = {}
        self.pending: typing.List[typing.Tuple[TrustStatement, typing.List[Beacon]]] = []
        self._reported: typing.Dict[str, int] = {}
        self.beacons_sent = 0
        self.edr_bytes = 0
        self.statements_made = 0

    @property
    def position(self) -> Position:
        return self.state.position

    def move(self, dt: int, rng, model: MobilityModel):
        self.state = step_mobility(self.state, dt, rng, model)

    def current_pseudonym(
        self, t: int, revoked: typing.Container[str] = ()
    ) -> typing.Optional[Pseudonym]:
        return select_pseudonym(self.pool, t, revoked)

    def emit_beacon(
        self,
        t: int,
        revoked: typing.Container[str] = (),
        state: typing.Optional[KinematicState] = None,
        pseudonym: typing.Optional[Pseudonym] = None,
    ) -> typing.Optional[Beacon]:
        """Signs one beacon with the selected pseudonym. Silent (None) when
        no pseudonym is usable. Adversaries pass their own state or a second
        pseudonym."""
        pseudonym = pseudonym or self.current_pseudonym(t, revoked)
        if pseudonym is None or pseudonym.p_id in revoked:
            return None
        beacon = Beacon.create(
            pseudonym,
            self.pool.keypair(pseudonym.p_id),
            t,
            state or self.state,
        )
        self.beacons_sent += 1
        self.edr_bytes += len(beacon.canonical_bytes())
        return beacon

    def receive(
        self, beacon: Beacon, anchors: TrustAnchors
    ) -> typing.Optional[TrustStatement]:
        """Records a received beacon and runs detection on it. Beacons with
        a bad signature or certificate are dropped."""
        if beacon.p_id in self.pool:
            return None
        if not beacon.verify_signature() or not _certificate_valid(
            beacon.certificate, beacon.tick, anchors
        ):
            logging.debug(f"{self.node} dropped an unverifiable beacon.")
            return None
        self.edr_bytes += len(beacon.canonical_bytes())
        prev = self.log.get(beacon.p_id)
        if prev is not None and prev.hash == beacon.hash:
            return None
        statement = detect_misbehavior(self.log, beacon, self.params)
        if prev is None or beacon.tick >= prev.tick:
            self.log[beacon.p_id] = beacon
        if statement is not None:
            self.statements_made += 1
            last = self._reported.get(statement.suspect_p_id)
            if last is None or beacon.tick - last >= self.report_cooldown:
                self._reported[statement.suspect_p_id] = beacon.tick
                self.pending.append((statement, [prev, beacon]))
        return statement

    def take_report(
        self,
        cluster_id: str,
        t: int,
        revoked: typing.Container[str] = (),
    ) -> typing.Optional[MisbehaviorReport]:
        """Bundles pending statements into one report signed under the
        current pseudonym."""
        if not self.pending:
            return None
        reporter = self.current_pseudonym(t, revoked)
        if reporter is None:
            return None
        statements = [s for s, _ in self.pending]
        evidence = [b for _, beacons in self.pending for b in beacons]
        self.pending = []
        return build_report(
            statements,
            reporter,
            self.pool.keypair(reporter.p_id),
            cluster_id,
            t,
            evidence,
        )

    def __repr__(self):
        return f"Vehicle({self.node}, {self.lt_id})"
