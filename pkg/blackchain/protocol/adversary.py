"""
Attacker behaviors and the ground truth used to judge the outcome.

Attacks are semantic: every message an attacker sends is well-formed and
correctly signed with a pseudonym it legitimately holds.
"""
from blackchain.entities.beacon import (
    Beacon,
    CheckName,
    KinematicState,
    MisbehaviorReport,
    TrustStatement,
)
from blackchain.entities.cluster import Cluster, ClusterBlock, Endorsement
from blackchain.entities.node import NodeId, Position, rsu
from blackchain.entities.utils import ConfigError
from blackchain.protocol.cluster import ClusterView, tally_votes
from blackchain.protocol.rsu import RsuBehavior
from blackchain.protocol.vehicle import DetectionParams, Vehicle, build_report

import dataclasses
import enum
import typing


class Strategy(str, enum.Enum):
    FALSE_POSITION = "false_position"
    BAD_MOUTH = "bad_mouth"
    SYBIL_VOTE = "sybil_vote"
    BYZ_RSU_SILENT = "byz_rsu_silent"
    BYZ_RSU_EQUIVOCATE = "byz_rsu_equivocate"


@dataclasses.dataclass
class AttackProfile:
    """One attacker. actor is a vehicle index, or an RSU index for the
    Byzantine RSU strategies; targets are victim vehicle indices."""

    strategy: Strategy
    actor: int
    targets: typing.List[int] = dataclasses.field(default_factory=list)
    params: typing.Dict[str, float] = dataclasses.field(default_factory=dict)
    start_tick: int = 0
    end_tick: typing.Optional[int] = None

    def __post_init__(self):
        try:
            self.strategy = Strategy(self.strategy)
        except ValueError:
            raise ConfigError("attacks", f"unknown strategy {self.strategy}")
        if self.actor < 0:
            raise ConfigError("attacks", "actor must not be negative")
        if self.end_tick is not None and self.end_tick < self.start_tick:
            raise ConfigError("attacks", "end_tick precedes start_tick")

    def active(self, t: int) -> bool:
        return t >= self.start_tick and (self.end_tick is None or t <= self.end_tick)

    def param(self, name: str, default: float) -> float:
        return float(self.params.get(name, default))

    @property
    def targets_rsus(self) -> bool:
        return self.strategy in (
            Strategy.BYZ_RSU_SILENT,
            Strategy.BYZ_RSU_EQUIVOCATE,
        )

    @classmethod
    def from_dictionary(cls, d: typing.Mapping) -> "AttackProfile":
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - fields
        if unknown:
            raise ConfigError("attacks", f"unknown key {sorted(unknown)[0]}")
        if "actor" not in d:
            raise ConfigError("attacks", "every attack names an actor")
        return cls(**d)


def profiles_from_config(config) -> typing.List[AttackProfile]:
    """Declared attacks plus `attackers` generated false_position attackers
    on the first vehicle indices."""
    profiles = [AttackProfile.from_dictionary(a) for a in config.attacks]
    for index in range(config.attackers):
        profiles.append(
            AttackProfile(
                Strategy.FALSE_POSITION,
                index,
                params={"offset_m": config.attack_offset_m},
                start_tick=config.attack_start,
            )
        )
    for profile in profiles:
        limit = config.rsus if profile.targets_rsus else config.vehicles
        if profile.actor >= limit or any(t >= config.vehicles for t in profile.targets):
            raise ConfigError("attacks", f"index out of range in {profile}")
    return profiles


# ------------------------------ Vehicles ------------------------------ #


def displaced(state: KinematicState, offset_m: float) -> KinematicState:
    """state moved offset_m east."""
    return KinematicState(
        Position(state.position.x + offset_m, state.position.y),
        state.speed,
        state.heading,
    )


def false_position_beacon(
    attacker: Vehicle,
    t: int,
    offset_m: float,
    revoked: typing.Container[str] = (),
) -> typing.Optional[Beacon]:
    """Correctly signed beacon claiming a position offset_m away from the
    attacker's true one. None once the attacker has no usable pseudonym."""
    if offset_m <= 0:
        raise ValueError("The position offset must be positive.")
    return attacker.emit_beacon(t, revoked, state=displaced(attacker.state, offset_m))


def attack_beacon(
    attacker: Vehicle,
    profile: AttackProfile,
    t: int,
    revoked: typing.Container[str] = (),
) -> typing.Tuple[typing.Optional[Beacon], bool]:
    """Beacon of a false_position attacker: displaced and true positions
    alternate with the configured period. Returns (beacon, lied)."""
    period = max(int(profile.param("period", 2)), 2)
    if (t - profile.start_tick) % period == 0:
        offset = profile.param("offset_m", 500.0)
        return false_position_beacon(attacker, t, offset, revoked), True
    return attacker.emit_beacon(t, revoked), False


def bad_mouth_report(
    attacker: Vehicle,
    victim_beacons: typing.Sequence[Beacon],
    cluster_id: str,
    t: int,
    params: DetectionParams = DetectionParams(),
    revoked: typing.Container[str] = (),
) -> typing.Optional[MisbehaviorReport]:
    """A signed report over two genuine beacons of the victim that claims
    an implausible speed the beacons do not show."""
    if len(victim_beacons) < 2:
        return None
    prev, last = victim_beacons[-2], victim_beacons[-1]
    reporter = attacker.current_pseudonym(t, revoked)
    if reporter is None:
        return None
    statement = TrustStatement(
        last.p_id,
        CheckName.SPEED_BOUND,
        [prev.hash, last.hash],
        params.speed_threshold * 10,
        params.speed_threshold,
    )
    return build_report(
        [statement],
        reporter,
        attacker.pool.keypair(reporter.p_id),
        cluster_id,
        t,
        [prev, last],
    )


def sybil_vote(
    attacker: Vehicle,
    candidate: ClusterBlock,
    t: int,
    revoked: typing.Container[str] = (),
) -> typing.List[Endorsement]:
    """Endorses candidate under every pseudonym the attacker holds at t that
    is a member, whatever the candidate contains."""
    votes = []
    for pseudonym in attacker.pool.active(t):
        if pseudonym.p_id in revoked or pseudonym.p_id not in candidate.members:
            continue
        votes.append(
            Endorsement.create(
                pseudonym,
                attacker.pool.keypair(pseudonym.p_id),
                candidate.block_hash,
            )
        )
    return votes


def forge_block(
    cluster: Cluster,
    view: ClusterView,
    reports: typing.Iterable[MisbehaviorReport],
    t: int,
) -> ClusterBlock:
    """Candidate a colluding head builds without verifying reports."""
    reports = list({r.hash: r for r in reports}.values())
    return ClusterBlock(
        cluster.cluster_id,
        view.next_height,
        view.tip,
        cluster.members,
        reports,
        tally_votes(reports, cluster.members),
        t,
        cluster.head,
    )


# -------------------------------- RSUs -------------------------------- #


def rsu_behaviors(
    profiles: typing.Iterable[AttackProfile], t: typing.Optional[int] = None
) -> typing.Dict[NodeId, RsuBehavior]:
    behaviors = {}
    for profile in profiles:
        if not profile.targets_rsus or (t is not None and not profile.active(t)):
            continue
        behaviors[rsu(profile.actor)] = (
            RsuBehavior.SILENT
            if profile.strategy == Strategy.BYZ_RSU_SILENT
            else RsuBehavior.EQUIVOCATE
        )
    return behaviors


# ----------------------------- Ground truth ----------------------------- #


class GroundTruth(object):
    """Simulator-side knowledge no protocol participant has: who owns which
    pseudonym and who actually lied."""

    def __init__(self):
        self.owners: typing.Dict[str, str] = {}
        # lt_id -> tick of its first false beacon
        self.liars: typing.Dict[str, int] = {}

    def register(self, vehicle: Vehicle):
        for pseudonym in vehicle.pool.pseudonyms:
            self.owners[pseudonym.p_id] = vehicle.lt_id

    def record_false_beacon(self, lt_id: str, t: int):
        self.liars.setdefault(lt_id, t)

    def false_revocations(self, blacklisted: typing.Iterable[str]) -> int:
        return sum(1 for lt_id in set(blacklisted) if lt_id not in self.liars)

    def max_endorsements_per_owner(self, block: ClusterBlock) -> int:
        counts: typing.Dict[str, int] = {}
        for voter in {v.voter for v in block.votes}:
            owner = self.owners.get(voter, voter)
            counts[owner] = counts.get(owner, 0) + 1
        return max(counts.values(), default=0)

    def owner(self, p_id: str) -> typing.Optional[str]:
        return self.owners.get(p_id)
