"""Small hand-built worlds shared by the protocol tests."""

from blackchain import crypto
from blackchain.config import GenesisConfig
from blackchain.entities.beacon import KinematicState
from blackchain.entities.cluster import Cluster, Endorsement
from blackchain.entities.ledger import ParticipantIdentity
from blackchain.entities.node import Position, ma, rsu, vehicle
from blackchain.protocol.adversary import false_position_beacon
from blackchain.protocol.cluster import ClusterView, propose_block, vote_block
from blackchain.protocol.ledger import (
    Ledger,
    approve,
    build_revocation_tx,
    introduce_participant,
    mine_block,
)
from blackchain.protocol.rsu import (
    RoadSideUnit,
    bft_round,
    group_rsus,
    validate_cluster_block,
)
from blackchain.protocol.scms import Scms
from blackchain.protocol.vehicle import DetectionParams, Vehicle
from blackchain.sim.rng import RngRegistry

WINDOW = 600
OVERLAP = 100
HORIZON = 1200


def state_at(x: float, y: float, speed: float = 20.0, heading: float = 0.0):
    return KinematicState(Position(x, y), speed, heading)


class World(object):
    """SCMS regions, vehicles parked close together, four RSUs in one
    group and two MAs."""

    def __init__(self, vehicles: int = 4, regions: int = 1, seed: int = 0, difficulty: int = 4):
        self.rngs = RngRegistry(seed)
        self.params = DetectionParams()
        self.scms = {
            r: Scms(r, self.rngs.stream(f"keys/region{r}")) for r in range(regions)
        }
        self.anchors = {r: s.pca_public_key for r, s in self.scms.items()}
        self.vehicles = [
            self.make_vehicle(i, i % regions, 100.0 + 10.0 * i, 100.0)
            for i in range(vehicles)
        ]

        rsu_keys = self.rngs.stream("keys/rsu")
        positions = {rsu(i): Position(250.0 + 500.0 * (i % 2), 250.0 + 500.0 * (i // 2)) for i in range(4)}
        self.group = group_rsus(positions, 2000.0)[0]
        self.rsus = {
            node: RoadSideUnit(node, crypto.KeyPair.from_rng(rsu_keys), positions[node], self.group)
            for node in self.group.members
        }

        ma_keys = self.rngs.stream("keys/ma")
        self.ma_keys = [crypto.KeyPair.from_rng(ma_keys) for _ in range(2)]
        self.genesis = GenesisConfig(
            difficulty,
            [
                ParticipantIdentity("ma", str(ma(i)), "", k.public_key)
                for i, k in enumerate(self.ma_keys)
            ],
            self.anchors,
            self.params,
        )

    def make_vehicle(self, index: int, region: int, x: float, y: float) -> Vehicle:
        scms = self.scms[region]
        certificate = scms.enroll(vehicle(index))
        scms.issue_pseudonyms(certificate.lt_id, HORIZON, WINDOW, OVERLAP)
        return Vehicle(
            vehicle(index),
            certificate.lt_id,
            region,
            scms.pool(certificate.lt_id),
            state_at(x, y),
            self.params,
        )

    def p_id(self, v: Vehicle, t: int = 0) -> str:
        return v.current_pseudonym(t).p_id

    def holder(self, p_id: str) -> Vehicle:
        return next(v for v in self.vehicles if p_id in v.pool)

    def cluster(self, vehicles, t: int = 0) -> Cluster:
        members = [self.p_id(v, t) for v in vehicles]
        return Cluster(members, min(members), t)

    # ------------------------------ Reports ------------------------------ #

    def false_report(self, reporter: Vehicle, attacker: Vehicle, cluster_id: str, t: int = 0):
        """Report by reporter on attacker's displaced beacon at t + 1."""
        reporter.receive(attacker.emit_beacon(t), self.anchors)
        statement = reporter.receive(
            false_position_beacon(attacker, t + 1, 500.0), self.anchors
        )
        assert statement is not None
        return reporter.take_report(cluster_id, t + 1)

    def commit(self, cluster: Cluster, reports, t: int, views=None):
        """Proposes and endorses a block with every member voting."""
        views = views or {m: ClusterView(cluster) for m in cluster.members}
        candidate = propose_block(
            cluster, cluster.head, views[cluster.head], reports, t, self.anchors, self.params
        )
        for member in cluster.members:
            holder = self.holder(member)
            vote = vote_block(
                self.certificate(member),
                holder.pool.keypair(member),
                candidate,
                cluster,
                views[member],
                self.anchors,
                self.params,
            )
            if isinstance(vote, Endorsement):
                candidate.add_vote(vote)
        for member in cluster.members:
            views[member].accept(candidate)
        return candidate

    def certificate(self, p_id: str):
        holder = self.holder(p_id)
        return next(p for p in holder.pool.pseudonyms if p.p_id == p_id)

    def attacked_block(self, t: int = 0):
        """Committed block of a cluster of every vehicle but the last, with
        one report on the last vehicle."""
        honest, attacker = self.vehicles[:-1], self.vehicles[-1]
        cluster = self.cluster(honest, t)
        report = self.false_report(honest[0], attacker, cluster.cluster_id, t)
        return self.commit(cluster, [report], t + 2), attacker

    # ------------------------------- RSUs ------------------------------- #

    def validator(self):
        def validate(member, block):
            return bool(
                validate_cluster_block(self.rsus[member], block, self.anchors, self.params)
            )

        return validate

    def keys(self):
        return {m: unit.keypair for m, unit in self.rsus.items()}

    def certified(self, blocks, height: int = 0):
        outcome = bft_round(
            self.group,
            height,
            {self.group.members[0]: blocks},
            self.keys(),
            self.validator(),
        )
        assert outcome.decided
        return outcome.committed

    # ------------------------------ Ledger ------------------------------ #

    def rsu_identity(self, node) -> ParticipantIdentity:
        unit = self.rsus[node]
        return ParticipantIdentity("rsu", str(node), self.group.group_id, unit.public_key)

    def introductions(self, ledger: Ledger):
        txs = []
        for node in self.group.members:
            subject = self.rsu_identity(node)
            txs.append(
                introduce_participant(
                    subject, [approve(k, subject) for k in self.ma_keys], ledger
                )
            )
        return txs

    def chain(self):
        """Two mined blocks: the RSU introductions, then one revocation of
        the attacker. Returns (blocks, revocation tx, attacker)."""
        ledger = Ledger(self.genesis)
        first = mine_block(self.introductions(ledger), ledger, "ma-0")
        assert ledger.append(first)
        block, attacker = self.attacked_block()
        tx = build_revocation_tx(self.certified([block]), ledger)
        second = mine_block([tx], ledger, "ma-1")
        assert ledger.append(second)
        return [first, second], tx, attacker
