"""
Scenario runner.

A Simulation wires every protocol layer to one discrete-event engine and
drives it one tick at a time. run() writes the artifacts of one scenario,
sweep() runs a parameter grid in parallel and tabulates the metrics.
"""
from blackchain import crypto
from blackchain.config import GenesisConfig, ScenarioConfig, get_db_uri
from blackchain.db import Store
from blackchain.entities.beacon import Beacon, MisbehaviorReport
from blackchain.entities.cluster import Cluster, ClusterBlock, Endorsement
from blackchain.entities.identity import Pseudonym
from blackchain.entities.ledger import GlobalBlock, ParticipantIdentity
from blackchain.entities.metrics import COLUMNS, RunMetrics
from blackchain.entities.node import NodeId, Position, ma, rsu, vehicle
from blackchain.entities.rsu import AggregatedStatement
from blackchain.entities.utils import IssuanceRefusedError
from blackchain.protocol.adversary import (
    AttackProfile,
    GroundTruth,
    Strategy,
    attack_beacon,
    bad_mouth_report,
    forge_block,
    profiles_from_config,
    rsu_behaviors,
    sybil_vote,
)
from blackchain.protocol.cluster import (
    BlockForwarder,
    ClusterView,
    form_clusters,
    propose_block,
    vote_block,
)
from blackchain.protocol.ledger import (
    ManagementAuthority,
    apply_revocations,
    approve,
    choose_chain,
    encode_chain,
    introduce_participant,
)
from blackchain.protocol.rsu import (
    BftOutcome,
    RoadSideUnit,
    bft_round,
    group_rsus,
    report_to_ma,
    validate_cluster_block,
)
from blackchain.protocol.scms import AUDIT_COLUMNS, AuditEntry, Scms
from blackchain.protocol.vehicle import Vehicle, initial_state, verify_report
from blackchain.sim.engine import Event, Simulator
from blackchain.sim.network import Network, RadioModel

import itertools
import logging
import math
import os
import typing

import pandas as pd
from joblib import Parallel, delayed


def grid_positions(count: int, width: float, height: float) -> typing.List[Position]:
    """count positions at the centers of an even grid over the world."""
    columns = int(math.ceil(math.sqrt(count)))
    rows = int(math.ceil(count / columns))
    return [
        Position(
            (i % columns + 0.5) * width / columns,
            (i // columns + 0.5) * height / rows,
        )
        for i in range(count)
    ]


class Simulation(object):
    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.sim = Simulator(config.seed)
        self.radio = RadioModel(config.range_m, config.range_override)
        self.network = Network(self.sim, self.radio, config.link_delay)
        self.params = config.detection
        self.model = config.mobility
        self.profiles = profiles_from_config(config)
        self.truth = GroundTruth()
        self.metrics = RunMetrics(seed=config.seed)

        # p_id -> certificate / holding vehicle
        self.certificates: typing.Dict[str, Pseudonym] = {}
        self.holders: typing.Dict[str, Vehicle] = {}

        self.clusters: typing.Dict[str, Cluster] = {}
        self.membership: typing.Dict[str, str] = {}
        self.views: typing.Dict[typing.Tuple[str, str], ClusterView] = {}
        self.inbox: typing.Dict[str, typing.List[MisbehaviorReport]] = {}
        # cluster_id -> (head p_id, forwarder)
        self.forwarders: typing.Dict[str, typing.Tuple[str, BlockForwarder]] = {}
        self.victim_beacons: typing.Dict[int, typing.List[Beacon]] = {}

        self.bft_heights: typing.Dict[str, int] = {}
        self.mined_at: typing.Dict[bytes, int] = {}
        self.chain: typing.List[GlobalBlock] = []

        self._setup_scms()
        self._setup_vehicles()
        self._setup_rsus()
        self._setup_mas()

    # ------------------------------ Setup ------------------------------ #

    def _setup_scms(self):
        self.scms = {
            r: Scms(r, self.sim.rng(f"keys/region{r}"))
            for r in range(self.config.regions)
        }
        self.anchors = {r: s.pca_public_key for r, s in self.scms.items()}

    def _issue(self, v: Vehicle, now: int):
        c = self.config
        issued = self.scms[v.region].issue_pseudonyms(
            v.lt_id,
            c.pseudonym_horizon,
            c.pseudonym_window,
            c.pseudonym_overlap,
            now=now,
        )
        for pseudonym in issued:
            self.certificates[pseudonym.p_id] = pseudonym
            self.holders[pseudonym.p_id] = v
        self.truth.register(v)

    def _setup_vehicles(self):
        init = self.sim.rng("mobility/init")
        self.vehicles: typing.List[Vehicle] = []
        for i in range(self.config.vehicles):
            region = i % self.config.regions
            scms = self.scms[region]
            certificate = scms.enroll(vehicle(i))
            v = Vehicle(
                vehicle(i),
                certificate.lt_id,
                region,
                scms.pool(certificate.lt_id),
                initial_state(init, self.model),
                self.params,
                self.config.report_cooldown,
            )
            self.vehicles.append(v)
            self._issue(v, 0)

        self.attacks: typing.Dict[int, typing.List[AttackProfile]] = {}
        for profile in self.profiles:
            if not profile.targets_rsus:
                self.attacks.setdefault(profile.actor, []).append(profile)

    def _setup_rsus(self):
        c = self.config
        if c.rsu_positions is not None:
            positions = [Position(float(x), float(y)) for x, y in c.rsu_positions]
        else:
            positions = grid_positions(c.rsus, c.world_width, c.world_height)
        self.rsu_positions = {rsu(i): p for i, p in enumerate(positions)}
        self.groups = group_rsus(self.rsu_positions, c.rsu_cell_size)
        keys = self.sim.rng("keys/rsu")
        keypairs = {
            node: crypto.KeyPair.from_rng(keys) for node in sorted(self.rsu_positions)
        }
        self.rsus: typing.Dict[NodeId, RoadSideUnit] = {}
        for group in self.groups:
            self.bft_heights[group.group_id] = 0
            if group.degenerate:
                self.metrics.degenerate_groups += 1
                logging.warning(
                    f"RSU group {group.group_id} has {len(group.members)} "
                    f"members and tolerates no fault."
                )
            for node in group.members:
                self.rsus[node] = RoadSideUnit(
                    node, keypairs[node], self.rsu_positions[node], group
                )

    def _setup_mas(self):
        c = self.config
        keys = self.sim.rng("keys/ma")
        identities = []
        keypairs = []
        for index in range(c.regions * c.mas_per_region):
            keypair = crypto.KeyPair.from_rng(keys)
            keypairs.append(keypair)
            identities.append(
                ParticipantIdentity("ma", str(ma(index)), "", keypair.public_key)
            )
        self.genesis = GenesisConfig(c.difficulty, identities, self.anchors, self.params)
        self.mas: typing.Dict[NodeId, ManagementAuthority] = {}
        for index, keypair in enumerate(keypairs):
            node = ma(index)
            self.mas[node] = ManagementAuthority(
                node, keypair, index // c.mas_per_region, self.genesis
            )
        # MAs resolving linkage for their region's SCMS
        self.region_heads = {
            r: ma(r * c.mas_per_region) for r in range(c.regions)
        }

        authorities = [self.mas[n] for n in sorted(self.mas)]
        for node in sorted(self.rsus):
            unit = self.rsus[node]
            subject = ParticipantIdentity(
                "rsu", str(node), unit.group.group_id, unit.public_key
            )
            tx = introduce_participant(
                subject,
                [approve(a.keypair, subject) for a in authorities],
                authorities[0].ledger,
            )
            for authority in authorities:
                authority.submit(tx)

    # ------------------------------ Views ------------------------------ #

    def revoked_pseudonyms(self) -> typing.FrozenSet[str]:
        revoked = set()
        for scms in self.scms.values():
            revoked |= scms.revocations.revoked_pseudonyms
        return frozenset(revoked)

    def is_revoked(self, p_id: str, tick: int) -> bool:
        return any(
            s.revocations.pseudonym_revoked(p_id, tick) for s in self.scms.values()
        )

    def blacklisted(self) -> typing.Set[str]:
        """Long-term ids revoked in every region."""
        sets = [s.revocations.revoked_lt for s in self.scms.values()]
        return set.intersection(*(set(s) for s in sets)) if sets else set()

    def revoked_anywhere(self) -> typing.Set[str]:
        """Long-term ids revoked in at least one region."""
        return set().union(*(s.revocations.revoked_lt for s in self.scms.values()))

    def _active(self, index: int, t: int, strategy: Strategy) -> typing.Optional[AttackProfile]:
        for profile in self.attacks.get(index, ()):
            if profile.strategy == strategy and profile.active(t):
                return profile
        return None

    # ------------------------------- Tick ------------------------------- #

    def _tick(self, t: int):
        c = self.config
        if t > 0:
            mobility = self.sim.rng("mobility")
            for v in self.vehicles:
                v.move(1, mobility, self.model)
        self._refill(t)
        revoked = self.revoked_pseudonyms()

        announced = self._beacons(t, revoked)
        if t % c.recluster_interval == 0 or set(announced) != set(self.membership):
            self._recluster(announced, t)
        self._reports(t, revoked)
        if t > 0 and t % c.cluster_epoch == 0:
            for cluster_id in sorted(self.clusters):
                self._cluster_round(self.clusters[cluster_id], t, revoked)
        self._forward()
        if t > 0 and t % c.bft_interval == 0:
            for group in self.groups:
                self._bft(group, t)
        if t % c.mine_interval == 0:
            self._mine(t)

        if t + 1 < c.ticks:
            self.sim.schedule(Event("tick", lambda: self._tick(t + 1), logged=False), t + 1)

    def _refill(self, t: int):
        window = self.config.pseudonym_window
        for v in self.vehicles:
            if v.pool.covered_until - t >= window:
                continue
            try:
                self._issue(v, t)
            except IssuanceRefusedError:
                pass
        for v in self.vehicles:
            self.metrics.max_active_pseudonyms = max(
                self.metrics.max_active_pseudonyms, len(v.pool.active(t))
            )

    def _beacons(self, t: int, revoked: typing.FrozenSet[str]) -> typing.Dict[str, Position]:
        """Every vehicle beacons once; attackers beacon their own way.
        Returns the positions announced per pseudonym."""
        positions = {v.node: v.position for v in self.vehicles}
        announced = {}
        for v in self.vehicles:
            index = v.node.index
            beacons = []
            false_position = self._active(index, t, Strategy.FALSE_POSITION)
            if false_position is not None:
                beacon, lied = attack_beacon(v, false_position, t, revoked)
                if beacon is not None:
                    beacons.append(beacon)
                    if lied:
                        self.truth.record_false_beacon(v.lt_id, t)
            elif self._active(index, t, Strategy.SYBIL_VOTE) is not None:
                for pseudonym in v.pool.active(t):
                    if pseudonym.p_id not in revoked:
                        beacons.append(v.emit_beacon(t, revoked, pseudonym=pseudonym))
            else:
                beacon = v.emit_beacon(t, revoked)
                if beacon is not None:
                    beacons.append(beacon)
            for beacon in beacons:
                announced[beacon.p_id] = beacon.state.position
                self.network.broadcast(
                    v.node, beacon, positions, self._on_beacon, kind="beacon"
                )
        return announced

    def _on_beacon(self, receiver: NodeId, beacon: Beacon):
        index = receiver.index
        self.vehicles[index].receive(beacon, self.anchors)
        profile = self._active(index, beacon.tick, Strategy.BAD_MOUTH)
        if profile is None:
            return
        victims = {self.vehicles[i].lt_id for i in profile.targets}
        if self.truth.owner(beacon.p_id) not in victims:
            return
        kept = self.victim_beacons.setdefault(index, [])
        if kept and kept[-1].p_id != beacon.p_id:
            kept.clear()
        kept.append(beacon)
        del kept[:-2]

    def _recluster(self, announced: typing.Mapping[str, Position], t: int):
        previous = self.clusters
        by_members = {cl.members: cl for cl in previous.values()}
        clusters = {}
        for formed in form_clusters(announced, self.radio, t):
            cluster = by_members.get(formed.members, formed)
            clusters[cluster.cluster_id] = cluster
        self.clusters = clusters
        self.membership = {
            m: cid for cid, cl in clusters.items() for m in cl.members
        }
        self.views = {
            (m, cid): self.views.get((m, cid)) or ClusterView(cl)
            for cid, cl in clusters.items()
            for m in cl.members
        }
        # Reports waiting at dissolved clusters follow their reporter.
        stale = []
        for cid in sorted(self.inbox):
            if cid not in clusters:
                stale.extend(self.inbox.pop(cid))
        for report in stale:
            cid = self.membership.get(report.reporter_p_id)
            if cid is not None:
                self.inbox.setdefault(cid, []).append(report)
        for cid in sorted(self.forwarders):
            if cid not in clusters and not len(self.forwarders[cid][1]):
                del self.forwarders[cid]
        self.sim.log("recluster", clusters=len(clusters))

    def _route_report(self, sender: Vehicle, report: MisbehaviorReport, cluster_id: str):
        self.metrics.reports_generated += 1
        head = self.holders[self.clusters[cluster_id].head]
        if head is sender:
            self.inbox.setdefault(cluster_id, []).append(report)
            return
        self.network.send(
            sender.node,
            head.node,
            (cluster_id, report),
            self._on_report,
            kind="report",
        )

    def _on_report(self, head: NodeId, payload):
        cluster_id, report = payload
        if cluster_id not in self.clusters:
            cluster_id = self.membership.get(report.reporter_p_id)
        if cluster_id is not None:
            self.inbox.setdefault(cluster_id, []).append(report)

    def _reports(self, t: int, revoked: typing.FrozenSet[str]):
        cooldown = max(self.config.report_cooldown, 1)
        for v in self.vehicles:
            reporter = v.current_pseudonym(t, revoked)
            if reporter is None:
                continue
            cluster_id = self.membership.get(reporter.p_id)
            if cluster_id is None:
                continue
            profile = self._active(v.node.index, t, Strategy.BAD_MOUTH)
            if profile is not None and (t - profile.start_tick) % cooldown == 0:
                report = bad_mouth_report(
                    v,
                    self.victim_beacons.get(v.node.index, []),
                    cluster_id,
                    t,
                    self.params,
                    revoked,
                )
                if report is not None:
                    self._route_report(v, report, cluster_id)
            if v.pending:
                report = v.take_report(cluster_id, t, revoked)
                if report is not None:
                    self._route_report(v, report, cluster_id)

    def _cluster_round(self, cluster: Cluster, t: int, revoked: typing.FrozenSet[str]):
        """Proposal and endorsement within one cluster epoch. A cluster with
        nothing pending still commits an empty heartbeat block."""
        if cluster.head in revoked:
            return
        reports = self.inbox.pop(cluster.cluster_id, [])
        cid = cluster.cluster_id
        head = self.holders[cluster.head]
        view = self.views[(cluster.head, cid)]
        if self._active(head.node.index, t, Strategy.SYBIL_VOTE) is not None:
            candidate = forge_block(cluster, view, reports, t)
        else:
            candidate = propose_block(
                cluster, cluster.head, view, reports, t, self.anchors, self.params
            )
            unique = {r.hash for r in reports}
            self.metrics.reports_rejected_cluster += len(unique) - len(candidate.reports)

        voted = set()
        for member in cluster.members:
            if member in revoked:
                continue
            holder = self.holders[member]
            if self._active(holder.node.index, t, Strategy.SYBIL_VOTE) is not None:
                if holder.node in voted:
                    continue
                voted.add(holder.node)
                endorsements = sybil_vote(holder, candidate, t, revoked)
            else:
                result = vote_block(
                    self.certificates[member],
                    holder.pool.keypair(member),
                    candidate,
                    cluster,
                    self.views[(member, cid)],
                    self.anchors,
                    self.params,
                )
                if not isinstance(result, Endorsement):
                    logging.debug(f"{member} refused {cid}/{candidate.height} ({result.reason}).")
                    continue
                endorsements = [result]
            for endorsement in endorsements:
                candidate.add_vote(endorsement)

        if not candidate.committed:
            self.metrics.cluster_blocks_rejected += 1
            self.sim.log("cluster-reject", head.node, cluster=cid, height=candidate.height)
            return
        self.metrics.cluster_blocks_committed += 1
        self.metrics.max_sybil_endorsements = max(
            self.metrics.max_sybil_endorsements,
            self.truth.max_endorsements_per_owner(candidate),
        )
        for member in cluster.members:
            self.views[(member, cid)].accept(candidate)
        if cid not in self.forwarders:
            self.forwarders[cid] = (cluster.head, BlockForwarder())
        self.forwarders[cid][1].enqueue(candidate)
        self.sim.log(
            "cluster-commit",
            head.node,
            cluster=cid,
            height=candidate.height,
            reports=len(candidate.reports),
        )

    def _forward(self):
        for cid in sorted(self.forwarders):
            head, forwarder = self.forwarders[cid]
            holder = self.holders[head]
            target, blocks = forwarder.forward_to_rsu(
                holder.position, self.rsu_positions, self.radio
            )
            for block in blocks:
                self.network.send(
                    holder.node, target, block, self._on_cluster_block, kind="cluster-block"
                )

    def _on_cluster_block(self, node: NodeId, block: ClusterBlock):
        verdict = self.rsus[node].receive_block(
            block, self.anchors, self.params, self.is_revoked
        )
        if not verdict and verdict.reason.startswith("report"):
            self.metrics.reports_rejected_rsu += 1

    def _bft(self, group, t: int):
        proposals = {
            m: list(self.rsus[m].pending.values()) for m in group.members
        }
        if not any(proposals.values()):
            return
        gid = group.group_id
        height = self.bft_heights[gid]
        self.bft_heights[gid] = height + 1

        def validate(member: NodeId, block: ClusterBlock) -> bool:
            return bool(
                validate_cluster_block(
                    self.rsus[member], block, self.anchors, self.params, self.is_revoked
                )
            )

        outcome = bft_round(
            group,
            height,
            proposals,
            {m: self.rsus[m].keypair for m in group.members},
            validate,
            rsu_behaviors(self.profiles, t),
        )
        self.sim.schedule_in(
            Event(
                "bft-outcome",
                lambda: self._apply_bft(group, outcome),
                node=outcome.leader,
                details={"group": gid, "height": height},
            ),
            3 * self.config.link_delay,
        )

    def _apply_bft(self, group, outcome: BftOutcome):
        if len(outcome.certified) > 1:
            self.metrics.conflicting_certificates += 1
        if not outcome.decided:
            self.metrics.bft_failed += 1
            return
        self.metrics.bft_committed += 1
        self.metrics.reports_aggregated += len(outcome.committed.evidence_bundle)
        for member in group.members:
            self.rsus[member].settle(outcome.blocks)
        if outcome.committed.revocation_candidates:
            report_to_ma(
                outcome.committed,
                outcome.leader,
                self.mas,
                self.network,
                self._on_statement,
            )

    def _on_statement(self, node: NodeId, stmt: AggregatedStatement):
        self.mas[node].receive_statement(stmt)

    def _mine(self, t: int):
        order = sorted(self.mas)
        miner = self.mas[order[(t // self.config.mine_interval) % len(order)]]
        block = miner.mine(self.config.heartbeat_mining)
        if block is None:
            return
        self.mined_at.setdefault(block.pow_hash, t)
        self.sim.log("mine", miner.node, height=block.height, txs=len(block.txs))
        self._revoke(miner, [block])
        chain = list(miner.ledger.blocks)
        for node in order:
            if node != miner.node:
                self.network.send(miner.node, node, chain, self._on_chain, kind="chain")

    def _on_chain(self, node: NodeId, chain: typing.List[GlobalBlock]):
        authority = self.mas[node]
        self._revoke(authority, authority.receive_chain(chain))

    def _revoke(self, authority: ManagementAuthority, blocks: typing.List[GlobalBlock]):
        if self.region_heads.get(authority.region) != authority.node:
            return
        for block in blocks:
            for lt_id in apply_revocations(
                block,
                self.scms,
                authority.ledger,
                self.sim.now,
                region=authority.region,
            ):
                self.sim.log("revoke", authority.node, lt_id=lt_id, height=block.height)

    # ------------------------------ Run ------------------------------ #

    def run(self) -> RunMetrics:
        logging.info(
            f"Running seed {self.config.seed}: {self.config.vehicles} vehicles, "
            f"{len(self.rsus)} RSUs, {self.config.ticks} ticks."
        )
        self.sim.schedule(Event("tick", lambda: self._tick(0), logged=False), 0)
        self.sim.run(self.config.ticks - 1)
        self.chain = choose_chain(
            [self.mas[n].ledger.blocks for n in sorted(self.mas)], self.genesis
        )
        self._collect()
        logging.info(f"Finished seed {self.config.seed}: {self.metrics}")
        return self.metrics

    def _collect(self):
        m = self.metrics
        m.beacons_sent = sum(v.beacons_sent for v in self.vehicles)
        m.trust_statements = sum(v.statements_made for v in self.vehicles)
        m.naive_edr_bytes = sum(v.edr_bytes for v in self.vehicles)
        m.ledger_bytes = len(self.chain_bytes())
        m.global_blocks = len(self.chain)

        committed = {}
        revoked_at: typing.Dict[str, int] = {}
        for block in self.chain:
            tick = self.mined_at.get(block.pow_hash, 0)
            for tx in block.revocations():
                for report in tx.report_bundle:
                    committed.setdefault(report.hash, report)
                for p_id in tx.decided_suspects:
                    owner = self.truth.owner(p_id)
                    if owner is not None:
                        revoked_at.setdefault(owner, tick)
        m.reports_committed = len(committed)
        m.reports_rejected_audit = sum(
            1
            for report in committed.values()
            if not verify_report(report, self.anchors, self.params)
        )

        blacklisted = self.blacklisted()
        m.attackers = len(self.truth.liars)
        m.attackers_revoked = sum(1 for lt in self.truth.liars if lt in blacklisted)
        m.false_revocations = self.truth.false_revocations(self.revoked_anywhere())
        m.revocation_latency = {
            lt: revoked_at[lt] - first
            for lt, first in sorted(self.truth.liars.items())
            if lt in revoked_at and lt in blacklisted
        }

    # ---------------------------- Artifacts ---------------------------- #

    def chain_bytes(self) -> bytes:
        return encode_chain(self.chain)

    def audit_entries(self) -> typing.List[AuditEntry]:
        entries = [e for r in sorted(self.scms) for e in self.scms[r].audit_log]
        return sorted(entries, key=lambda e: (e.tick, e.region, e.event, e.p_id))

    def write_artifacts(self, out_dir: str):
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "chain.bin"), "wb") as f:
            f.write(self.chain_bytes())
        self.genesis.save(os.path.join(out_dir, "genesis.yaml"))
        with open(os.path.join(out_dir, "events.jsonl"), "w") as f:
            for line in self.sim.event_log:
                f.write(line + "\n")
        audit = pd.DataFrame(
            [e._asdict() for e in self.audit_entries()], columns=AUDIT_COLUMNS
        )
        audit.to_csv(os.path.join(out_dir, "audit.csv"), index=False)
        metrics = pd.DataFrame([self.metrics.to_row()], columns=COLUMNS)
        metrics.to_csv(os.path.join(out_dir, "metrics.csv"), index=False)


def run(config: ScenarioConfig, record: bool = True) -> RunMetrics:
    """Runs one scenario and writes its artifacts to config.out. The run is
    also recorded in the Store unless record is False."""
    simulation = Simulation(config)
    metrics = simulation.run()
    simulation.write_artifacts(config.out)
    if record:
        store = Store(get_db_uri(config.out))
        store.record_run(config.to_dictionary(), metrics, simulation.audit_entries())
    return metrics


def _simulate(config: ScenarioConfig):
    simulation = Simulation(config)
    metrics = simulation.run()
    simulation.write_artifacts(config.out)
    return metrics, simulation.audit_entries()


def expand_grid(
    base: ScenarioConfig, grid: typing.Mapping[str, typing.Sequence]
) -> typing.List[ScenarioConfig]:
    """One config per combination of grid values, each with its own output
    directory below base.out. An empty grid yields the base config."""
    keys = sorted(grid)
    configs = []
    for i, values in enumerate(itertools.product(*(grid[k] for k in keys))):
        changes = dict(zip(keys, values))
        changes["out"] = os.path.join(base.out, f"run{i:04d}")
        configs.append(base.replace(**changes))
    return configs


def sweep(
    base: ScenarioConfig,
    grid: typing.Mapping[str, typing.Sequence],
    csv_path: typing.Optional[str] = None,
    n_jobs: int = 1,
    record: bool = True,
) -> pd.DataFrame:
    """Runs every grid combination and returns one metrics row per run,
    grid values first."""
    configs = expand_grid(base, grid)
    logging.info(f"Sweeping {len(configs)} scenarios with {n_jobs} jobs.")
    results = Parallel(n_jobs=n_jobs)(delayed(_simulate)(c) for c in configs)

    store = Store(get_db_uri(base.out)) if record else None
    rows = []
    keys = sorted(grid)
    for config, (metrics, entries) in zip(configs, results):
        row = {k: getattr(config, k) for k in keys}
        row.update(metrics.to_row())
        rows.append(row)
        if store is not None:
            store.record_run(config.to_dictionary(), metrics, entries)
    table = pd.DataFrame(rows, columns=keys + [c for c in COLUMNS if c not in keys])
    if csv_path is not None:
        directory = os.path.dirname(csv_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        table.to_csv(csv_path, index=False)
    return table
