"""
Scenario and genesis configuration.

Scenarios are YAML mappings. Every key may be overridden from the
environment as BLACKCHAIN_<KEY>; values there are read as YAML scalars. A
.env file in the working directory is loaded first.
"""
from blackchain import crypto
from blackchain.entities.encoding import Encoder
from blackchain.entities.ledger import ParticipantIdentity
from blackchain.entities.utils import ConfigError
from blackchain.protocol.scms import check_window
from blackchain.protocol.vehicle import DetectionParams, MobilityModel
from blackchain.sim.network import MAX_RANGE_M, MIN_RANGE_M

import dataclasses
import logging
import os
import typing

import yaml
from dotenv import load_dotenv

ENV_PREFIX = "BLACKCHAIN_"

ATTACK_STRATEGIES = (
    "false_position",
    "bad_mouth",
    "sybil_vote",
    "byz_rsu_silent",
    "byz_rsu_equivocate",
)


@dataclasses.dataclass
class ScenarioConfig:
    seed: int = 0
    ticks: int = 600
    world_width: float = 2000.0
    world_height: float = 2000.0
    vehicles: int = 20
    rsus: int = 4
    rsu_positions: typing.Optional[typing.List[typing.List[float]]] = None
    range_m: float = 500.0
    range_override: bool = False
    v_max: float = 70.0
    tol: float = 0.1
    jump_slack: float = 5.0
    accel_sigma: float = 1.0
    turn_sigma: float = 0.05
    pseudonym_window: int = 600
    pseudonym_overlap: int = 100
    pseudonym_horizon: int = 1200
    cluster_epoch: int = 10
    recluster_interval: int = 50
    report_cooldown: int = 100
    rsu_cell_size: float = 2000.0
    bft_interval: int = 10
    link_delay: int = 1
    difficulty: int = 8
    heartbeat_mining: bool = False
    mine_interval: int = 10
    regions: int = 2
    mas_per_region: int = 1
    attackers: int = 0
    attack_offset_m: float = 500.0
    attack_start: int = 100
    attacks: typing.List[dict] = dataclasses.field(default_factory=list)
    out: str = "out"

    def __post_init__(self):
        self.validate()

    @classmethod
    def keys(cls) -> typing.List[str]:
        return [f.name for f in dataclasses.fields(cls)]

    def _check_types(self):
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            if field.type is bool and not isinstance(value, bool):
                raise ConfigError(field.name, "expects true or false")
            if field.type is int and (
                isinstance(value, bool) or not isinstance(value, int)
            ):
                raise ConfigError(field.name, "expects an integer")
            if field.type is float:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigError(field.name, "expects a number")
                setattr(self, field.name, float(value))
            if field.type is str and not isinstance(value, str):
                raise ConfigError(field.name, "expects a string")

    def validate(self):
        self._check_types()
        positive = [
            "ticks",
            "world_width",
            "world_height",
            "vehicles",
            "rsus",
            "v_max",
            "cluster_epoch",
            "recluster_interval",
            "rsu_cell_size",
            "bft_interval",
            "link_delay",
            "mine_interval",
            "regions",
            "mas_per_region",
            "pseudonym_horizon",
            "attack_offset_m",
        ]
        for key in positive:
            if not getattr(self, key) > 0:
                raise ConfigError(key, "must be positive")
        for key in [
            "seed",
            "tol",
            "jump_slack",
            "accel_sigma",
            "turn_sigma",
            "report_cooldown",
            "attackers",
            "attack_start",
        ]:
            if getattr(self, key) < 0:
                raise ConfigError(key, "must not be negative")
        if self.range_m <= 0 or (
            not self.range_override
            and not MIN_RANGE_M <= self.range_m <= MAX_RANGE_M
        ):
            raise ConfigError(
                "range_m", f"must lie in [{MIN_RANGE_M}, {MAX_RANGE_M}]"
            )
        if not 0 <= self.difficulty <= 32:
            raise ConfigError("difficulty", "must lie in [0, 32]")
        try:
            check_window(self.pseudonym_window, self.pseudonym_overlap)
        except ValueError as e:
            raise ConfigError("pseudonym_overlap", str(e))
        if self.attackers > self.vehicles:
            raise ConfigError("attackers", "exceeds the vehicle count")
        if self.rsu_positions is not None:
            if not self.rsu_positions or any(
                len(p) != 2 for p in self.rsu_positions
            ):
                raise ConfigError("rsu_positions", "expects [[x, y], ...]")
            if len(self.rsu_positions) != self.rsus:
                raise ConfigError("rsu_positions", "needs one entry per RSU")
        if not isinstance(self.attacks, list):
            raise ConfigError("attacks", "expects a list")
        for attack in self.attacks:
            if not isinstance(attack, dict):
                raise ConfigError("attacks", "entries are mappings")
            if attack.get("strategy") not in ATTACK_STRATEGIES:
                raise ConfigError(
                    "attacks", f"unknown strategy {attack.get('strategy')}"
                )

    @property
    def detection(self) -> DetectionParams:
        return DetectionParams(self.v_max, self.tol, self.jump_slack)

    @property
    def mobility(self) -> MobilityModel:
        return MobilityModel(
            self.world_width,
            self.world_height,
            self.v_max,
            self.accel_sigma,
            self.turn_sigma,
        )

    def replace(self, **changes) -> "ScenarioConfig":
        unknown = set(changes) - set(self.keys())
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown key")
        return dataclasses.replace(self, **changes)

    def to_dictionary(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dictionary(cls, d: typing.Mapping) -> "ScenarioConfig":
        unknown = set(d) - set(cls.keys())
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown key")
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError("config", str(e))


def env_overrides(environ: typing.Mapping[str, str] = None) -> dict:
    environ = os.environ if environ is None else environ
    overrides = {}
    for key in ScenarioConfig.keys():
        name = ENV_PREFIX + key.upper()
        if name in environ:
            overrides[key] = yaml.safe_load(environ[name])
            logging.info(f"Config key {key} overridden from {name}.")
    return overrides


def load_config(
    path: typing.Optional[str] = None,
    environ: typing.Mapping[str, str] = None,
    **explicit,
) -> ScenarioConfig:
    """Reads a scenario: file values, then environment, then explicit
    keyword overrides (CLI flags)."""
    if environ is None:
        load_dotenv()
    data = {}
    if path is not None:
        with open(path) as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be a mapping")
    data.update(env_overrides(environ))
    data.update({k: v for k, v in explicit.items() if v is not None})
    return ScenarioConfig.from_dictionary(data)


def load_grid(path: str) -> typing.Dict[str, list]:
    with open(path) as f:
        grid = yaml.safe_load(f) or {}
    if not isinstance(grid, dict):
        raise ConfigError("grid", "top level must be a mapping")
    for key, values in grid.items():
        if key not in ScenarioConfig.keys():
            raise ConfigError(key, "unknown grid key")
        if not isinstance(values, list):
            grid[key] = [values]
    return grid


# -------------------------------- Genesis -------------------------------- #


@dataclasses.dataclass
class GenesisConfig:
    """Everything an offline auditor needs besides the chain itself."""

    difficulty_bits: int
    participants: typing.List[ParticipantIdentity]
    anchors: typing.Dict[int, bytes]
    detection: DetectionParams = DetectionParams()

    def canonical_bytes(self) -> bytes:
        enc = Encoder()
        enc.text("blackchain-genesis").u8(self.difficulty_bits)
        enc.seq(self.participants, lambda e, p: p.encode(e))
        enc.seq(
            sorted(self.anchors.items()),
            lambda e, kv: e.u32(kv[0]).blob(kv[1]),
        )
        enc.f64(self.detection.v_max).f64(self.detection.tol)
        enc.f64(self.detection.jump_slack)
        return enc.getvalue()

    @property
    def genesis_hash(self) -> bytes:
        return crypto.digest(self.canonical_bytes())

    def to_dictionary(self) -> dict:
        return {
            "difficulty_bits": self.difficulty_bits,
            "participants": [
                {
                    "kind": p.kind,
                    "name": p.name,
                    "group_id": p.group_id,
                    "public_key": p.public_key.hex(),
                }
                for p in self.participants
            ],
            "anchors": {r: k.hex() for r, k in sorted(self.anchors.items())},
            "detection": dict(self.detection._asdict()),
        }

    @classmethod
    def from_dictionary(cls, d: typing.Mapping) -> "GenesisConfig":
        try:
            return cls(
                difficulty_bits=int(d["difficulty_bits"]),
                participants=[
                    ParticipantIdentity(
                        p["kind"],
                        p["name"],
                        p.get("group_id", ""),
                        bytes.fromhex(p["public_key"]),
                    )
                    for p in d["participants"]
                ],
                anchors={
                    int(r): bytes.fromhex(k) for r, k in d["anchors"].items()
                },
                detection=DetectionParams(**d.get("detection", {})),
            )
        except KeyError as e:
            raise ConfigError(str(e.args[0]), "missing genesis key")
        except (TypeError, ValueError) as e:
            raise ConfigError("genesis", str(e))

    def save(self, path: str):
        with open(path, "w") as f:
            yaml.safe_dump(self.to_dictionary(), f, sort_keys=True)

    @classmethod
    def load(cls, path: str) -> "GenesisConfig":
        with open(path) as f:
            data = yaml.safe_load(f)
        if not isinstance(data, dict):
            raise ConfigError("genesis", "top level must be a mapping")
        return cls.from_dictionary(data)


# ------------------------------- Store URI ------------------------------- #

_db_uri = None


def set_db_uri(uri: str):
    global _db_uri
    _db_uri = uri


def get_db_uri(out_dir: str = ".") -> str:
    """Explicit URI, then BLACKCHAIN_DB_URI, then a SQLite file in out_dir."""
    if _db_uri is not None:
        return _db_uri
    uri = os.environ.get(ENV_PREFIX + "DB_URI")
    if uri:
        return uri
    return f"sqlite:///{os.path.join(out_dir, 'runs.db')}"
