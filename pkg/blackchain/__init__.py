from blackchain.config import (
    GenesisConfig,
    ScenarioConfig,
    get_db_uri,
    load_config,
    load_grid,
    set_db_uri,
)
from blackchain.entities.metrics import RunMetrics
from blackchain.harness import Simulation, run, sweep
from blackchain.protocol.ledger import audit_chain, decode_chain, verify_chain

__all__ = [
    "GenesisConfig",
    "ScenarioConfig",
    "RunMetrics",
    "Simulation",
    "audit_chain",
    "decode_chain",
    "get_db_uri",
    "load_config",
    "load_grid",
    "run",
    "set_db_uri",
    "sweep",
    "verify_chain",
]
