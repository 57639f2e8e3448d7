# ------------------------- Imports ------------------------ #
import logging

import click

from blackchain.config import GenesisConfig, get_db_uri, load_config, load_grid
from blackchain.db import Store
from blackchain.entities.utils import BlackchainError, ChainParseError
from blackchain.harness import run as run_scenario
from blackchain.harness import sweep as sweep_scenarios
from blackchain.protocol.ledger import audit_chain, decode_chain, export_chain

AUDIT_OK = 0
AUDIT_FAILED = 1
AUDIT_PARSE_ERROR = 2


# ------------------------- Utilities ------------------------ #


def show_metrics(metrics):
    """
    Prints the headline metrics of a run as an info card.

    Args:
        metrics: RunMetrics of the run.
    """
    click.echo(f"Seed: {metrics.seed}")
    revoked = f"{metrics.attackers_revoked}/{metrics.attackers}"
    if metrics.false_revocations:
        click.echo(
            click.style(
                f"├─{metrics.false_revocations} honest vehicles were revoked",
                fg="yellow",
                bg="black",
            )
        )
    click.echo(f"├─Attackers revoked: {revoked}")
    click.echo(f"├─Latency (max ticks): {metrics.revocation_latency_max}")
    click.echo(
        f"├─Reports: {metrics.reports_generated} generated, "
        f"{metrics.reports_committed} committed"
    )
    click.echo(
        f"├─BFT rounds: {metrics.bft_committed} committed, "
        f"{metrics.bft_failed} failed"
    )
    click.echo(f"├─Global blocks: {metrics.global_blocks}")
    click.echo(f"└─Dedup ratio: {metrics.dedup_ratio:0.4f}")
    click.echo()


def show_run(run):
    """Prints a stored run as an info card."""
    click.echo(f"Run {run.id} (seed {run.seed})")
    click.echo(f"├─Created: {run.created_at}")
    click.echo(f"├─Output: {run.out_dir}")
    click.echo(f"├─Attackers revoked: {run.attackers_revoked}/{run.attackers}")
    click.echo(f"├─False revocations: {run.false_revocations}")
    click.echo(f"├─Global blocks: {run.global_blocks}")
    click.echo(f"└─Audit entries: {len(run.audit_entries)}")
    click.echo()


def _read(path: str) -> bytes:
    with open(path, "rb") as f:
        return f.read()


# ------------------------- CLI ------------------------ #


@click.group()
@click.option("--verbose", is_flag=True, help="Log debug messages.")
def blackchain(verbose: bool = False):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING)


@blackchain.command("run")
@click.option("--config", "config_path", help="Scenario YAML file.")
@click.option("--seed", type=int, help="Overrides the scenario seed.")
@click.option("--out", help="Output directory for the artifacts.")
def run(config_path: str = None, seed: int = None, out: str = None):
    """
    Runs one scenario and writes chain.bin, genesis.yaml, events.jsonl,
    audit.csv and metrics.csv.
    """
    try:
        config = load_config(config_path, seed=seed, out=out)
        metrics = run_scenario(config)
    except BlackchainError as e:
        raise click.ClickException(str(e))
    show_metrics(metrics)


@blackchain.command("audit")
@click.argument("chainfile", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--genesis",
    "genesis_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Genesis YAML written next to the chain.",
)
@click.pass_context
def audit(ctx, chainfile: str, genesis_path: str):
    """
    Replays a chain file from genesis. Exits 0 when it verifies, 1 when a
    block fails and 2 when the file cannot be parsed.
    """
    try:
        genesis = GenesisConfig.load(genesis_path)
    except BlackchainError as e:
        raise click.ClickException(str(e))
    try:
        result = audit_chain(_read(chainfile), genesis)
    except ChainParseError as e:
        click.echo(f"Parse failure: {e}", err=True)
        ctx.exit(AUDIT_PARSE_ERROR)
    if result:
        click.echo(f"Chain verifies up to height {result.height}.")
        ctx.exit(AUDIT_OK)
    click.echo(
        click.style(
            f"Verification failed at block {result.height}: {result.reason}",
            fg="red",
        )
    )
    ctx.exit(AUDIT_FAILED)


@blackchain.command("sweep")
@click.option("--config", "config_path", help="Base scenario YAML file.")
@click.option(
    "--grid",
    "grid_path",
    required=True,
    help="YAML mapping of config keys to lists of values.",
)
@click.option("--out", "csv_path", required=True, help="Metrics CSV path.")
@click.option("--jobs", default=1, help="Scenarios run in parallel.")
def sweep(config_path: str, grid_path: str, csv_path: str, jobs: int = 1):
    """
    Runs one scenario per grid combination and writes one CSV row each.
    """
    try:
        base = load_config(config_path)
        grid = load_grid(grid_path)
        table = sweep_scenarios(base, grid, csv_path, n_jobs=jobs)
    except BlackchainError as e:
        raise click.ClickException(str(e))
    click.echo(f"Wrote {len(table)} rows to {csv_path}.")


@blackchain.command("export")
@click.argument("chainfile", type=click.Path(exists=True, dir_okay=False))
def export(chainfile: str):
    """
    Prints a chain file as JSON lines, one block per line.
    """
    try:
        blocks = decode_chain(_read(chainfile))
    except ChainParseError as e:
        raise click.ClickException(str(e))
    for line in export_chain(blocks):
        click.echo(line)


@blackchain.command("recent")
@click.option("--limit", default=5, help="Limit of recent runs.")
@click.option("--out", default=".", help="Directory holding runs.db.")
def recent(limit: int = 5, out: str = "."):
    """
    Lists the most recent recorded runs.
    """
    store = Store(get_db_uri(out))
    runs = store.recent_runs(limit)
    if not runs:
        click.echo("No runs recorded.")
    for stored in runs:
        show_run(stored)
