"""Command line entry point: `corrsel select|schedule|track|verify --config <path>`."""
import sys
from typing import Optional, Tuple

import click
import pydantic
from prefect import Flow

from .config import ExperimentConfig
from .exceptions import SearchSpaceTooLarge, ValidationError
from .flows import AcceptanceCheck, ScheduleSweep, SelectionSweep, TrackingSweep

INVALID_CONFIG = 2

KINDS = {
    "select": ("select", "select-weak", "correlation"),
    "schedule": ("schedule",),
    "track": ("track",),
    "verify": ("verify",),
}


def load_config(command: str, path: str, seed: Optional[int]) -> ExperimentConfig:
    """Validate the file for `command`, exiting with code 2 when it is unusable."""
    try:
        config = ExperimentConfig.from_file(path, seed=seed)
    except (pydantic.ValidationError, ValidationError, SearchSpaceTooLarge) as e:
        click.echo(f"Invalid configuration {path}:\n{e}", err=True)
        sys.exit(INVALID_CONFIG)
    except (OSError, ValueError) as e:
        click.echo(f"Cannot read configuration {path}: {e}", err=True)
        sys.exit(INVALID_CONFIG)
    if config.kind not in KINDS[command]:
        click.echo(
            f"Invalid configuration {path}: kind '{config.kind}' cannot run under '{command}'",
            err=True,
        )
        sys.exit(INVALID_CONFIG)
    return config


def output_path(config: ExperimentConfig, out: Optional[str], extension: str) -> str:
    return out or config.output.path or f"{config.kind}.{extension}"


def run_flow(flow: Flow) -> Tuple[Flow, object]:
    state = flow.run()
    if not state.is_successful():
        click.echo(f"Flow {flow.name} finished in state {type(state).__name__}.", err=True)
        sys.exit(1)
    return flow, state


config_option = click.option(
    "--config",
    "config_path",
    required=True,
    type=click.Path(dir_okay=False),
    help="Experiment configuration (JSON).",
)
seed_option = click.option(
    "--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Overrides the seed in the file."
)
out_option = click.option(
    "--out", type=click.Path(dir_okay=False), default=None, help="Output path."
)


@click.group()
def cli():
    """Sensor selection and scheduling experiments under correlated noise."""


@cli.command()
@config_option
@seed_option
@out_option
def select(config_path: str, seed: Optional[int], out: Optional[str]):
    """Budget sweep (select, select-weak) or correlation sweep (correlation)."""
    config = load_config("select", config_path, seed)
    path = output_path(config, out, "csv")
    run_flow(SelectionSweep(name=f"corrsel {config.kind}", config=config, path=path))
    click.echo(path)


@cli.command()
@config_option
@seed_option
@out_option
def schedule(config_path: str, seed: Optional[int], out: Optional[str]):
    """Single-window scheduling sweep over the individual budgets."""
    config = load_config("schedule", config_path, seed)
    path = output_path(config, out, "csv")
    run_flow(ScheduleSweep(name="corrsel schedule", config=config, path=path))
    click.echo(path)


@cli.command()
@config_option
@seed_option
@out_option
def track(config_path: str, seed: Optional[int], out: Optional[str]):
    """Monte Carlo target tracking with rolling-horizon scheduling."""
    config = load_config("track", config_path, seed)
    path = output_path(config, out, "csv")
    flow, _ = run_flow(TrackingSweep(name="corrsel track", config=config, path=path))
    click.echo(path)
    click.echo(flow.snapshots_path)


@cli.command()
@config_option
@seed_option
@out_option
def verify(config_path: str, seed: Optional[int], out: Optional[str]):
    """Run the acceptance checks; exits 0 only if all of them pass."""
    config = load_config("verify", config_path, seed)
    path = output_path(config, out, "json")
    flow, state = run_flow(AcceptanceCheck(name="corrsel verify", config=config, path=path))
    report = state.result[flow.report].result

    click.echo(f"{'check':>5}  {'name':<22} {'status':<6} {'measured':>12} {'tolerance':>12}")
    for check in report["checks"]:
        status = "pass" if check["passed"] else "FAIL"
        click.echo(
            f"{check['check']:>5}  {check['name']:<22} {status:<6} "
            f"{check['measured']:>12.4g} {check['tolerance']:>12.4g}"
        )
    click.echo(path)
    sys.exit(0 if report["passed"] else 1)


if __name__ == "__main__":
    cli()
