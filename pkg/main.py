import logging
import sys

import click
import yaml
from dotenv import load_dotenv
from tabulate import tabulate

from atscalc.runner.commands import COMMANDS, EXIT_ERROR, cmd_report_all
from atscalc.runner.scenario_config import load_scenario
from atscalc.utils.logger import get_logger, log_file_path, setup_logger

# ---------------------------------------------------------
# Load Env
# ---------------------------------------------------------
load_dotenv()

logger = get_logger("main")


def _run(ctx: click.Context, name: str, command) -> None:
    logger.info("=" * 120)
    logger.info(f" Running {name} (scenario '{ctx.obj['cfg'].scenario}')")
    logger.info("=" * 120)

    try:
        outcome = command(ctx.obj["cfg"])
    except Exception as e:
        logger.error(f" {name} failed: {e}", exc_info=True)
        sys.exit(EXIT_ERROR)

    click.echo(tabulate(outcome.summary, headers=[name, "result"], tablefmt="simple"))
    for path in outcome.files:
        logger.info(f" wrote {path}")
    logger.info(f" {name} finished with exit code {outcome.exit_code}")
    logger.info("-" * 120)
    sys.exit(outcome.exit_code)


# ---------------------------------------------------------
# CLI
# ---------------------------------------------------------
@click.group(invoke_without_command=True)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              envvar="ATSCALC_CONFIG", help="Scenario YAML; built-in unit-rate Spring values when omitted.")
@click.option("--out", default=None, help="Output directory.")
@click.option("--periods", type=int, default=None, help="Number of Spring periods.")
@click.option("--seed", type=int, default=None, help="Seed of the randomized suites.")
@click.option("--M", "M", default=None, help="Target delay of the x_M trajectory (rational, e.g. 10 or 17/2).")
@click.option("--count", type=int, default=None, help="Number of randomized equivalence sequences.")
@click.option("--print-config", is_flag=True, help="Print the resolved scenario and exit.")
@click.option("--verbose", is_flag=True, help="Debug logging.")
@click.pass_context
def cli(ctx, config_path, out, periods, seed, M, count, print_config, verbose):
    """Packet-level ATS regulator experiments with exact min-plus checks."""
    level = logging.DEBUG if verbose else logging.INFO
    setup_logger(level=level)

    try:
        cfg = load_scenario(config_path).with_overrides(periods=periods, seed=seed, M=M, out=out, count=count)
    except Exception as e:
        logger.error(f" Failed to load scenario: {e}", exc_info=True)
        sys.exit(EXIT_ERROR)

    if print_config:
        click.echo(yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=False))
        ctx.exit(0)
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())
        ctx.exit(0)

    setup_logger(cfg.output.log_folder, level=level)
    logger.info(f" Logging to {log_file_path()}")
    ctx.obj = {"cfg": cfg}


def _subcommand(name: str, command, help_text: str) -> None:
    @cli.command(name=name, help=help_text)
    @click.pass_context
    def _cmd(ctx):
        _run(ctx, name, command)


_HELP = {
    "spring": "Trajectory 1 through the IR: unbounded delay and figure data.",
    "strict-sc": "Strict service curves of the IR on Spring and random trajectories.",
    "prop2": "Overdrive trajectory against a candidate strict service curve.",
    "xm": "Delay of a fourth flow's first packet after a Spring prefix.",
    "residual": "FIFO residual service and the 3r limit for individual service curves.",
    "equivalence": "Incremental vs token-bucket IR on random sequences.",
    "shaping": "Shaping-for-free of the PFR and the IR on random FIFO upstreams.",
    "thm4": "Same aggregate input, bounded vs unbounded delay.",
}

for _name, _command in COMMANDS.items():
    _subcommand(_name, _command, _HELP[_name])

_subcommand("report-all", cmd_report_all, "Run every experiment and compare against the expected outcomes.")


if __name__ == "__main__":
    cli()
