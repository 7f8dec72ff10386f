# app/cli.py

"""
Command-line entry point for the experiments.

    python -m app.cli train --config configs/textgrid.conf --out results/train
    python -m app.cli suite --suites online,bound --seeds 0,1,2

Every command takes ``--config``, ``--out`` and ``--seeds``; the exit status is
0 when all acceptance checks of the command passed, 1 when one failed and 2
when an output file could not be written.
"""

import logging

import click

from app.config import load_config, parse_seeds
from app.exceptions import ConfigError, ProviderError
from app.logging_config import setup_logging
from app.services.online import VARIANTS
from app.services.suite import SUITES, parse_suites, run_suite

logger = logging.getLogger("app.cli")

IO_FAILURE = 2


def common_options(fn):
    fn = click.option("--seeds", default=None, help="Comma separated seeds, overrides run.seeds")(fn)
    fn = click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False), help="Output directory")(fn)
    fn = click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False))(fn)
    return fn


def execute(config_path, out_dir, seeds, suites, variants=()) -> None:
    try:
        cfg = load_config(config_path, seeds=parse_seeds(seeds) if seeds else None, out_dir=out_dir)
        status = run_suite(cfg, suites, variants=variants)
    except (ConfigError, ProviderError, ValueError) as exc:
        logger.error("%s", exc)
        raise click.ClickException(str(exc)) from exc
    except OSError as exc:
        logger.error("IO failure: %s", exc)
        click.echo(f"Error: {exc}", err=True)
        raise SystemExit(IO_FAILURE) from exc
    raise SystemExit(status)


@click.group()
@click.option("--log-level", default=None, help="Overrides LOG_LEVEL")
def cli(log_level):
    """Cache-efficient posterior sampling experiments."""
    setup_logging(log_level)


@cli.command()
@common_options
@click.option("--variant", type=click.Choice(VARIANTS), default="cached", show_default=True)
def train(config_path, out_dir, seeds, variant):
    """Online training of one variant; writes metrics.csv, params.csv and runs.csv."""
    execute(config_path, out_dir, seeds, [], variants=(variant,))


@cli.command()
@common_options
def offline(config_path, out_dir, seeds):
    """CQL with and without prior sources on a collected dataset."""
    execute(config_path, out_dir, seeds, ["offline"])


@cli.command("validate-bound")
@common_options
def validate_bound(config_path, out_dir, seeds):
    """Bound check under prior noise plus the refresh decay experiment."""
    execute(config_path, out_dir, seeds, ["bound"])


@cli.command("bench-latency")
@common_options
def bench_latency(config_path, out_dir, seeds):
    """Virtual latency of cached and uncached runs."""
    execute(config_path, out_dir, seeds, ["latency"])


@cli.command()
@common_options
def ablate(config_path, out_dir, seeds):
    """Every online variant; one ablation.csv row per variant."""
    execute(config_path, out_dir, seeds, ["ablation"])


@cli.command("adapt-prior")
@common_options
def adapt_prior(config_path, out_dir, seeds):
    """Few-shot adaptation of the mock prior on expert demonstrations."""
    execute(config_path, out_dir, seeds, ["fewshot"])


@cli.command()
@common_options
@click.option(
    "--suites",
    default="",
    help=f"Comma separated subset of {', '.join(SUITES)}, or 'all'",
)
def suite(config_path, out_dir, seeds, suites):
    """Any subset of suites into one output directory and manifest."""
    try:
        names = parse_suites(suites)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--suites") from exc
    execute(config_path, out_dir, seeds, names)


if __name__ == "__main__":
    cli()
