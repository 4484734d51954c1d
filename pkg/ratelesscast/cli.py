# coding=utf-8

import json
import logging
import sys

import click
import yaml

from ratelesscast.__version import __version__
from ratelesscast.sim_logger import sim_logger
from ratelesscast.util.log import json_serialisor
from ratelesscast.channel import ChannelConfigError
from ratelesscast.scheduler import PowerSetError, POLICIES
from ratelesscast.simcore import SimConfigError, InvariantViolation
from ratelesscast.scenario import InvalidScenarioError, SCENARIO_NAMES, flag_overrides, load_scenario
from ratelesscast.sweep import (
    FORMATS,
    FORMAT_CSV,
    OUTPUT_TRACE,
    OUTPUT_LENGTHS,
    OUTPUT_METRICS,
    run_scenario,
    region_reference,
    emit,
    emit_reference,
    series_path,
    write_json,
)

EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_IO = 4

CONFIG_ERRORS = (InvalidScenarioError, ChannelConfigError, PowerSetError, SimConfigError, yaml.YAMLError)

_logger = sim_logger("ratelesscast.cli")


def _fail(code, msg):
    click.echo(msg, err=True)
    sys.exit(code)


def _guarded(func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except CONFIG_ERRORS as e:
        _fail(EXIT_CONFIG, "Invalid configuration: {}".format(e))
    except InvariantViolation as e:
        _fail(EXIT_INVARIANT, "Invariant violated: {}".format(e))
    except (IOError, OSError) as e:
        _fail(EXIT_IO, "I/O error on {}: {}".format(getattr(e, "filename", None), e))


def _scenario_options(f):
    options = [
        click.option("--scenario", "-s", default="custom", type=click.Choice(SCENARIO_NAMES), help="preset"),
        click.option("--config", "-c", "config_path", default=None, help="YAML file merged over the preset"),
        click.option("--lambda", "-l", "lam", multiple=True, type=float, help="arrival rate of every flow, repeatable"),
        click.option("--rho", type=float, default=None, help="CSI accuracy"),
        click.option("--slots", type=int, default=None, help="slots per run"),
        click.option("--seed", type=int, default=None, help="master seed"),
        click.option("--reps", type=int, default=None, help="replications per point"),
        click.option("--policy", "-p", "policies", multiple=True, type=click.Choice(POLICIES), help="repeatable"),
        click.option("--verbose", "-v", is_flag=True, help="debug logging"),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def _load(scenario, config_path, lam, rho, slots, seed, reps, policies, verbose):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    overrides = flag_overrides(lam=lam, rho=rho, slots=slots, seed=seed, reps=reps, policies=policies)
    return _guarded(load_scenario, scenario, config_path=config_path, overrides=overrides)


@click.group()
@click.version_option(__version__)
def cli():
    """Rateless unicast and multicast downlink scheduling simulator."""


@cli.command("run")
@_scenario_options
@click.option("--out", "-o", default=None, help="result table, results/<scenario>.<format> by default")
@click.option("--format", "-f", "fmt", default=FORMAT_CSV, type=click.Choice(FORMATS))
@click.option("--workers", "-w", type=int, default=None, help="worker processes")
@click.option("--trace", "trace_dir", default=None, help="directory of per-run queue traces and decision logs")
@click.option("--lengths", "lengths_dir", default=None, help="directory of per-run code lengths and settlements")
@click.option("--metrics-json", "metrics_dir", default=None, help="directory of per-run metrics as JSON")
def run_command(
    scenario, config_path, lam, rho, slots, seed, reps, policies, verbose, out, fmt, workers,
    trace_dir, lengths_dir, metrics_dir,
):
    """Runs every grid point x policy x replication of a scenario."""
    sc = _load(scenario, config_path, lam, rho, slots, seed, reps, policies, verbose)
    outputs = {OUTPUT_TRACE: trace_dir, OUTPUT_LENGTHS: lengths_dir, OUTPUT_METRICS: metrics_dir}
    for sub in _guarded(sc.split):
        path = series_path(out, sub.label) if out else "results/{}.{}".format(sub.name, fmt)
        rows = _guarded(run_scenario, sub, workers=workers, outputs=outputs)
        _guarded(emit, rows, path, fmt)
        reference = _guarded(region_reference, sub)
        if reference:
            click.echo("Region reference: {}".format(_guarded(emit_reference, reference, path)))
        click.echo("{} rows written to {}".format(len(rows), path))


@cli.command("region")
@_scenario_options
@click.option("--out", "-o", default=None, help="JSON report, printed if omitted")
@click.option("--search", is_flag=True, help="also bracket the boundary by simulation")
def region_command(scenario, config_path, lam, rho, slots, seed, reps, policies, verbose, out, search):
    """Region LP boundaries (genie and rateless) of a scenario."""
    sc = _load(scenario, config_path, lam, rho, slots, seed, reps, policies, verbose)
    sc.data.setdefault("region", dict())["reference"] = True
    if search:
        sc.data["region"]["search"] = True
    # one report per series value
    reports = [_guarded(region_reference, sub) for sub in _guarded(sc.split)]
    reference = reports[0] if len(reports) == 1 else reports
    if out:
        click.echo("Region reference: {}".format(_guarded(write_json, reference, out)))
    else:
        click.echo(json.dumps(reference, indent=2, default=json_serialisor))


@cli.command("list")
def list_command():
    """Lists the scenario presets."""
    for name in SCENARIO_NAMES:
        click.echo(name)


if __name__ == "__main__":
    cli()
