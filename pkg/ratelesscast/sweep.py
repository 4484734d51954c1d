import csv
import json
import os
from multiprocessing import Pool

import numpy as np

from ratelesscast.sim_logger import sim_logger
from ratelesscast.util import makedirs
from ratelesscast.util.log import logtime, logExceptions, json_serialisor
from ratelesscast.scheduler import POLICY_NC_RC, POLICY_NC_RC_COMBINED
from ratelesscast.simcore import Engine
from ratelesscast.region import (
    AlphabetTooLargeError,
    RegionSolverError,
    StateSpaceOverflowError,
    build_region,
    genie_problem,
    solve_boundary,
    empirical_boundary_search,
    simulated_stability,
    DEFAULT_E_CAP,
)
from ratelesscast.scenario import SWEEP_LAMBDA

FORMAT_CSV = "csv"
FORMAT_JSON = "json"
FORMATS = (FORMAT_CSV, FORMAT_JSON)

COLUMNS = ("policy", "sweep", "seed", "avg_queue_bits", "throughput_bps", "avg_power_w", "verdict")

# per-run output directories of run_scenario
OUTPUT_TRACE = "trace"
OUTPUT_LENGTHS = "lengths"
OUTPUT_METRICS = "metrics"
OUTPUTS = (OUTPUT_TRACE, OUTPUT_LENGTHS, OUTPUT_METRICS)

_logger = sim_logger("ratelesscast.sweep")


def run_id(policy, variable, value, replication):
    """File name stem of one run, e.g. ``nc_rc_lambda0.2_r0``."""
    return "{}_{}{}_r{}".format(policy, variable, value, replication)


@logExceptions
def _run_point(sim_config, value, name=None, outputs=None):
    """
    :param name: run id, stem of the per-run files
    :param outputs: dict of OUTPUTS keys to directories, missing keys write nothing
    """
    outputs = outputs or dict()
    trace_dir = outputs.get(OUTPUT_TRACE)
    if trace_dir:
        sim_config = sim_config.replace(
            trace_path=os.path.join(trace_dir, "{}.queues.csv".format(name)),
            decision_log_path=os.path.join(trace_dir, "{}.decisions.csv".format(name)),
        )
    engine = Engine(sim_config)
    m = engine.run()
    if outputs.get(OUTPUT_LENGTHS):
        engine.export_code_lengths(outputs[OUTPUT_LENGTHS], name)
    if outputs.get(OUTPUT_METRICS):
        write_json(m.as_dict(), os.path.join(outputs[OUTPUT_METRICS], "{}.metrics.json".format(name)))
    return dict(
        policy=sim_config.policy,
        sweep=value,
        seed=sim_config.seed,
        avg_queue_bits=m.avg_queue_total,
        throughput_bps=m.throughput_total,
        avg_power_w=m.avg_power,
        verdict=m.verdict,
    )


def _jobs(scenario, outputs=None):
    seeds = scenario.seeds()
    for value in scenario.grid:
        for policy in scenario.policies:
            for r, seed in enumerate(seeds):
                name = run_id(policy, scenario.variable, value, r)
                if scenario.label:
                    name = "{}_{}".format(scenario.label, name)
                yield scenario.sim_config(value, policy, seed), value, name, outputs


@logtime()
def run_scenario(scenario, workers=None, outputs=None):
    """
    One row per grid point x policy x replication, in that nesting order.
    Replications of the same index share their seed across policies and grid
    points (paired comparisons).
    :type scenario: ratelesscast.scenario.Scenario
    :param workers: worker processes, the scenario's ``workers`` if None
    :param outputs: per-run files, see ``_run_point``
    :return: list of row dicts with the keys of ``COLUMNS``
    """
    workers = scenario.workers if workers is None else workers
    jobs = list(_jobs(scenario, outputs))
    _logger.info("Scenario %s: %s runs on %s worker(s)", scenario.name, len(jobs), workers)
    if workers > 1:
        p = Pool(workers)
        results = [p.apply_async(_run_point, args=job) for job in jobs]
        p.close()
        rows = [r.get() for r in results]
        p.join()
    else:
        rows = []
        for i, job in enumerate(jobs):
            rows.append(_run_point(*job))
            _logger.info(
                "%s/%s %s %s=%s seed=%s: %s",
                i + 1,
                len(jobs),
                rows[-1]["policy"],
                scenario.variable,
                job[1],
                job[0].seed,
                rows[-1]["verdict"],
            )
    return rows


def _reference_points(scenario):
    # the boundary along a direction does not depend on the load itself
    if scenario.variable == SWEEP_LAMBDA:
        return [scenario.grid[0]]
    return list(scenario.grid)


def _solve(label, build):
    try:
        solution = solve_boundary(build())
    except (AlphabetTooLargeError, StateSpaceOverflowError, RegionSolverError) as e:
        _logger.warning("No %s reference line: %s", label, e)
        return dict(error=str(e))
    return dict(lambda_star=solution.lambda_star, status=solution.status, binding=solution.binding)


@logtime()
def region_reference(scenario):
    """
    Reference lines of the scenario's ``region`` settings: genie and rateless
    LP boundaries when ``reference`` is set, the simulated boundary bracket
    of the first policy when ``search`` is set.
    :return: dict, empty when the scenario asks for nothing
    """
    settings = scenario.region_settings()
    if not settings.get("reference") and not settings.get("search"):
        return dict()
    e_cap = settings.get("e_cap", DEFAULT_E_CAP)
    direction = settings.get("direction")
    seed = scenario.seeds()[0]
    points = []
    for value in _reference_points(scenario):
        point = dict(sweep=value)
        if settings.get("reference"):
            cfg = scenario.sim_config(value, POLICY_NC_RC, seed)
            point["genie"] = _solve("genie", lambda: genie_problem(cfg, direction=direction, e_cap=e_cap))
            point[POLICY_NC_RC] = _solve(
                POLICY_NC_RC,
                lambda: build_region(cfg, direction=direction, e_cap=e_cap, rng=np.random.default_rng(seed)),
            )
            if POLICY_NC_RC_COMBINED in scenario.policies:
                ccfg = scenario.sim_config(value, POLICY_NC_RC_COMBINED, seed)
                point[POLICY_NC_RC_COMBINED] = _solve(
                    POLICY_NC_RC_COMBINED,
                    lambda: build_region(ccfg, direction=direction, e_cap=e_cap, rng=np.random.default_rng(seed)),
                )
        if settings.get("search"):
            policy = scenario.policies[0]
            cfg = scenario.sim_config(value, policy, seed)
            evaluate = simulated_stability(cfg, direction=direction, replications=scenario.replications)
            lo, hi = empirical_boundary_search(
                evaluate, settings.get("search_upper", 1.0), budget=settings.get("search_budget", 10)
            )
            point["empirical"] = dict(policy=policy, lower=lo, upper=hi)
        points.append(point)
    return dict(scenario=scenario.name, variable=scenario.variable, direction=direction, points=points)


def emit(rows, path, fmt=FORMAT_CSV):
    """
    Writes the result table. CSV has the fixed header ``COLUMNS``, JSON is an
    array of row objects with the same keys in the same order.
    """
    if fmt not in FORMATS:
        raise ValueError("Unknown output format {}, expected one of {}".format(fmt, FORMATS))
    makedirs(path, parent=True)
    if fmt == FORMAT_CSV:
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=COLUMNS, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow(dict((k, row[k]) for k in COLUMNS))
    else:
        with open(path, "w") as f:
            json.dump([dict((k, row[k]) for k in COLUMNS) for row in rows], f, indent=2, default=json_serialisor)
            f.write("\n")
    _logger.info("Wrote %s rows to %s", len(rows), path)
    return path


def series_path(path, label):
    """``results/fig3.csv`` -> ``results/fig3.rho0.2.csv`` for label ``rho0.2``."""
    if not label:
        return path
    root, ext = os.path.splitext(path)
    return "{}.{}{}".format(root, label, ext)


def reference_path(out_path):
    return "{}.region.json".format(out_path)


def write_json(data, path):
    makedirs(path, parent=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, default=json_serialisor)
        f.write("\n")
    _logger.info("Wrote %s", path)
    return path


def emit_reference(reference, out_path):
    """Sidecar of the result table at ``out_path``."""
    return write_json(reference, reference_path(out_path))
