import copy
from itertools import chain

import numpy as np
import yaml

from . import scenarios
from ratelesscast.sim_logger import sim_logger
from ratelesscast.util import dict_merge, dict_get
from ratelesscast.channel import ChannelConfig, ChannelConfigError
from ratelesscast.scheduler import PowerSet, PowerSetError, POLICIES
from ratelesscast.simcore import SimConfig, SimConfigError

SWEEP_LAMBDA = "lambda"
SWEEP_RHO = "rho"
SWEEP_COVER = "cover"
SWEEP_VARIABLES = (SWEEP_LAMBDA, SWEEP_RHO, SWEEP_COVER)

_logger = sim_logger("ratelesscast.scenario")


class InvalidScenarioError(ValueError):
    pass


SCENARIO_DEFAULT = scenarios.default.scenario

SCENARIOS_DERIVED = (
    scenarios.fig1.scenario,
    scenarios.fig2.scenario,
    scenarios.fig3.scenario,
    scenarios.region_check.scenario,
    scenarios.custom.scenario,
)

# fmt: off
SCENARIOS = tuple(chain(
    (SCENARIO_DEFAULT,),
    (dict_merge(SCENARIO_DEFAULT, s) for s in SCENARIOS_DERIVED)
))
# fmt: on

SCENARIO_MAP = dict((s["id"], s) for s in SCENARIOS)
SCENARIO_NAMES = tuple(s["id"] for s in SCENARIOS if not s["id"].startswith("_"))


def replication_seed(master_seed, replication):
    """
    Seed of replication ``replication``: the first 64-bit word of
    ``SeedSequence(master_seed, spawn_key=(replication,))``. Depends on the
    counter only, so adding replications never changes earlier ones.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(replication),))
    return int(ss.generate_state(1, np.uint64)[0])


def _assign(d, variable, value):
    if variable == SWEEP_LAMBDA:
        for flow in chain(d.get("unicast") or [], d.get("multicast") or []):
            flow["lambda"] = value
    elif variable == SWEEP_RHO:
        d["channel"]["rho"] = value
    else:
        d["sim"]["cover"] = value
    return d


class Scenario(object):
    """
    A validated scenario: one sweep variable over a grid, a number of
    replications and the policies to compare. ``data`` is the merged dict.
    An optional ``sweep.series`` axis repeats the sweep per value, see ``split``.
    """

    def __init__(self, data):
        self.data = copy.deepcopy(data)
        self.name = data.get("name", data.get("id"))
        self.variable = dict_get(data, ["sweep", "variable"])
        self.grid = list(dict_get(data, ["sweep", "grid"], []) or [])
        self.series = dict_get(data, ["sweep", "series"])
        self.label = None
        self.replications = data.get("replications", 1)
        self.master_seed = data.get("master_seed", 0)
        self.policies = list(data.get("policies") or [])
        self.workers = data.get("workers", 1)
        self._validate()

    def _validate(self):
        if self.variable not in SWEEP_VARIABLES:
            raise InvalidScenarioError(
                "Unknown sweep variable {}, expected one of {}".format(self.variable, SWEEP_VARIABLES)
            )
        if not self.grid:
            raise InvalidScenarioError("Sweep grid of scenario {} is empty".format(self.name))
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise InvalidScenarioError("Sweep grid must be strictly increasing, got {}".format(self.grid))
        if self.series:
            self._validate_series()
        if not isinstance(self.replications, int) or self.replications < 1:
            raise InvalidScenarioError("replications must be an integer >= 1, got {}".format(self.replications))
        if not isinstance(self.workers, int) or self.workers < 1:
            raise InvalidScenarioError("workers must be an integer >= 1, got {}".format(self.workers))
        if not self.policies:
            raise InvalidScenarioError("Scenario {} lists no policy".format(self.name))
        for p in self.policies:
            if p not in POLICIES:
                raise InvalidScenarioError("Unknown policy {}, expected one of {}".format(p, POLICIES))
        if not self.data.get("unicast") and not self.data.get("multicast"):
            raise InvalidScenarioError("Scenario {} has no flow".format(self.name))
        # every grid point has to build
        try:
            for value in self.grid:
                self.sim_config(value, self.policies[0], 0)
        except (ChannelConfigError, PowerSetError, SimConfigError, KeyError, TypeError) as e:
            raise InvalidScenarioError("Scenario {}: {}".format(self.name, e))

    def _validate_series(self):
        if not isinstance(self.series, dict):
            raise InvalidScenarioError("sweep.series must be a mapping, got {}".format(type(self.series).__name__))
        variable = self.series.get("variable")
        grid = list(self.series.get("grid") or [])
        if variable not in SWEEP_VARIABLES or variable == self.variable:
            raise InvalidScenarioError(
                "Series variable must be one of {} other than {}, got {}".format(SWEEP_VARIABLES, self.variable, variable)
            )
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidScenarioError("Series grid must be non-empty and strictly increasing, got {}".format(grid))

    def seeds(self):
        return [replication_seed(self.master_seed, r) for r in range(self.replications)]

    def point_data(self, value):
        """Merged dict with the sweep variable set to ``value``."""
        return _assign(copy.deepcopy(self.data), self.variable, value)

    def split(self):
        """
        One scenario per value of the ``sweep.series`` axis, each named
        ``<name>.<variable><value>`` and labelled ``<variable><value>``.
        Without series the list holds this scenario only.
        """
        if not self.series:
            return [self]
        ret = []
        for value in self.series["grid"]:
            d = _assign(copy.deepcopy(self.data), self.series["variable"], value)
            d["sweep"]["series"] = None
            label = "{}{}".format(self.series["variable"], value)
            d["name"] = "{}.{}".format(self.name, label)
            sub = Scenario(d)
            sub.label = label
            ret.append(sub)
        return ret

    def sim_config(self, value, policy, seed):
        """:rtype: SimConfig"""
        d = self.point_data(value)
        unicast = d.get("unicast") or []
        multicast = d.get("multicast") or []
        power = PowerSet(**d["power"])
        channel = ChannelConfig(
            unicast_snr_db=[u["snr_db"] for u in unicast],
            group_snr_db=[m["snr_db"] for m in multicast],
            p_av=power.p_av,
            **d["channel"]
        )
        sim = dict(d["sim"])
        cover = sim.pop("cover", None)
        if cover is not None:
            cover = [cover] * len(multicast) if isinstance(cover, (int, float)) else cover
        return SimConfig(
            channel,
            power,
            unicast_lambda=[u["lambda"] for u in unicast],
            unicast_bits=[u["message_bits"] for u in unicast],
            multicast_lambda=[m["lambda"] for m in multicast],
            multicast_bits=[m["message_bits"] for m in multicast],
            cover=cover,
            policy=policy,
            seed=seed,
            **sim
        )

    def region_settings(self):
        return dict(self.data.get("region") or {})

    def as_dict(self):
        return copy.deepcopy(self.data)


def flag_overrides(lam=None, rho=None, slots=None, seed=None, reps=None, policies=None):
    """
    Scenario dict fragment of the command line flags. Several ``lam`` values
    replace the sweep by a lambda sweep over them.
    """
    ret = dict()
    if lam:
        ret["sweep"] = dict(variable=SWEEP_LAMBDA, grid=sorted(float(l) for l in lam))
    if rho is not None:
        ret.setdefault("channel", dict())["rho"] = float(rho)
    if slots is not None:
        ret.setdefault("sim", dict())["slots"] = int(slots)
    if seed is not None:
        ret["master_seed"] = int(seed)
    if reps is not None:
        ret["replications"] = int(reps)
    if policies:
        ret["policies"] = list(policies)
    return ret


def load_config_file(path):
    """YAML scenario fragment, an empty file is an empty fragment."""
    with open(path, "r") as f:
        data = yaml.safe_load(f)
    if data is None:
        return dict()
    if not isinstance(data, dict):
        raise InvalidScenarioError("Config file {} must hold a mapping, got {}".format(path, type(data).__name__))
    return data


# singleton
_instance = None


def scenarioManager():
    global _instance
    if _instance is None:
        _instance = ScenarioManager()
    return _instance


class ScenarioManager(object):
    """Preset lookup and the preset -> config file -> flags merge order."""

    def get_names(self):
        return SCENARIO_NAMES

    def exists(self, name):
        return name in SCENARIO_NAMES

    def get(self, name):
        if not self.exists(name):
            raise InvalidScenarioError("Unknown scenario {}, expected one of {}".format(name, SCENARIO_NAMES))
        return copy.deepcopy(SCENARIO_MAP[name])

    def load(self, name="custom", config_path=None, overrides=None):
        """
        :param config_path: YAML file merged over the preset
        :param overrides: dict merged last, see ``flag_overrides``
        :rtype: Scenario
        """
        data = self.get(name)
        if config_path is not None:
            data = dict_merge(data, load_config_file(config_path))
            _logger.info("Scenario %s: merged config file %s", name, config_path)
        if overrides:
            data = dict_merge(data, overrides)
        return Scenario(data)


def load_scenario(name="custom", config_path=None, overrides=None):
    return scenarioManager().load(name, config_path=config_path, overrides=overrides)
