import numpy as np

KIND_UNICAST = "unicast"
KIND_MULTICAST = "multicast"
KIND_REPAIR = "repair"
KIND_IDLE = "idle"


class PowerSetError(ValueError):
    pass


class PowerSet(object):
    """
    Transmit power levels of the base station.
    ``levels`` are the configured levels, ``unicast_levels`` what unicast and
    repair flows choose from (with 0 prepended when ``includes_zero``).
    Multicast always uses ``p_av``.
    """

    def __init__(self, levels, p_av, includes_zero=True):
        self.levels = tuple(float(l) for l in levels)
        self.p_av = float(p_av)
        self.includes_zero = bool(includes_zero)
        if not self.levels:
            raise PowerSetError("At least one power level is needed")
        if any(l < 0 for l in self.levels):
            raise PowerSetError("Power levels must be nonnegative, got {}".format(self.levels))
        if list(self.levels) != sorted(set(self.levels)):
            raise PowerSetError("Power levels must be sorted ascending and distinct, got {}".format(self.levels))
        if self.p_av not in self.levels:
            raise PowerSetError("P_av={} must be one of the power levels {}".format(self.p_av, self.levels))
        if self.includes_zero and self.levels[0] > 0:
            self.unicast_levels = (0.0,) + self.levels
        else:
            self.unicast_levels = self.levels

    @property
    def O(self):
        return len(self.unicast_levels)

    @property
    def p_max(self):
        return self.levels[-1]

    def as_array(self):
        return np.asarray(self.unicast_levels)

    def as_dict(self):
        return dict(levels=list(self.levels), p_av=self.p_av, includes_zero=self.includes_zero)


class ActionSpace(object):
    """
    Index m of every (flow, power) pair:
    unicast u at level k -> u O + k, multicast g -> U O + g,
    repair r at level k -> U O + G + r O + k, and one extra idle row F.
    """

    def __init__(self, num_unicast, num_groups, num_repair, power_set):
        self.U = int(num_unicast)
        self.G = int(num_groups)
        self.V = int(num_repair)
        self.power_set = power_set
        self.O = power_set.O
        self.levels = power_set.as_array()

    @property
    def dims(self):
        return self.U, self.G, self.V

    @property
    def F(self):
        return self.U * self.O + self.G + self.V * self.O

    @property
    def idle_index(self):
        return self.F

    def unicast(self, u, k):
        return u * self.O + k

    def multicast(self, g):
        return self.U * self.O + g

    def repair(self, r, k):
        return self.U * self.O + self.G + r * self.O + k

    def power(self, m):
        """Power of action ``m`` in watts."""
        if m == self.F:
            return 0.0
        if m < self.U * self.O:
            return self.power_set.unicast_levels[m % self.O]
        if m < self.U * self.O + self.G:
            return self.power_set.p_av
        return self.power_set.unicast_levels[(m - self.U * self.O - self.G) % self.O]

    def flow(self, m):
        """Flow id of action ``m``: unicast 0..U-1, multicast U..U+G-1, repair after."""
        if m == self.F:
            return None
        if m < self.U * self.O:
            return m // self.O
        if m < self.U * self.O + self.G:
            return self.U + (m - self.U * self.O)
        return self.U + self.G + (m - self.U * self.O - self.G) // self.O


class ControlAction(object):
    __slots__ = ("kind", "index", "flow", "power", "level", "m", "metric", "rate")

    def __init__(self, kind, index, flow, power, level, m, metric, rate=0.0):
        """
        :param kind: unicast, multicast, repair or idle
        :param index: position of the flow inside its kind
        :param flow: global flow id
        :param power: watts
        :param level: index into the unicast power levels (None for multicast)
        :param m: action index
        :param metric: Q I - Z P of the chosen action
        :param rate: I_s used in the metric (bits/slot), or the code rate for fixed-rate codes
        """
        self.kind = kind
        self.index = index
        self.flow = flow
        self.power = power
        self.level = level
        self.m = m
        self.metric = metric
        self.rate = rate

    @property
    def idle(self):
        return self.kind == KIND_IDLE or self.power <= 0.0

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__slots__}

    def __repr__(self):
        return "ControlAction(kind={}, flow={}, P={}, m={}, metric={:.4g})".format(
            self.kind, self.flow, self.power, self.m, self.metric
        )


def _arr(x, shape=None):
    if x is None:
        return np.zeros(shape if shape is not None else 0)
    return np.asarray(x, dtype=float)


def _rows(x, n):
    """Per-flow rows over the power levels, shape (n, O)."""
    if x is None or n == 0:
        return np.zeros((n, 0))
    return np.asarray(x, dtype=float).reshape(n, -1)


class SchedulerSnapshot(object):
    """
    What the transmitter knows at the start of a slot. Unicast and repair
    channel knowledge enters as the per-power rows looked up from the
    expectation table for the current reports, in bits/slot (times K).
    Repair flows without a pending residual carry ``M_v = 0``.
    """

    def __init__(
        self,
        Z=0.0,
        Q_u=None,
        M_u=None,
        unicast_expected=None,
        unicast_goodput=None,
        unicast_rate=None,
        Q_g=None,
        M_g=None,
        n_g=None,
        sum_lengths=None,
        group_goodput=None,
        group_rate=None,
        Q_v=None,
        M_v=None,
        repair_expected=None,
    ):
        self.Z = float(Z)
        self.Q_u = _arr(Q_u)
        self.M_u = _arr(M_u, self.Q_u.shape)
        U = len(self.Q_u)
        self.unicast_expected = _rows(unicast_expected, U)
        self.unicast_goodput = _rows(unicast_goodput, U)
        self.unicast_rate = _rows(unicast_rate, U)
        self.Q_g = _arr(Q_g)
        G = len(self.Q_g)
        self.M_g = _arr(M_g, G)
        self.n_g = np.ones(G, dtype=int) if n_g is None else np.asarray(n_g, dtype=int)
        self.sum_lengths = _arr(sum_lengths, G)
        self.group_goodput = _arr(group_goodput, G)
        self.group_rate = _arr(group_rate, G)
        self.Q_v = _arr(Q_v)
        V = len(self.Q_v)
        self.M_v = _arr(M_v, V)
        self.repair_expected = _rows(repair_expected, V)

    def scaled(self, c):
        """Copy with every queue (data and power) multiplied by ``c``."""
        ret = SchedulerSnapshot.__new__(SchedulerSnapshot)
        ret.__dict__.update(self.__dict__)
        ret.Z = self.Z * c
        ret.Q_u = self.Q_u * c
        ret.Q_g = self.Q_g * c
        ret.Q_v = self.Q_v * c
        return ret
