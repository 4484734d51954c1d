import numpy as np

from ratelesscast.sim_logger import sim_logger

from .actions import (
    ActionSpace,
    ControlAction,
    KIND_UNICAST,
    KIND_MULTICAST,
    KIND_REPAIR,
    KIND_IDLE,
)

POLICY_NC_RC = "nc_rc"
POLICY_FIXED_RATE = "fixed_rate"
POLICY_UNICAST_ONLY = "unicast_only"
POLICY_NC_RC_COMBINED = "nc_rc_combined"
POLICIES = (POLICY_NC_RC, POLICY_FIXED_RATE, POLICY_UNICAST_ONLY, POLICY_NC_RC_COMBINED)

_logger = sim_logger("ratelesscast.scheduler")

_NO_LEVEL = np.zeros(0, dtype=int)
_NO_METRIC = np.zeros(0)


def rate_loss_factor(message_bits, i_max_k):
    """M / (M + I_max K): share of the accumulated MI a rateless code turns into data. Elementwise on arrays."""
    return message_bits / (np.asarray(message_bits, dtype=float) + i_max_k)


def _best_levels(Q, Z, rates, levels):
    """
    Row-wise argmax_k Q rates[k] - Z levels[k], lowest level on ties.
    :param rates: (flows, levels)
    :return: (level index per flow, metric per flow)
    """
    if len(rates) == 0:
        return _NO_LEVEL, _NO_METRIC
    metrics = np.asarray(Q, dtype=float)[:, None] * rates - Z * levels
    k = np.argmax(metrics, axis=1)
    return k, metrics[np.arange(len(k)), k]


def unicast_metric(Q_u, Z, expected, M_u, levels, i_max_k, epsilon=0.0):
    """
    Power choice of one unicast (or file repair) flow.
    :param expected: E{I(h, P_k) K | hhat} for every level, bits/slot
    :param levels: the unicast power levels, watts
    :return: (best_P, metric, I_u) with I_u the scaled rate at best_P
    """
    levels = np.asarray(levels, dtype=float)
    rates = np.asarray(expected, dtype=float) * (rate_loss_factor(M_u, i_max_k) / (1.0 + epsilon))
    k, metric = _best_levels([Q_u], Z, rates[None, :], levels)
    k = int(k[0])
    return float(levels[k]), float(metric[0]), float(rates[k])


def multicast_rate(n_g, sum_lengths, M_g, i_max_k):
    """Measured multicast rate n_g M_g / sum of code lengths, I_max K before the first code."""
    if n_g > 1 and sum_lengths > 0:
        return n_g * M_g / float(sum_lengths)
    return float(i_max_k)


def multicast_rates(n_g, sum_lengths, M_g, i_max_k):
    """``multicast_rate`` of every group at once."""
    n = np.asarray(n_g, dtype=float)
    L = np.asarray(sum_lengths, dtype=float)
    measured = (n > 1) & (L > 0)
    return np.where(measured, n * np.asarray(M_g, dtype=float) / np.where(measured, L, 1.0), float(i_max_k))


def multicast_metric(Q_g, Z, n_g, sum_lengths, M_g, p_av, i_max_k):
    """:return: (metric, I_g)"""
    I_g = multicast_rate(n_g, sum_lengths, M_g, i_max_k)
    return Q_g * I_g - Z * p_av, I_g


def _pick(metrics, space, u_level, u_rates, g_rates, v_level=_NO_LEVEL, v_rates=None):
    """Flow with the largest metric (lowest flow id on ties) as a ControlAction, None without candidate."""
    if len(metrics) == 0:
        return None
    f = int(np.argmax(metrics))
    metric = float(metrics[f])
    if metric == -np.inf:
        return None
    U, G = space.U, space.G
    if f < U:
        k = int(u_level[f])
        return ControlAction(KIND_UNICAST, f, f, float(space.levels[k]), k, space.unicast(f, k), metric,
                             float(u_rates[f, k]))
    if f < U + G:
        g = f - U
        return ControlAction(KIND_MULTICAST, g, f, space.power_set.p_av, None, space.multicast(g), metric,
                             float(g_rates[g]))
    v = f - U - G
    k = int(v_level[v])
    return ControlAction(KIND_REPAIR, v, f, float(space.levels[k]), k, space.repair(v, k), metric,
                         float(v_rates[v, k]))


def _finish(best, space, power_set):
    if best is None:
        return ControlAction(KIND_IDLE, None, None, 0.0, None, space.idle_index, 0.0)
    if power_set.includes_zero and best.metric < 0:
        return ControlAction(KIND_IDLE, None, best.flow, 0.0, None, space.idle_index, best.metric)
    return best


def _space(snapshot, power_set, space):
    if space is None:
        return ActionSpace(len(snapshot.Q_u), len(snapshot.Q_g), len(snapshot.Q_v), power_set)
    return space


def nc_rc_decide(snapshot, power_set, i_max_k, epsilon=0.0, space=None):
    """
    Slot decision of the NC-RC policy: the flow and power maximizing
    Q_s I_s - Z P_s. Unicast and repair flows pick their best power level,
    multicast groups transmit at P_av with their measured rate.
    Ties go to the lowest flow id, then the lowest power.
    :type snapshot: SchedulerSnapshot
    :param space: ActionSpace matching the snapshot, built when None
    :rtype: ControlAction
    """
    s = snapshot
    space = _space(s, power_set, space)
    scale = 1.0 / (1.0 + epsilon)
    u_rates = s.unicast_expected * (rate_loss_factor(s.M_u, i_max_k) * scale)[:, None]
    u_level, u_metric = _best_levels(s.Q_u, s.Z, u_rates, space.levels)
    g_rates = multicast_rates(s.n_g, s.sum_lengths, s.M_g, i_max_k)
    g_metric = s.Q_g * g_rates - s.Z * power_set.p_av
    v_rates = s.repair_expected * (rate_loss_factor(s.M_v, i_max_k) * scale)[:, None]
    v_level, v_metric = _best_levels(s.Q_v, s.Z, v_rates, space.levels)
    # repair flows without a pending residual have nothing to send
    v_metric = np.where(s.M_v > 0, v_metric, -np.inf)
    metrics = np.concatenate((u_metric, g_metric, v_metric))
    best = _pick(metrics, space, u_level, u_rates, g_rates, v_level, v_rates)
    return _finish(best, space, power_set)


def fixed_rate_decide(snapshot, power_set, i_max_k, space=None):
    """
    Slot decision with goodput-maximizing fixed-rate codes. Unicast flows
    use the goodput R* Pr{I K >= R* | hhat} in place of I_s. Multicast
    packets are fixed-rate too, but members keep the packets they decode
    until they hold the message, so groups are scheduled on their measured
    session rate like NC-RC does.
    :return: (ControlAction, code rate R in bits, 0 when idle)
    """
    s = snapshot
    space = _space(s, power_set, space)
    u_level, u_metric = _best_levels(s.Q_u, s.Z, s.unicast_goodput, space.levels)
    g_metric = s.Q_g * multicast_rates(s.n_g, s.sum_lengths, s.M_g, i_max_k) - s.Z * power_set.p_av
    best = _pick(np.concatenate((u_metric, g_metric)), space, u_level, s.unicast_rate, s.group_rate)
    action = _finish(best, space, power_set)
    return action, (0.0 if action.idle else action.rate)


class NcRcPolicy(object):
    name = POLICY_NC_RC

    def __init__(self, power_set, i_max_k, epsilon=0.0):
        self.power_set = power_set
        self.i_max_k = float(i_max_k)
        self.epsilon = float(epsilon)
        self._space = None

    def action_space(self, snapshot):
        """ActionSpace of the snapshot's flow counts, rebuilt only when they change."""
        dims = (len(snapshot.Q_u), len(snapshot.Q_g), len(snapshot.Q_v))
        if self._space is None or self._space.dims != dims:
            self._space = ActionSpace(*dims, power_set=self.power_set)
        return self._space

    def decide(self, snapshot):
        """:return: (ControlAction, None), rateless codes need no code rate"""
        space = self.action_space(snapshot)
        return nc_rc_decide(snapshot, self.power_set, self.i_max_k, self.epsilon, space), None


class FixedRatePolicy(NcRcPolicy):
    name = POLICY_FIXED_RATE

    def decide(self, snapshot):
        return fixed_rate_decide(snapshot, self.power_set, self.i_max_k, self.action_space(snapshot))


def get_policy(name, power_set, i_max_k, epsilon=0.0):
    """
    Decision rule of every policy name. ``unicast_only`` and ``nc_rc_combined``
    run the NC-RC rule on a converted flow set, the engine does the conversion.
    """
    if name == POLICY_FIXED_RATE:
        return FixedRatePolicy(power_set, i_max_k, epsilon)
    if name in (POLICY_NC_RC, POLICY_UNICAST_ONLY, POLICY_NC_RC_COMBINED):
        policy = NcRcPolicy(power_set, i_max_k, epsilon)
        policy.name = name
        return policy
    raise ValueError("Unknown policy {}, expected one of {}".format(name, POLICIES))
