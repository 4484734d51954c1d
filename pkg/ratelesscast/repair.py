"""
Combined delivery: a multicast session ends as soon as the covered members
of the group decoded, every other member (straggler) gets what it missed
through its own unicast file repair flow.
"""
import csv
from collections import deque

import numpy as np

from ratelesscast.sim_logger import sim_logger
from ratelesscast.queueing import DataQueue, step_data_queue
from ratelesscast.util import makedirs

_logger = sim_logger("ratelesscast.repair")


class WarmupIncompleteError(ValueError):
    pass


class PartitionSpec(object):
    """
    Covered set of one multicast group.
    ``covered`` lists member ids by descending average throughput, ``stragglers``
    are the remaining members in id order.
    """

    def __init__(self, group, cover, covered, throughput):
        self.group = int(group)
        self.cover = int(cover)
        self.covered = tuple(int(j) for j in covered)
        self.throughput = np.asarray(throughput, dtype=float)
        self.stragglers = tuple(j for j in range(len(self.throughput)) if j not in self.covered)

    def as_dict(self):
        return dict(group=self.group, cover=self.cover, covered=list(self.covered),
                    stragglers=list(self.stragglers), throughput=self.throughput)


def estimate_partition(per_member_lengths, cover, message_bits, group=0):
    """
    Picks the ``cover`` members with the highest average throughput
    Ibar_gj = (codes decoded) M_g / (sum of their code lengths); ties go to the lower member id.
    :param per_member_lengths: one array of member code lengths per completed warmup session (nan: not decoded)
    :raises WarmupIncompleteError: no completed session yet
    """
    if len(per_member_lengths) == 0:
        raise WarmupIncompleteError("Group {}: no completed multicast session to estimate the partition from".format(group))
    lengths = np.vstack([np.asarray(l, dtype=float) for l in per_member_lengths])
    J = lengths.shape[1]
    if not 1 <= cover <= J:
        raise ValueError("Group {}: cover must be in [1, {}], got {}".format(group, J, cover))
    decoded = ~np.isnan(lengths)
    total = np.where(decoded, lengths, 0.0).sum(axis=0)
    count = decoded.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        throughput = np.where(total > 0, count * float(message_bits) / total, 0.0)
    order = sorted(range(J), key=lambda j: (-throughput[j], j))
    spec = PartitionSpec(group, cover, order[:cover], throughput)
    _logger.info(
        "Group %s partition: covered %s, stragglers %s, throughput %s",
        group, spec.covered, spec.stragglers, np.round(throughput, 3).tolist(),
    )
    return spec


class RepairFlow(object):
    """
    Unicast file repair flow of straggler ``member`` of ``group``.
    ``residuals`` holds the bits still missing per settled session (FIFO),
    the head is the message in flight; ``R`` is the MI collected for it.
    """

    def __init__(self, index, group, member, receiver, message_bits, lam, Q=0.0, epsilon=0.0):
        self.index = int(index)
        self.group = int(group)
        self.member = int(member)
        self.receiver = int(receiver)
        self.M_g = float(message_bits)
        self.epsilon = float(epsilon)
        self.queue = DataQueue(lam, message_bits, Q=Q)
        self.residuals = deque()
        self.R = 0.0
        self.n = 1
        self.T = 0
        self.length_history = []
        self.sessions = 0
        self.sum_settled = 0.0
        # M_g minus the bits a session took from the group queue, summed
        self.padding = 0.0
        self.settlements = []

    @property
    def current_residual(self):
        return self.residuals[0] if self.residuals else 0.0

    @property
    def pending(self):
        return float(sum(self.residuals))

    def consistent(self, tol=1e-6):
        """Q_v plus the padded session bits covers the pending residuals minus the progress in flight."""
        progress = self.R / (1.0 + self.epsilon)
        return self.queue.Q + self.padding + tol >= self.pending - progress

    def as_dict(self):
        return dict(
            index=self.index, group=self.group, member=self.member, Q=self.queue.Q,
            residuals=list(self.residuals), R=self.R, n=self.n, sessions=self.sessions,
        )


def end_of_session_settlement(group_state, partition, flows, session_departure=None):
    """
    Settles a finished multicast session for the stragglers of one group:
    R* = min(R_gj, M_g) is credited to Q_v and M_v = M_g - R* joins the
    residual queue (empty residuals are skipped).
    :param group_state: MulticastReception right after its ACK, with ``settled_registers``
    :param flows: RepairFlow of every straggler, in ``partition.stragglers`` order
    :param session_departure: bits the session took from the group queue, defaults to M_g
    :return: list of (member, R*, M_v)
    """
    M_g = group_state.M
    registers = group_state.settled_registers
    session = group_state.completed
    departed = M_g if session_departure is None else session_departure
    ret = []
    for flow in flows:
        r_star = min(registers[flow.member] / (1.0 + group_state.epsilon), M_g)
        m_v = M_g - r_star
        step_data_queue(flow.queue, True, r_star, 0)
        if m_v > 0:
            flow.residuals.append(m_v)
        flow.sessions += 1
        flow.sum_settled += r_star
        flow.padding += M_g - departed
        flow.settlements.append((partition.group, session, flow.member, r_star, m_v))
        ret.append((flow.member, r_star, m_v))
    return ret


def step_repair_flow(flow, scheduled, mi_slot, arrivals):
    """
    One slot of a repair flow: MI accumulation against the head residual,
    then the queue update with the group's arrivals.
    :return: (flow, acked)
    """
    while flow.residuals and flow.residuals[0] <= 0:
        flow.residuals.popleft()
    acked, served = False, 0.0
    if scheduled and flow.residuals:
        flow.R += mi_slot
        if flow.R >= flow.residuals[0] * (1.0 + flow.epsilon):
            served = flow.residuals.popleft()
            flow.length_history.append(flow.T + 1)
            flow.R = 0.0
            flow.T = 0
            flow.n += 1
            acked = True
        else:
            flow.T += 1
    step_data_queue(flow.queue, acked, served, arrivals)
    return flow, acked


def eta_estimate(flow):
    """
    Share of the multicast messages a straggler got during the sessions,
    sum R* / (N M_g); nan before the first settled session.
    """
    if flow.sessions == 0:
        return float("nan")
    return flow.sum_settled / (flow.sessions * flow.M_g)


def export_settlements(flows, path):
    """CSV of every settlement: group, session, member, r_star, m_v."""
    makedirs(path, parent=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["group", "session", "member", "r_star", "m_v"])
        for flow in flows:
            for row in flow.settlements:
                writer.writerow(row)
    return path
