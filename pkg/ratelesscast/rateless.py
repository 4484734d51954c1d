"""
Reception of rateless codes, abstracted as mutual information accumulation:
a receiver decodes the in-flight message in the first slot where the MI it
collected since the last decode reaches M (1 + epsilon). The overshoot of the
decoding slot is lost, the next message starts from zero.
"""

import csv

import numpy as np

from ratelesscast.sim_logger import sim_logger
from ratelesscast.util import makedirs

_logger = sim_logger("ratelesscast.rateless")


class NoCompletedCodesError(ValueError):
    pass


class UnicastReception(object):
    """
    Register of one unicast (or file repair) flow.
    ``n`` is the index of the code in flight, so ``n - 1`` codes completed.
    """

    def __init__(self, message_bits, epsilon=0.0):
        self.M = float(message_bits)
        self.epsilon = float(epsilon)
        self.R = 0.0
        self.n = 1
        self.T = 0
        self.length_history = []
        # MI granted to the in-flight message, and to the last decoded one
        self.granted = 0.0
        self.last_decode_total = 0.0

    @property
    def threshold(self):
        return self.M * (1.0 + self.epsilon)

    @property
    def completed(self):
        return self.n - 1

    def as_dict(self):
        return dict(M=self.M, epsilon=self.epsilon, R=self.R, n=self.n, T=self.T, completed=self.completed)


def step_unicast(state, scheduled, mi_slot):
    """
    One slot of a unicast receiver.
    :param state: UnicastReception, updated in place
    :param scheduled: whether the flow got the slot
    :param mi_slot: I(h, P) K collected in the slot, bits
    :return: (state, acked)
    """
    if not scheduled:
        return state, False
    total = state.R + mi_slot
    state.granted += mi_slot
    if total < state.threshold:
        state.R = total
        state.T += 1
        return state, False
    state.last_decode_total = state.granted
    state.length_history.append(state.T + 1)
    state.R = 0.0
    state.granted = 0.0
    state.T = 0
    state.n += 1
    return state, True


class MulticastReception(object):
    """
    Registers of the members of one multicast group.
    ``tracked`` marks the members whose ACK ends a session, all of them for
    plain multicast and the covered set under combined delivery. Untracked
    members keep listening, their registers are handed to the repair flows
    when the session ends (``settled_registers``).
    Every member stops accumulating once it decoded the message.
    """

    def __init__(self, message_bits, members, epsilon=0.0):
        self.M = float(message_bits)
        self.J = int(members)
        self.epsilon = float(epsilon)
        self.R = np.zeros(self.J)
        self.decoded_mask = np.zeros(self.J, dtype=bool)
        self.tracked = np.ones(self.J, dtype=bool)
        self.member_T = np.zeros(self.J, dtype=int)
        self.n = 1
        self.T = 0
        self.length_history = []
        # one array per completed code, nan where an untracked member did not decode
        self.per_member_lengths = []
        self.Upsilon = 0
        self.settled_registers = None

    @property
    def threshold(self):
        return self.M * (1.0 + self.epsilon)

    @property
    def completed(self):
        return self.n - 1

    def set_tracked(self, members):
        """:param members: member indices whose ACKs end a session"""
        self.tracked = np.zeros(self.J, dtype=bool)
        self.tracked[list(members)] = True

    def as_dict(self):
        return dict(
            M=self.M,
            J=self.J,
            R=self.R,
            decoded_mask=self.decoded_mask,
            tracked=self.tracked,
            n=self.n,
            T=self.T,
            Upsilon=self.Upsilon,
        )


def step_multicast(state, scheduled, mi_slots):
    """
    One slot of a multicast group transmitted at P_av.
    :param state: MulticastReception, updated in place
    :param scheduled: whether the group got the slot
    :param mi_slots: I(h_gj, P_av) K of every member, bits
    :return: (state, acked) where acked means every tracked member decoded
    """
    if not scheduled:
        return state, False
    listening = ~state.decoded_mask
    state.R = np.where(listening, state.R + np.asarray(mi_slots, dtype=float), state.R)
    crossed = listening & (state.R >= state.threshold)
    state.member_T[crossed] = state.T + 1
    state.decoded_mask |= crossed
    state.T += 1
    if not np.all(state.decoded_mask[state.tracked]):
        return state, False

    lengths = np.where(state.decoded_mask, state.member_T, np.nan).astype(float)
    L = int(np.max(state.member_T[state.tracked]))
    state.length_history.append(L)
    state.per_member_lengths.append(lengths)
    state.Upsilon += L
    state.settled_registers = state.R.copy()
    state.R[:] = 0.0
    state.decoded_mask[:] = False
    state.member_T[:] = 0
    state.T = 0
    state.n += 1
    return state, True


def mean_code_length(length_history):
    """
    Average code length over the completed codes, the estimator of L_bar.
    :raises NoCompletedCodesError: nothing decoded yet
    """
    if len(length_history) == 0:
        raise NoCompletedCodesError("No completed codes, the mean code length is undefined")
    return float(np.mean(length_history))


def member_mean_throughput(state, member):
    """Ibar_gj = completed codes * M_g / sum of the member's code lengths, bits/slot."""
    lengths = np.array([l[member] for l in state.per_member_lengths], dtype=float)
    lengths = lengths[~np.isnan(lengths)]
    if len(lengths) == 0:
        raise NoCompletedCodesError("Member {} never decoded a code".format(member))
    return len(lengths) * state.M / float(np.sum(lengths))


def export_lengths(state, path):
    """
    Writes the completed code lengths to CSV: code_index, L and one column per
    member for multicast groups.
    """
    makedirs(path, parent=True)
    members = getattr(state, "J", 0)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["code_index", "L"] + ["L_{}".format(j) for j in range(members)])
        for idx, L in enumerate(state.length_history):
            row = [idx + 1, L]
            if members:
                row += ["" if np.isnan(l) else int(l) for l in state.per_member_lengths[idx]]
            writer.writerow(row)
    _logger.debug("Wrote %s code lengths to %s", len(state.length_history), path)
    return path
