import numpy as np

from ratelesscast.sim_logger import sim_logger

ARRIVALS_POISSON = "poisson"
ARRIVALS_DETERMINISTIC = "deterministic"
ARRIVAL_MODES = (ARRIVALS_POISSON, ARRIVALS_DETERMINISTIC)

_logger = sim_logger("ratelesscast.queueing")


class DataQueue(object):
    """
    Backlog of one flow in bits. ``A`` and ``D`` count all arrivals and
    departures so that Q = Q0 + A - D can be checked at any slot.
    """

    __slots__ = ("Q", "Q0", "lam", "M", "A", "D", "last_departure")

    def __init__(self, lam, message_bits, Q=0.0):
        self.Q = float(Q)
        self.Q0 = float(Q)
        self.lam = float(lam)
        self.M = float(message_bits)
        self.A = 0.0
        self.D = 0.0
        self.last_departure = 0.0

    def consistent(self, tol=1e-6):
        return abs(self.Q - (self.Q0 + self.A - self.D)) <= tol * max(1.0, self.A)

    def as_dict(self):
        return dict(Q=self.Q, lam=self.lam, M=self.M, A=self.A, D=self.D)


class PowerQueue(object):
    """Virtual queue Z of the average power constraint, in watt-slots."""

    __slots__ = ("Z", "p_av", "W", "slots")

    def __init__(self, p_av, Z=0.0):
        self.Z = float(Z)
        self.p_av = float(p_av)
        self.W = 0.0
        self.slots = 0

    def as_dict(self):
        return dict(Z=self.Z, p_av=self.p_av, W=self.W, slots=self.slots)


def draw_arrivals(rng, lam, mode=ARRIVALS_POISSON, size=None):
    """
    New bits of one slot (or ``size`` slots) with mean ``lam``.
    :param rng: numpy Generator
    :param mode: ``poisson`` or ``deterministic`` (lam rounded to whole bits)
    """
    lam = np.asarray(lam, dtype=float)
    if mode == ARRIVALS_DETERMINISTIC:
        ret = np.broadcast_to(np.rint(lam), lam.shape if size is None else size).astype(np.int64)
    elif mode == ARRIVALS_POISSON:
        ret = rng.poisson(np.maximum(lam, 0.0), size=size)
    else:
        raise ValueError("Unknown arrival mode {}, expected one of {}".format(mode, ARRIVAL_MODES))
    if lam.ndim == 0 and size is None:
        return int(ret)
    return ret


def step_data_queue(q, served, service_bits, arrivals):
    """
    Q(t+1) = (Q(t) - service)^+ + arrivals, updated in place.
    :param served: the flow's message was delivered in this slot
    :param service_bits: M for fixed size messages, the residual for repair flows
    """
    out = min(q.Q, service_bits) if served else 0.0
    q.Q = q.Q - out + arrivals
    q.D += out
    q.A += arrivals
    q.last_departure = out
    return q


def step_power_queue(z, P):
    """Z(t+1) = (Z(t) - P_av)^+ + P, updated in place."""
    z.Z = max(z.Z - z.p_av, 0.0) + P
    z.W += P
    z.slots += 1
    return z


def average_power_bound(z):
    """
    Right hand side of W/T <= P_av + (Z(T) - Z(0))/T, which follows from the
    recursion of Z for every run (Z(0) = 0).
    """
    if z.slots == 0:
        return z.p_av
    return z.p_av + z.Z / float(z.slots)
