import numpy as np

from ratelesscast.sim_logger import sim_logger

_logger = sim_logger("ratelesscast.simcore.invariants")

TOL = 1e-6


class InvariantViolation(AssertionError):
    def __init__(self, slot, message):
        self.slot = slot
        super(InvariantViolation, self).__init__("slot {}: {}".format(slot, message))


def require(condition, slot, msg, *args):
    """Raises InvariantViolation (and dumps the slot trace) when ``condition`` is false."""
    if condition:
        return
    text = msg % args if args else msg
    _logger.error("Invariant violated at slot %s: %s", slot, text, trace_dump=True)
    raise InvariantViolation(slot, text)


def check_pre_decode(slot, unicast, multicast, repair):
    for u, rec in enumerate(unicast):
        require(0.0 <= rec.R < rec.threshold, slot, "unicast %s register %s outside [0, %s)", u, rec.R, rec.threshold)
    for g, rec in enumerate(multicast):
        open_ = ~rec.decoded_mask
        require(np.all(rec.R[open_] < rec.threshold), slot, "group %s undecoded registers %s reach %s", g, rec.R, rec.threshold)
    for flow in repair:
        if flow.residuals:
            thr = flow.residuals[0] * (1.0 + flow.epsilon)
            require(flow.R < thr, slot, "repair flow %s register %s reaches %s", flow.index, flow.R, thr)


def check_decode_total(slot, rec, i_max_k):
    """MI granted to a decoded unicast message lies in [M(1+eps), M(1+eps) + I_max K)."""
    total = rec.last_decode_total
    require(
        rec.threshold - TOL <= total < rec.threshold + i_max_k + TOL,
        slot, "decoded with %s bits of MI, threshold %s", total, rec.threshold,
    )


def check_queues(slot, queues):
    for idx, q in enumerate(queues):
        require(q.Q >= 0 and q.consistent(), slot, "queue %s: Q=%s, Q0+A-D=%s", idx, q.Q, q.Q0 + q.A - q.D)
        require(q.last_departure <= q.M + TOL, slot, "queue %s departure %s above message size %s", idx, q.last_departure, q.M)


def check_power_queue(slot, z, z_before, P):
    expected = max(z_before - z.p_av, 0.0) + P
    require(abs(z.Z - expected) <= TOL, slot, "Z=%s, recursion gives %s", z.Z, expected)


def check_code_length(slot, rec):
    """Last multicast code length is the max over the tracked members."""
    lengths = rec.per_member_lengths[-1]
    require(
        rec.length_history[-1] == int(np.max(lengths[rec.tracked])),
        slot, "group code length %s, tracked member lengths %s", rec.length_history[-1], lengths,
    )
    require(rec.Upsilon == sum(rec.length_history), slot, "Upsilon %s != sum of code lengths", rec.Upsilon)


def check_settlement(slot, M_g, settled):
    for member, r_star, m_v in settled:
        require(abs(r_star + m_v - M_g) <= TOL and 0 <= r_star <= M_g, slot,
                "member %s: R*=%s + M_v=%s != M_g=%s", member, r_star, m_v, M_g)


def check_repair(slot, flows):
    for flow in flows:
        require(flow.consistent(), slot, "repair flow %s: Q_v=%s padding=%s pending=%s progress=%s",
                flow.index, flow.queue.Q, flow.padding, flow.pending, flow.R)


def check_scale_invariance(slot, decide, snapshot, action):
    """The decision of a snapshot with every queue doubled is the same action."""
    other = decide(snapshot.scaled(2.0))[0]
    require(other.m == action.m, slot, "doubling the queues changed the action %s -> %s", action, other)
