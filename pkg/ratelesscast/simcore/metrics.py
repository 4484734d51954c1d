import numpy as np

from ratelesscast.sim_logger import sim_logger

VERDICT_STABLE = "stable"
VERDICT_UNSTABLE = "unstable"
VERDICT_INCONCLUSIVE = "inconclusive"

# queue slope over the last half of the run, in quanta per slot
STABLE_SLOPE = 0.01
UNSTABLE_SLOPE = 0.1
MIN_TRACE_SLOTS = 10000

_logger = sim_logger("ratelesscast.simcore.metrics")


class TraceTooShortError(ValueError):
    pass


def classify_stability(trace, quantum, min_slots=MIN_TRACE_SLOTS):
    """
    Empirical stability verdict from the total queue backlog per slot: the
    least-squares slope over the last half of the trace, in units of
    ``quantum`` bits per slot, below 0.01 is stable and above 0.1 unstable.
    :param trace: total queue bits per slot after warmup
    :param quantum: bits/slot scale of the slope (mean offered load per flow)
    :raises TraceTooShortError: fewer than ``min_slots`` samples
    """
    trace = np.asarray(trace, dtype=float)
    if len(trace) < min_slots:
        raise TraceTooShortError("Need at least {} slots to classify stability, got {}".format(min_slots, len(trace)))
    half = trace[len(trace) // 2:]
    x = np.arange(len(half), dtype=float)
    slope = np.polyfit(x, half, 1)[0] / float(quantum)
    if slope < STABLE_SLOPE:
        return VERDICT_STABLE
    if slope > UNSTABLE_SLOPE:
        return VERDICT_UNSTABLE
    return VERDICT_INCONCLUSIVE


def lyapunov_sample(queues, Z):
    """L = (sum Q_s^2 + Z^2) / 2"""
    q = np.asarray(queues, dtype=float)
    return 0.5 * (float(np.dot(q, q)) + Z * Z)


class RunMetrics(object):
    """Result of one run, averages taken over the slots after warmup."""

    def __init__(
        self,
        policy,
        seed,
        slots,
        warmup,
        flow_names,
        avg_queue,
        throughput,
        avg_power,
        final_Z,
        lyapunov,
        B,
        state_counts,
        verdict,
        mean_code_length,
        multicast_rate,
        eta=None,
        partitions=None,
    ):
        self.policy = policy
        self.seed = seed
        self.slots = slots
        self.warmup = warmup
        self.flow_names = list(flow_names)
        self.avg_queue = np.asarray(avg_queue, dtype=float)
        self.throughput = np.asarray(throughput, dtype=float)
        self.avg_power = float(avg_power)
        self.final_Z = float(final_Z)
        self.lyapunov = np.asarray(lyapunov, dtype=float)
        self.B = dict(B)
        self.state_counts = dict(state_counts)
        self.verdict = verdict
        self.mean_code_length = np.asarray(mean_code_length, dtype=float)
        self.multicast_rate = np.asarray(multicast_rate, dtype=float)
        self.eta = {} if eta is None else dict(eta)
        self.partitions = [] if partitions is None else list(partitions)

    @property
    def avg_queue_total(self):
        return float(np.sum(self.avg_queue))

    @property
    def throughput_total(self):
        return float(np.sum(self.throughput))

    def as_dict(self):
        return dict(
            policy=self.policy,
            seed=self.seed,
            slots=self.slots,
            warmup=self.warmup,
            flows=self.flow_names,
            avg_queue=self.avg_queue,
            avg_queue_total=self.avg_queue_total,
            throughput=self.throughput,
            throughput_total=self.throughput_total,
            avg_power=self.avg_power,
            final_Z=self.final_Z,
            verdict=self.verdict,
            mean_code_length=self.mean_code_length,
            multicast_rate=self.multicast_rate,
            eta={"{}:{}".format(*k): v for k, v in self.eta.items()},
            partitions=self.partitions,
            lyapunov_samples=len(self.lyapunov),
        )
