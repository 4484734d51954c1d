import copy

import numpy as np

from ratelesscast.channel import ChannelConfig
from ratelesscast.queueing import ARRIVAL_MODES, ARRIVALS_POISSON
from ratelesscast.scheduler import PowerSet, POLICIES, POLICY_NC_RC, POLICY_UNICAST_ONLY


class SimConfigError(ValueError):
    pass


class SimConfig(object):
    """
    Everything one simulation run needs. Flows are listed per kind:
    unicast users in the order of ``channel.unicast_snr_db``, multicast groups
    in the order of ``channel.group_snr_db``.
    """

    def __init__(
        self,
        channel,
        power,
        unicast_lambda=(),
        unicast_bits=(),
        multicast_lambda=(),
        multicast_bits=(),
        cover=None,
        policy=POLICY_NC_RC,
        slots=200000,
        warmup=None,
        seed=0,
        epsilon=0.0,
        arrival_mode=ARRIVALS_POISSON,
        check_invariants=False,
        lyapunov_every=100,
        partition_warmup_sessions=200,
        stability_min_slots=10000,
        trace_path=None,
        decision_log_path=None,
    ):
        """
        :type channel: ChannelConfig
        :type power: PowerSet
        :param cover: l(g) per group for combined delivery, None covers every member
        :param warmup: slots excluded from the metrics, None for slots // 10
        :param trace_path: per-slot queue trace CSV, None for no trace
        :param decision_log_path: per-slot decision CSV (slot, action_index, flow, power, metric), None for none
        """
        self.channel = channel
        self.power = power
        self.unicast_lambda = tuple(float(l) for l in unicast_lambda)
        self.unicast_bits = tuple(float(m) for m in unicast_bits)
        self.multicast_lambda = tuple(float(l) for l in multicast_lambda)
        self.multicast_bits = tuple(float(m) for m in multicast_bits)
        self.cover = None if cover is None else tuple(int(c) for c in cover)
        self.policy = policy
        self.slots = int(slots)
        self.warmup = self.slots // 10 if warmup is None else int(warmup)
        self.seed = int(seed)
        self.epsilon = float(epsilon)
        self.arrival_mode = arrival_mode
        self.check_invariants = bool(check_invariants)
        self.lyapunov_every = int(lyapunov_every)
        self.partition_warmup_sessions = int(partition_warmup_sessions)
        self.stability_min_slots = int(stability_min_slots)
        self.trace_path = trace_path
        self.decision_log_path = decision_log_path
        self._validate()

    def _validate(self):
        ch = self.channel
        if len(self.unicast_lambda) != ch.num_unicast or len(self.unicast_bits) != ch.num_unicast:
            raise SimConfigError("Need lambda and message size for each of the {} unicast users".format(ch.num_unicast))
        if len(self.multicast_lambda) != ch.num_groups or len(self.multicast_bits) != ch.num_groups:
            raise SimConfigError("Need lambda and message size for each of the {} multicast groups".format(ch.num_groups))
        if any(l < 0 for l in self.unicast_lambda + self.multicast_lambda):
            raise SimConfigError("Arrival rates must be >= 0")
        if any(m <= 0 for m in self.unicast_bits + self.multicast_bits):
            raise SimConfigError("Message sizes must be > 0")
        if not self.slots > self.warmup >= 0:
            raise SimConfigError("Need slots > warmup >= 0, got slots={} warmup={}".format(self.slots, self.warmup))
        if self.policy not in POLICIES:
            raise SimConfigError("Unknown policy {}, expected one of {}".format(self.policy, POLICIES))
        if self.arrival_mode not in ARRIVAL_MODES:
            raise SimConfigError("Unknown arrival mode {}, expected one of {}".format(self.arrival_mode, ARRIVAL_MODES))
        if self.epsilon < 0:
            raise SimConfigError("epsilon must be >= 0")
        if self.cover is not None:
            if len(self.cover) != ch.num_groups:
                raise SimConfigError("cover needs one l(g) per multicast group")
            for c, J in zip(self.cover, ch.group_sizes):
                if not 1 <= c <= J:
                    raise SimConfigError("cover l(g)={} outside [1, {}]".format(c, J))
        if self.lyapunov_every < 1:
            raise SimConfigError("lyapunov_every must be >= 1")
        if self.partition_warmup_sessions < 1:
            raise SimConfigError(
                "partition_warmup_sessions must be >= 1, got {}".format(self.partition_warmup_sessions)
            )
        if abs(ch.p_av - self.power.p_av) > 1e-12:
            raise SimConfigError("channel p_av {} and power set p_av {} differ".format(ch.p_av, self.power.p_av))

    @property
    def num_flows(self):
        return self.channel.num_unicast + self.channel.num_groups

    @property
    def lambdas(self):
        return np.asarray(self.unicast_lambda + self.multicast_lambda, dtype=float)

    @property
    def message_bits(self):
        return np.asarray(self.unicast_bits + self.multicast_bits, dtype=float)

    def covers(self):
        """l(g) of every group, J(g) where combined delivery is off."""
        if self.cover is None:
            return tuple(self.channel.group_sizes)
        return self.cover

    def replace(self, **kw):
        ret = copy.copy(self)
        for k, v in kw.items():
            if not hasattr(ret, k):
                raise SimConfigError("Unknown SimConfig field {}".format(k))
            setattr(ret, k, v)
        if "slots" in kw and "warmup" not in kw:
            ret.warmup = ret.slots // 10
        ret.__init__(**ret.as_kwargs())
        return ret

    def with_load(self, scale, direction=None):
        """
        Copy with every flow's arrival rate set to ``scale * direction``
        (unicast flows first, then groups); direction defaults to all ones.
        """
        d = np.ones(self.num_flows) if direction is None else np.asarray(direction, dtype=float)
        lam = scale * d
        U = self.channel.num_unicast
        return self.replace(unicast_lambda=tuple(lam[:U]), multicast_lambda=tuple(lam[U:]))

    def unicast_only(self):
        """
        Every multicast member becomes a CSI-reporting unicast user with its
        own SNR, the group's arrival rate and message size.
        """
        ch = self.channel
        snrs = list(ch.unicast_snr_db)
        lam = list(self.unicast_lambda)
        bits = list(self.unicast_bits)
        for g, members in enumerate(ch.group_snr_db):
            snrs += list(members)
            lam += [self.multicast_lambda[g]] * len(members)
            bits += [self.multicast_bits[g]] * len(members)
        return self.replace(
            channel=ch.replace(unicast_snr_db=snrs, group_snr_db=()),
            unicast_lambda=tuple(lam),
            unicast_bits=tuple(bits),
            multicast_lambda=(),
            multicast_bits=(),
            cover=None,
            policy=POLICY_UNICAST_ONLY,
        )

    def as_kwargs(self):
        return dict(
            channel=self.channel,
            power=self.power,
            unicast_lambda=self.unicast_lambda,
            unicast_bits=self.unicast_bits,
            multicast_lambda=self.multicast_lambda,
            multicast_bits=self.multicast_bits,
            cover=self.cover,
            policy=self.policy,
            slots=self.slots,
            warmup=self.warmup,
            seed=self.seed,
            epsilon=self.epsilon,
            arrival_mode=self.arrival_mode,
            check_invariants=self.check_invariants,
            lyapunov_every=self.lyapunov_every,
            partition_warmup_sessions=self.partition_warmup_sessions,
            stability_min_slots=self.stability_min_slots,
            trace_path=self.trace_path,
            decision_log_path=self.decision_log_path,
        )

    def as_dict(self):
        d = self.as_kwargs()
        d["channel"] = self.channel.as_dict()
        d["power"] = self.power.as_dict()
        return d
