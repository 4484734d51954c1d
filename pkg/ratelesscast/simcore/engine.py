import csv
import os
from collections import Counter

import numpy as np

from ratelesscast.sim_logger import sim_logger
from ratelesscast.util import makedirs
from ratelesscast.util.log import logtime
from ratelesscast.channel import (
    Channel,
    ExpectationTable,
    FixedRateCache,
    mi_from_gain,
    BLOCK_SLOTS,
    MODE_IID,
    MODE_AR1,
)
from ratelesscast.rateless import (
    UnicastReception,
    MulticastReception,
    step_unicast,
    step_multicast,
    mean_code_length,
    export_lengths,
    NoCompletedCodesError,
)
from ratelesscast.queueing import (
    DataQueue,
    PowerQueue,
    draw_arrivals,
    step_data_queue,
    step_power_queue,
    average_power_bound,
)
from ratelesscast.scheduler import (
    SchedulerSnapshot,
    KIND_UNICAST,
    KIND_MULTICAST,
    KIND_REPAIR,
    POLICY_FIXED_RATE,
    POLICY_UNICAST_ONLY,
    POLICY_NC_RC_COMBINED,
    get_policy,
    multicast_rate,
)
from ratelesscast.repair import (
    RepairFlow,
    estimate_partition,
    end_of_session_settlement,
    step_repair_flow,
    eta_estimate,
    export_settlements,
)

from . import invariants
from .metrics import (
    RunMetrics,
    classify_stability,
    lyapunov_sample,
    TraceTooShortError,
    VERDICT_INCONCLUSIVE,
)

# slack of the realized MI against a fixed code rate
RATE_TOL = 1e-12

DECISION_LOG_COLUMNS = ("slot", "action_index", "flow", "power", "metric")


def _csv_writer(path, header):
    makedirs(path, parent=True)
    f = open(path, "w", newline="")
    writer = csv.writer(f, lineterminator="\n")
    writer.writerow(header)
    return f, writer


class Engine(object):
    """
    Slot loop of one replication. Every slot runs in this order:
      1. the channel of the slot is drawn, the transmitter only sees the reports
      2. the policy decides from queues, Z, reports and code-length histories
      3. the scheduled flow collects the MI of the realized channel, ACKs are immediate
      4. data queues (with this slot's arrivals) and Z are updated
    The engine owns its rng, identical configs give identical results.
    """

    def __init__(self, config):
        self._logger = sim_logger("ratelesscast.simcore.engine")
        if config.policy == POLICY_UNICAST_ONLY and config.channel.num_groups > 0:
            config = config.unicast_only()
        self.config = config
        ch = config.channel
        self.rng = np.random.default_rng(config.seed)
        self.channel = Channel(ch)
        self.power_set = config.power
        levels = sorted(set(self.power_set.unicast_levels) | {self.power_set.p_av})
        self.table = ExpectationTable(ch, levels)
        lvl = [self.table.level_index(P) for P in self.power_set.unicast_levels]
        self.K = ch.symbols_per_slot
        self.i_max = ch.i_max
        self.i_max_k = ch.i_max_k
        self._expected = self.table.expected[:, :, lvl] * self.K
        self.policy = get_policy(config.policy, self.power_set, self.i_max_k, config.epsilon)
        self.fixed_rate = config.policy == POLICY_FIXED_RATE
        self.fixed_cache = None
        if self.fixed_rate:
            self._goodput = self.table.goodput[:, :, lvl]
            self._rate = self.table.fixed_rate[:, :, lvl]
            # Rayleigh reports carry more than their bin, the code rate follows the report itself
            if ch.mode in (MODE_IID, MODE_AR1) and ch.num_unicast:
                self.fixed_cache = FixedRateCache(ch, self.power_set.unicast_levels)
        self.combined = config.policy == POLICY_NC_RC_COMBINED and any(
            c < J for c, J in zip(config.covers(), ch.group_sizes)
        )

        self.U, self.G = ch.num_unicast, ch.num_groups
        eps = config.epsilon
        self.unicast = [UnicastReception(M, eps) for M in config.unicast_bits]
        self.multicast = [
            MulticastReception(M, J, eps) for M, J in zip(config.multicast_bits, ch.group_sizes)
        ]
        self.members = [np.asarray(ch.group_members(g)) for g in range(self.G)]
        self.queues = [DataQueue(l, M) for l, M in zip(config.unicast_lambda, config.unicast_bits)]
        self.queues += [DataQueue(l, M) for l, M in zip(config.multicast_lambda, config.multicast_bits)]
        self.flow_names = ["u{}".format(u) for u in range(self.U)] + ["g{}".format(g) for g in range(self.G)]
        self.z = PowerQueue(self.power_set.p_av)
        self.partitions = []
        self.repair = []
        self._repair_by_group = [[] for _ in range(self.G)]
        self._repair_rx = np.zeros(0, dtype=int)
        self._M_u = np.asarray(config.unicast_bits)
        self._M_g = np.asarray(config.multicast_bits)
        self._lam = config.lambdas
        self._u_idx = np.arange(self.U)
        self._snap = self._new_snapshot()

    # ~ decision input

    def _new_snapshot(self):
        """Snapshot with the constant parts set, ``snapshot`` refreshes the rest every slot."""
        V = len(self.repair)
        return SchedulerSnapshot(
            Q_u=np.zeros(self.U),
            M_u=self._M_u,
            Q_g=np.zeros(self.G),
            M_g=self._M_g,
            group_goodput=self.table.group_goodput,
            group_rate=self.table.group_rate,
            Q_v=np.zeros(V),
            M_v=np.zeros(V),
        )

    def snapshot(self, bins, hhat):
        """
        SchedulerSnapshot of the current slot, refreshed in place.
        :param bins: CSI bin of every receiver
        :param hhat: report of every receiver, read by fixed-rate codes only
        """
        s = self._snap
        U, G = self.U, self.G
        Q = np.array([q.Q for q in self.queues])
        s.Z = self.z.Z
        s.Q_u, s.Q_g, s.Q_v = Q[:U], Q[U:U + G], Q[U + G:]
        if U:
            if self.fixed_cache is not None:
                s.unicast_rate, s.unicast_goodput = self.fixed_cache.lookup(hhat[:U], self._u_idx)
            elif self.fixed_rate:
                ub = bins[:U]
                s.unicast_rate, s.unicast_goodput = self._rate[self._u_idx, ub], self._goodput[self._u_idx, ub]
            else:
                s.unicast_expected = self._expected[self._u_idx, bins[:U]]
        if G:
            s.n_g = np.array([rec.n for rec in self.multicast])
            s.sum_lengths = np.array([rec.Upsilon for rec in self.multicast], dtype=float)
        if self.repair:
            rx = self._repair_rx
            s.M_v = np.array([f.current_residual for f in self.repair])
            s.repair_expected = self._expected[rx, bins[rx]]
        return s

    # ~ combined delivery

    def _activate_repair(self, t):
        cfg = self.config
        for g, rec in enumerate(self.multicast):
            cover = cfg.covers()[g]
            spec = estimate_partition(rec.per_member_lengths, cover, rec.M, group=g)
            self.partitions.append(spec)
            rec.set_tracked(spec.covered)
            Q_g = self.queues[self.U + g].Q
            for j in spec.stragglers:
                flow = RepairFlow(
                    len(self.repair), g, j, int(self.members[g][j]), rec.M, cfg.multicast_lambda[g],
                    Q=Q_g, epsilon=cfg.epsilon,
                )
                self.repair.append(flow)
                self._repair_by_group[g].append(flow)
                self.queues.append(flow.queue)
                self.flow_names.append("v{}:{}".format(g, j))
        self._repair_rx = np.asarray([f.receiver for f in self.repair], dtype=int)
        self.channel.set_repair_members(self._repair_rx)
        self._snap = self._new_snapshot()
        self._logger.info(
            "Slot %s: combined delivery active, %s repair flows, %s CSI states",
            t, len(self.repair), self.channel.num_states,
        )

    # ~ main loop

    @logtime()
    def run(self):
        cfg = self.config
        rng = self.rng
        T, W = cfg.slots, cfg.warmup
        U, G = self.U, self.G
        check = cfg.check_invariants
        decide = self.policy.decide

        B = Counter()
        state_counts = Counter()
        total_trace = np.zeros(T - W)
        sum_q = np.zeros(len(self.queues))
        D0 = {}
        sum_power = 0.0
        lyapunov = []
        activated = not self.combined
        files = []
        trace_writer, decision_writer = None, None

        self._logger.info(
            "Run policy=%s seed=%s slots=%s warmup=%s flows=%s", cfg.policy, cfg.seed, T, W, self.flow_names
        )
        block, prev_h = None, None
        try:
            if cfg.trace_path:
                f, trace_writer = _csv_writer(cfg.trace_path, ("slot", "flow", "Q", "Z"))
                files.append(f)
            if cfg.decision_log_path:
                f, decision_writer = _csv_writer(cfg.decision_log_path, DECISION_LOG_COLUMNS)
                files.append(f)

            for t in range(T):
                j = t % BLOCK_SLOTS
                if j == 0:
                    n = min(BLOCK_SLOTS, T - t)
                    block = self.channel.sample_block(rng, n, prev_h=prev_h)
                    prev_h = block.h[-1]
                    gains = np.abs(block.h) ** 2
                    arrivals = draw_arrivals(rng, self._lam, cfg.arrival_mode, size=(n, U + G))
                if t == W:
                    for name, q in zip(self.flow_names, self.queues):
                        D0[name] = q.D

                i = int(block.state_index[j])
                g_t = gains[j]
                a_t = arrivals[j]

                snap = self.snapshot(block.bins[j], block.hhat[j])
                action, code_rate = decide(snap)
                if check:
                    invariants.check_scale_invariance(t, decide, snap, action)
                B[(action.m, i)] += 1
                state_counts[i] += 1
                P = 0.0 if action.idle else action.power
                if decision_writer is not None:
                    flow = "" if action.flow is None else self.flow_names[action.flow]
                    decision_writer.writerow([t, action.m, flow, P, action.metric])

                served = {}
                scheduled_repair, repair_mi = None, 0.0
                if not action.idle:
                    if action.kind == KIND_UNICAST:
                        u = action.index
                        mi = mi_from_gain(g_t[u], P, self.i_max) * self.K
                        if self.fixed_rate:
                            if code_rate > 0 and mi >= code_rate - RATE_TOL:
                                served[u] = code_rate
                        else:
                            _, acked = step_unicast(self.unicast[u], True, mi)
                            if acked:
                                served[u] = self._M_u[u]
                                if check:
                                    invariants.check_decode_total(t, self.unicast[u], self.i_max_k)
                    elif action.kind == KIND_MULTICAST:
                        g = action.index
                        mi = mi_from_gain(g_t[self.members[g]], P, self.i_max) * self.K
                        if self.fixed_rate:
                            # every member keeps the packet iff it decodes it, the message is rateless on top
                            mi = np.where(mi >= code_rate - RATE_TOL, code_rate, 0.0)
                        rec = self.multicast[g]
                        _, acked = step_multicast(rec, True, mi)
                        if acked:
                            served[U + g] = self._M_g[g]
                            if check:
                                invariants.check_code_length(t, rec)
                            if self._repair_by_group[g]:
                                departure = min(self.queues[U + g].Q, rec.M)
                                settled = end_of_session_settlement(
                                    rec, self.partitions[g], self._repair_by_group[g], departure
                                )
                                if check:
                                    invariants.check_settlement(t, rec.M, settled)
                    elif action.kind == KIND_REPAIR:
                        scheduled_repair = action.index
                        flow = self.repair[scheduled_repair]
                        repair_mi = mi_from_gain(g_t[flow.receiver], P, self.i_max) * self.K

                for idx in range(U + G):
                    bits = served.get(idx)
                    step_data_queue(self.queues[idx], bits is not None, bits or 0.0, a_t[idx])
                for flow in self.repair:
                    mine = flow.index == scheduled_repair
                    step_repair_flow(flow, mine, repair_mi if mine else 0.0, a_t[U + flow.group])

                z_before = self.z.Z
                step_power_queue(self.z, P)

                if not activated and all(
                    rec.completed >= cfg.partition_warmup_sessions for rec in self.multicast
                ):
                    self._activate_repair(t)
                    activated = True
                    block.state_index = self.channel.state_index(block.bins)
                    sum_q = np.concatenate((sum_q, np.zeros(len(self.queues) - len(sum_q))))
                    for name, q in zip(self.flow_names, self.queues):
                        D0.setdefault(name, q.D if t >= W else 0.0)

                if check:
                    self._logger.trace(
                        "t=%s i=%s m=%s P=%s Q=%s Z=%.4g", t, i, action.m, P,
                        [round(q.Q, 3) for q in self.queues], self.z.Z,
                    )
                    invariants.check_pre_decode(t, self.unicast, self.multicast, self.repair)
                    invariants.check_queues(t, self.queues)
                    invariants.check_power_queue(t, self.z, z_before, P)
                    invariants.check_repair(t, self.repair)

                Q = np.array([q.Q for q in self.queues])
                if t % cfg.lyapunov_every == 0:
                    lyapunov.append(lyapunov_sample(Q, self.z.Z))
                if trace_writer is not None:
                    for name, q in zip(self.flow_names, Q):
                        trace_writer.writerow([t, name, float(q), self.z.Z])
                if t >= W:
                    sum_q += Q
                    total_trace[t - W] = Q.sum()
                    sum_power += P
        finally:
            for f in files:
                f.close()

        return self._metrics(B, state_counts, total_trace, sum_q, D0, sum_power, lyapunov)

    def _metrics(self, B, state_counts, total_trace, sum_q, D0, sum_power, lyapunov):
        cfg = self.config
        span = float(cfg.slots - cfg.warmup)
        invariants.require(
            self.z.W / self.z.slots <= average_power_bound(self.z) + invariants.TOL,
            cfg.slots, "average power %s above P_av + Z(T)/T = %s", self.z.W / self.z.slots,
            average_power_bound(self.z),
        )
        avg_queue = sum_q / span
        throughput = [(q.D - D0.get(name, 0.0)) / span for name, q in zip(self.flow_names, self.queues)]

        lam = self._lam
        quantum = float(np.mean(lam)) if len(lam) and np.any(lam > 0) else float(np.mean(cfg.message_bits))
        try:
            verdict = classify_stability(total_trace, quantum, cfg.stability_min_slots)
        except TraceTooShortError as e:
            self._logger.warning("No stability verdict: %s", e)
            verdict = VERDICT_INCONCLUSIVE

        code_lengths, rates = [], []
        for rec in self.multicast:
            try:
                code_lengths.append(mean_code_length(rec.length_history))
            except NoCompletedCodesError:
                code_lengths.append(float("nan"))
            rates.append(multicast_rate(rec.n, rec.Upsilon, rec.M, self.i_max_k))
        eta = {(f.group, f.member): eta_estimate(f) for f in self.repair}

        metrics = RunMetrics(
            policy=cfg.policy,
            seed=cfg.seed,
            slots=cfg.slots,
            warmup=cfg.warmup,
            flow_names=self.flow_names,
            avg_queue=avg_queue,
            throughput=throughput,
            avg_power=sum_power / span,
            final_Z=self.z.Z,
            lyapunov=lyapunov,
            B=B,
            state_counts=state_counts,
            verdict=verdict,
            mean_code_length=code_lengths,
            multicast_rate=rates,
            eta=eta,
            partitions=[p.as_dict() for p in self.partitions],
        )
        self._logger.info(
            "Done policy=%s seed=%s: avg queue %.2f bits, throughput %.3f bits/slot, power %.3f W, %s",
            cfg.policy, cfg.seed, metrics.avg_queue_total, metrics.throughput_total, metrics.avg_power, verdict,
        )
        return metrics

    def export_code_lengths(self, directory, prefix):
        """
        Code length CSV of every rateless flow (``<prefix>.lengths.<flow>.csv``)
        and, under combined delivery, the settlements of the repair flows
        (``<prefix>.settlements.csv``).
        :return: list of written paths
        """
        paths = []
        if not self.fixed_rate:
            for u, rec in enumerate(self.unicast):
                paths.append(export_lengths(rec, os.path.join(directory, "{}.lengths.u{}.csv".format(prefix, u))))
        for g, rec in enumerate(self.multicast):
            paths.append(export_lengths(rec, os.path.join(directory, "{}.lengths.g{}.csv".format(prefix, g))))
        if self.repair:
            paths.append(export_settlements(self.repair, os.path.join(directory, "{}.settlements.csv".format(prefix))))
        return paths


def run(config):
    """
    Simulates ``config`` and returns its RunMetrics.
    :type config: ratelesscast.simcore.SimConfig
    :raises InvariantViolation: when invariant checking is on and a check fails
    """
    return Engine(config).run()
