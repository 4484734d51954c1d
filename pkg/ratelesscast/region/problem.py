import json

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from ratelesscast.sim_logger import sim_logger
from ratelesscast.util import makedirs
from ratelesscast.util.log import logtime, json_serialisor
from ratelesscast.channel import Channel, ExpectationTable, MODE_STATIC, MODE_DISCRETE
from ratelesscast.scheduler import ActionSpace, POLICY_NC_RC_COMBINED, rate_loss_factor
from ratelesscast.repair import PartitionSpec

from .oracles import (
    StateSpaceOverflowError,
    lbar_oracle_exact,
    eta_oracle_exact,
    lbar_monte_carlo,
    eta_monte_carlo,
    mi_sampler,
    MC_CODES,
)

DEFAULT_E_CAP = 4096
BINDING_TOL = 1e-9

_logger = sim_logger("ratelesscast.region")


class AlphabetTooLargeError(ValueError):
    pass


class RegionSolverError(RuntimeError):
    pass


class RegionProblem(object):
    """
    Time-sharing LP of the throughput region. Row r of ``rate`` holds the
    bits/slot flow r gets per unit of alpha[m, i]; a direction lambda_dir is
    inside the region scaled by t when for every row

        t demand[r] <= sum_{m,i} pi_i alpha[m, i] rate[r, m, i]

    together with sum_{m,i} pi_i alpha[m, i] power[m] <= p_av and
    sum_m alpha[m, i] = 1 for every state i.
    """

    def __init__(self, pi, rate, demand, power, p_av, row_names, direction, info=None):
        self.pi = np.asarray(pi, dtype=float)
        self.rate = np.asarray(rate, dtype=float)
        self.demand = np.asarray(demand, dtype=float)
        self.power = np.asarray(power, dtype=float)
        self.p_av = float(p_av)
        self.row_names = list(row_names)
        self.direction = np.asarray(direction, dtype=float)
        self.info = {} if info is None else dict(info)
        if self.rate.ndim != 3 or self.rate.shape[1:] != (len(self.power), len(self.pi)):
            raise ValueError("rate must be (rows, F, E) = (*, {}, {})".format(len(self.power), len(self.pi)))
        if abs(self.pi.sum() - 1.0) > 1e-9 or np.any(self.pi < 0):
            raise ValueError("pi must be a probability vector")
        if np.any(self.rate < 0):
            raise ValueError("rates must be nonnegative")

    @property
    def F(self):
        return len(self.power)

    @property
    def E(self):
        return len(self.pi)

    def scaled(self, c):
        return RegionProblem(self.pi, self.rate * c, self.demand, self.power, self.p_av, self.row_names,
                             self.direction, self.info)


class RegionSolution(object):
    def __init__(self, problem, lambda_star, alpha, binding, status="optimal"):
        self.problem = problem
        self.lambda_star = float(lambda_star)
        self.alpha = np.asarray(alpha, dtype=float)
        self.binding = list(binding)
        self.status = status

    def row_rates(self):
        """Bits/slot every row gets under ``alpha``."""
        return np.einsum("rme,me,e->r", self.problem.rate, self.alpha, self.problem.pi)

    def average_power(self):
        return float(np.einsum("me,e,m->", self.alpha, self.problem.pi, self.problem.power))

    def action_shares(self):
        """Long-run fraction of slots spent on every action."""
        return self.alpha @ self.problem.pi

    def as_dict(self):
        return dict(
            direction=self.problem.direction,
            lambda_star=self.lambda_star,
            status=self.status,
            alpha_summary=dict(
                action_shares=self.action_shares(),
                row_rates=dict(zip(self.problem.row_names, self.row_rates())),
                average_power=self.average_power(),
            ),
            binding=self.binding,
            info=self.problem.info,
        )


def _partitions_by_ergodic_rate(sim_config, table):
    """Covered sets ranked by each member's ergodic MI at P_av (ties to the lower id)."""
    ch = sim_config.channel
    ret = []
    for g, cover in enumerate(sim_config.covers()):
        rx = ch.group_members(g)
        throughput = table.ergodic_pav[rx] * ch.symbols_per_slot
        order = sorted(range(len(rx)), key=lambda j: (-throughput[j], j))
        ret.append(PartitionSpec(g, cover, order[:cover], throughput))
    return ret


def _atomic(channel_config):
    return channel_config.mode in (MODE_STATIC, MODE_DISCRETE)


def default_lbar(sim_config, table, partitions=None, rng=None, codes=MC_CODES):
    """
    Mean code length of every group, over the covered members when
    ``partitions`` are given: exact on lattice MI, Monte-Carlo otherwise.
    """
    ch = sim_config.channel
    channel = Channel(ch)
    p_av = sim_config.power.p_av
    rng = np.random.default_rng(sim_config.seed) if rng is None else rng
    ret = []
    for g in range(ch.num_groups):
        members = list(range(ch.group_sizes[g])) if partitions is None else list(partitions[g].covered)
        rx = [ch.member_index(g, j) for j in members]
        M = sim_config.multicast_bits[g]
        value = None
        if _atomic(ch):
            try:
                value = lbar_oracle_exact([table.member_mi_pmf(r, p_av) for r in rx], M, epsilon=sim_config.epsilon)
            except StateSpaceOverflowError as e:
                _logger.info("Group %s: %s, falling back to Monte-Carlo", g, e)
        if value is None:
            value, ci = lbar_monte_carlo([mi_sampler(channel, r, p_av) for r in rx], M, rng, codes, sim_config.epsilon)
            _logger.debug("Group %s: Monte-Carlo L_bar %.4f +- %.4f", g, value, ci)
        ret.append(value)
    return ret


def default_eta(sim_config, table, partitions, rng=None, codes=MC_CODES):
    """eta of every straggler as {(group, member): eta}."""
    ch = sim_config.channel
    channel = Channel(ch)
    p_av = sim_config.power.p_av
    rng = np.random.default_rng(sim_config.seed + 1) if rng is None else rng
    ret = {}
    for spec in partitions:
        g = spec.group
        M = sim_config.multicast_bits[g]
        covered_rx = [ch.member_index(g, j) for j in spec.covered]
        for j in spec.stragglers:
            rx = ch.member_index(g, j)
            value = None
            if _atomic(ch):
                try:
                    value = eta_oracle_exact(
                        [table.member_mi_pmf(r, p_av) for r in covered_rx], table.member_mi_pmf(rx, p_av),
                        M, epsilon=sim_config.epsilon,
                    )
                except StateSpaceOverflowError as e:
                    _logger.info("Straggler %s of group %s: %s, falling back to Monte-Carlo", j, g, e)
            if value is None:
                value, _ = eta_monte_carlo(
                    [mi_sampler(channel, r, p_av) for r in covered_rx], mi_sampler(channel, rx, p_av),
                    M, rng, codes, sim_config.epsilon,
                )
            ret[(g, j)] = value
    return ret


@logtime()
def build_region(
    sim_config,
    combined=None,
    lbar=None,
    eta=None,
    partitions=None,
    direction=None,
    table=None,
    e_cap=DEFAULT_E_CAP,
    genie=False,
    rng=None,
    codes=MC_CODES,
):
    """
    Assembles the region LP of ``sim_config``.
    :param combined: add straggler rows of combined delivery, defaults to the config's policy
    :param lbar: mean code length per group (over the covered members when combined), computed if None
    :param eta: {(group, member): eta} of the stragglers, computed if None
    :param partitions: PartitionSpec per group, ranked by ergodic rate if None
    :param direction: nonnegative rate per flow (unicast then groups), all ones if None
    :param genie: infinite block-length codes, no rate-loss factor and groups at the weakest member's ergodic rate
    :raises AlphabetTooLargeError: more than ``e_cap`` joint CSI states
    :rtype: RegionProblem
    """
    ch = sim_config.channel
    ps = sim_config.power
    if combined is None:
        combined = sim_config.policy == POLICY_NC_RC_COMBINED and any(
            c < J for c, J in zip(sim_config.covers(), ch.group_sizes)
        )
    combined = bool(combined) and not genie
    if table is None:
        table = ExpectationTable(ch, sorted(set(ps.unicast_levels) | {ps.p_av}))
    if combined and partitions is None:
        partitions = _partitions_by_ergodic_rate(sim_config, table)
    stragglers = [(spec.group, j) for spec in partitions for j in spec.stragglers] if combined else []

    reporting = list(range(ch.num_unicast)) + [ch.member_index(g, j) for g, j in stragglers]
    E = ch.quant_bins ** len(reporting)
    if E > e_cap:
        raise AlphabetTooLargeError(
            "{} CSI reporting receivers with {} bins give {} states, above the cap of {}; "
            "use the simulated boundary search instead".format(len(reporting), ch.quant_bins, E, e_cap)
        )
    channel = Channel(ch, repair_members=[ch.member_index(g, j) for g, j in stragglers])
    pi = channel.state_distribution()
    bins = channel.state_bins(np.arange(E))

    U, G, V = ch.num_unicast, ch.num_groups, len(stragglers)
    space = ActionSpace(U, G, V, ps)
    F, O = space.F, space.O
    K = ch.symbols_per_slot
    lvl = [table.level_index(P) for P in ps.unicast_levels]
    eps = 0.0 if genie else sim_config.epsilon
    d = np.ones(U + G) if direction is None else np.asarray(direction, dtype=float)
    if len(d) != U + G or np.any(d < 0):
        raise ValueError("direction needs one nonnegative entry per flow ({})".format(U + G))

    if not genie and G and lbar is None:
        lbar = default_lbar(sim_config, table, partitions if combined else None, rng, codes)
    if combined and eta is None:
        eta = default_eta(sim_config, table, partitions, rng, codes)

    rows, demand, names = [], [], []

    def unicast_row(rx, pos, first_m, factor):
        r = np.zeros((F, E))
        exp = table.expected[rx][:, lvl] * K  # (bins, O)
        for k in range(O):
            r[first_m + k] = exp[bins[pos], k] * factor / (1.0 + eps) if reporting else exp[0, k] * factor
        return r

    for u in range(U):
        factor = 1.0 if genie else rate_loss_factor(sim_config.unicast_bits[u], ch.i_max_k)
        rows.append(unicast_row(u, u, space.unicast(u, 0), factor))
        demand.append(d[u])
        names.append("u{}".format(u))

    group_rate = []
    for g in range(G):
        if genie:
            rate = float(np.min(table.ergodic_pav[ch.group_members(g)])) * K
        else:
            rate = sim_config.multicast_bits[g] / float(lbar[g])
        group_rate.append(rate)
        r = np.zeros((F, E))
        r[space.multicast(g)] = rate
        rows.append(r)
        demand.append(d[U + g])
        names.append("g{}".format(g))

    for v, (g, j) in enumerate(stragglers):
        M_g = sim_config.multicast_bits[g]
        e = eta[(g, j)]
        residual = (1.0 - e) * M_g
        factor = rate_loss_factor(residual, ch.i_max_k) if residual > 0 else 0.0
        r = unicast_row(ch.member_index(g, j), U + v, space.repair(v, 0), factor)
        r[space.multicast(g)] = e * group_rate[g]
        rows.append(r)
        demand.append(d[U + g])
        names.append("v{}:{}".format(g, j))

    power = np.array([space.power(m) for m in range(F)])
    info = dict(
        genie=genie,
        combined=combined,
        E=E,
        F=F,
        lbar=None if genie else lbar,
        group_rate=group_rate,
        eta={"{}:{}".format(*k): v for k, v in (eta or {}).items()},
        partitions=[p.as_dict() for p in partitions] if combined else [],
    )
    _logger.debug("Region LP: %s rows, F=%s, E=%s, genie=%s, combined=%s", len(rows), F, E, genie, combined)
    return RegionProblem(pi, np.stack(rows) if rows else np.zeros((0, F, E)), demand, power, ps.p_av,
                         names, d, info)


def genie_problem(sim_config, direction=None, table=None, e_cap=DEFAULT_E_CAP):
    """Region LP of infinite block-length codes, the outer bound of the rateless region."""
    return build_region(sim_config, combined=False, direction=direction, table=table, e_cap=e_cap, genie=True)


@logtime()
def solve_boundary(problem):
    """
    max t such that t * direction is inside the region, as one LP over
    (alpha, t) solved with HiGHS.
    :type problem: RegionProblem
    :rtype: RegionSolution
    """
    F, E = problem.F, problem.E
    n = F * E + 1
    if not np.any(problem.demand > 0):
        raise RegionSolverError("The direction has no positive entry, the boundary is unbounded")

    pi = problem.pi
    rate_rows = -(problem.rate * pi[None, None, :]).reshape(len(problem.demand), F * E)
    A_rate = sparse.hstack([sparse.csr_matrix(rate_rows), sparse.csr_matrix(problem.demand[:, None])])
    power_row = np.append((problem.power[:, None] * pi[None, :]).ravel(), 0.0)
    A_ub = sparse.vstack([A_rate, sparse.csr_matrix(power_row[None, :])]).tocsr()
    b_ub = np.append(np.zeros(len(problem.demand)), problem.p_av)
    A_eq = sparse.hstack([sparse.kron(np.ones((1, F)), sparse.identity(E)), sparse.csr_matrix((E, 1))]).tocsr()
    b_eq = np.ones(E)
    c = np.zeros(n)
    c[-1] = -1.0

    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status == 2:
        _logger.warning("Region LP infeasible (power budget below every action), boundary is 0")
        return RegionSolution(problem, 0.0, np.full((F, E), 1.0 / F), ["power"], status="infeasible")
    if res.status != 0:
        raise RegionSolverError("Region LP failed: {}".format(res.message))

    x = res.x
    slack = b_ub - A_ub @ x
    binding = [name for name, s in zip(problem.row_names + ["power"], slack) if s < BINDING_TOL]
    solution = RegionSolution(problem, x[-1], x[:-1].reshape(F, E), binding)
    _logger.info("Region boundary lambda*=%.6f, binding %s", solution.lambda_star, binding)
    return solution


def write_report(solutions, path):
    """JSON region report, one object per solution (or a single object)."""
    makedirs(path, parent=True)
    if isinstance(solutions, RegionSolution):
        data = solutions.as_dict()
    elif isinstance(solutions, dict):
        data = {k: (v.as_dict() if isinstance(v, RegionSolution) else v) for k, v in solutions.items()}
    else:
        data = [s.as_dict() for s in solutions]
    with open(path, "w") as f:
        json.dump(data, f, indent=2, default=json_serialisor)
    return path
