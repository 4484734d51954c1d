r"""
Reference values of rateless code lengths.

The exact oracles work on lattice MI distributions: every member's
accumulated MI in units of the lattice step is a state of an absorbing
Markov chain, the expected code length is the mean first passage time into
"all members decoded",

            0                           x absorbing
    m[x] =
            1 + \sum_y p_xy m[y]        otherwise

solved as a sparse linear system. The Monte-Carlo oracles sample continuous
MI paths directly.
"""
import itertools
import math
from fractions import Fraction

import numpy as np
from scipy.sparse import coo_matrix, identity
from scipy.sparse.linalg import spsolve

from ratelesscast.sim_logger import sim_logger
from ratelesscast.channel import mi_from_gain

MAX_STATES = 10 ** 6
MC_CODES = 10 ** 5

_logger = sim_logger("ratelesscast.region.oracles")


class StateSpaceOverflowError(ValueError):
    pass


def _member_pmfs(mi_pmf, member_count):
    if isinstance(mi_pmf, dict):
        return [mi_pmf] * int(member_count)
    return list(mi_pmf)


def _lattice_step(values):
    """Largest step that makes every MI value a whole multiple of it."""
    fracs = [Fraction(v).limit_denominator(10 ** 6) for v in values if v > 0]
    if not fracs:
        raise ValueError("MI distribution has no positive value, no code ever decodes")
    den = 1
    for f in fracs:
        den = den * f.denominator // math.gcd(den, f.denominator)
    num = 0
    for f in fracs:
        num = math.gcd(num, f.numerator * (den // f.denominator))
    return num / float(den)


def _units(pmf, step):
    return [(int(round(v / step)), float(p)) for v, p in pmf.items() if p > 0]


class _JointChain(object):
    """
    Product chain of independent members, member j decoded once its state
    reaches ``caps[j]``. Decoded members stay put.
    """

    def __init__(self, unit_pmfs, caps, max_states=MAX_STATES):
        self.caps = np.asarray(caps, dtype=int)
        self.dims = tuple(int(c) + 1 for c in caps)
        self.size = int(np.prod(self.dims, dtype=float))
        if self.size > max_states:
            raise StateSpaceOverflowError(
                "Joint chain needs {} states, more than {}".format(self.size, max_states)
            )
        self.states = np.indices(self.dims).reshape(len(self.dims), -1).T
        rows, cols, data = [], [], []
        idx = np.arange(self.size)
        for combo in itertools.product(*unit_pmfs):
            inc = np.array([c[0] for c in combo])
            prob = float(np.prod([c[1] for c in combo]))
            nxt = np.where(self.states < self.caps, np.minimum(self.states + inc, self.caps), self.caps)
            rows.append(idx)
            cols.append(np.ravel_multi_index(tuple(nxt.T), self.dims))
            data.append(np.full(self.size, prob))
        self.P = coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(self.size, self.size)
        ).tocsr()

    def solve(self, absorbing, terminal_reward=None):
        """
        Expected time to absorption (``terminal_reward`` None) or expected
        reward collected on entering the absorbing set, from the all-zero state.
        """
        transient = np.flatnonzero(~absorbing)
        if transient.size == 0:
            return 0.0 if terminal_reward is None else float(terminal_reward[0])
        Q = self.P[transient][:, transient]
        A = (identity(transient.size, format="csr") - Q).tocsc()
        if terminal_reward is None:
            b = np.ones(transient.size)
        else:
            b = self.P[transient][:, np.flatnonzero(absorbing)] @ terminal_reward[absorbing]
        x = spsolve(A, b)
        start = np.searchsorted(transient, 0)
        return float(np.atleast_1d(x)[start])


def lbar_oracle_exact(mi_pmf, message_bits, member_count=1, epsilon=0.0, max_states=MAX_STATES):
    """
    Exact mean code length of a multicast code: expected number of scheduled
    slots until every member's accumulated MI reaches M (1 + epsilon).
    :param mi_pmf: {MI bits per slot: probability}, or one such dict per member
    :param member_count: number of i.i.d. members when ``mi_pmf`` is a single dict
    :raises StateSpaceOverflowError: more than ``max_states`` joint states
    """
    pmfs = _member_pmfs(mi_pmf, member_count)
    step = _lattice_step([v for pmf in pmfs for v in pmf])
    threshold = message_bits * (1.0 + epsilon)
    cap = int(math.ceil(threshold / step - 1e-9))
    chain = _JointChain([_units(p, step) for p in pmfs], [cap] * len(pmfs), max_states)
    absorbing = np.all(chain.states >= chain.caps, axis=1)
    ret = chain.solve(absorbing)
    _logger.debug("lbar oracle: %s members, lattice step %s, %s states -> %s", len(pmfs), step, chain.size, ret)
    return ret


def eta_oracle_exact(covered_pmfs, straggler_pmf, message_bits, epsilon=0.0, max_states=MAX_STATES):
    """
    Exact eta of one straggler: E{min(R at session end / (1 + epsilon), M)} / M,
    where the session ends once every covered member decoded and the straggler
    stops listening after it decoded itself.
    """
    covered = list(covered_pmfs)
    step = _lattice_step([v for pmf in covered + [straggler_pmf] for v in pmf])
    threshold = message_bits * (1.0 + epsilon)
    cap = int(math.ceil(threshold / step - 1e-9))
    pmfs = [_units(p, step) for p in covered] + [_units(straggler_pmf, step)]
    chain = _JointChain(pmfs, [cap] * len(pmfs), max_states)
    absorbing = np.all(chain.states[:, :-1] >= cap, axis=1)
    s = chain.states[:, -1]
    reward = np.where(s >= cap, message_bits, np.minimum(s * step / (1.0 + epsilon), message_bits))
    return chain.solve(absorbing, reward.astype(float)) / float(message_bits)


def mi_sampler(channel, rx, P):
    """``sampler(rng, shape)`` of I(h, P) K of receiver ``rx`` for the Monte-Carlo oracles."""
    cfg = channel.config

    def sampler(rng, shape):
        return mi_from_gain(channel.sample_gains(rng, rx, shape), P, cfg.i_max) * cfg.symbols_per_slot

    return sampler


def _first_passage(sampler, threshold, codes, rng):
    mean = float(np.mean(sampler(rng, 4096)))
    if mean <= 0:
        raise ValueError("Receiver collects no MI, no code ever decodes")
    horizon = int(math.ceil(2.0 * threshold / mean)) + 8
    out = np.zeros(codes, dtype=int)
    acc = np.zeros(codes)
    todo = np.arange(codes)
    offset = 0
    while todo.size:
        cum = acc[todo][:, None] + np.cumsum(sampler(rng, (todo.size, horizon)), axis=1)
        hit = cum >= threshold
        done = hit.any(axis=1)
        out[todo[done]] = offset + np.argmax(hit[done], axis=1) + 1
        acc[todo[~done]] = cum[~done, -1]
        todo = todo[~done]
        offset += horizon
    return out


def simulate_code_lengths(samplers, threshold, codes, rng):
    """Code lengths of ``codes`` independent messages, shape (codes, members)."""
    return np.column_stack([_first_passage(s, threshold, codes, rng) for s in samplers])


def _mean_ci(x):
    return float(np.mean(x)), float(1.96 * np.std(x, ddof=1) / np.sqrt(len(x))) if len(x) > 1 else 0.0


def lbar_monte_carlo(samplers, message_bits, rng, codes=MC_CODES, epsilon=0.0):
    """
    Monte-Carlo mean code length over ``codes`` messages.
    :param samplers: one ``mi_sampler`` per member whose ACK ends the session
    :return: (mean, 95% confidence half width)
    """
    lengths = simulate_code_lengths(samplers, message_bits * (1.0 + epsilon), codes, rng)
    return _mean_ci(lengths.max(axis=1))


def eta_monte_carlo(covered_samplers, straggler_sampler, message_bits, rng, codes=MC_CODES, epsilon=0.0):
    """:return: (eta, 95% confidence half width) of one straggler"""
    threshold = message_bits * (1.0 + epsilon)
    tau = simulate_code_lengths(covered_samplers, threshold, codes, rng).max(axis=1)
    cum = np.cumsum(straggler_sampler(rng, (codes, int(tau.max()))), axis=1)
    collected = cum[np.arange(codes), tau - 1]
    r_star = np.minimum(collected / (1.0 + epsilon), message_bits)
    return _mean_ci(r_star / message_bits)
