import numpy as np
from scipy.signal import lfilter

from ratelesscast.sim_logger import sim_logger

from .definitions import *
from .config import ChannelConfig, ChannelConfigError, snr_db_to_variance
from .expectation import (
    mutual_information,
    mi_from_gain,
    conditional_expected_mi,
    best_fixed_rate,
    rate_grid,
    ExpectationTable,
    FixedRateCache,
)


class ChannelDraw(object):
    """
    True and imperfect channel gains of every receiver for one slot.
    ``h`` and ``hhat`` are flat over all receivers (unicast users first, then
    the multicast members group by group); multicast members do not report
    CSI, so only the entries of unicast users and repair receivers reach the
    transmitter.
    """

    __slots__ = ("config", "h", "hhat", "repair_members", "state_index")

    def __init__(self, config, h, hhat, repair_members=(), state_index=0):
        self.config = config
        self.h = h
        self.hhat = hhat
        self.repair_members = tuple(repair_members)
        self.state_index = int(state_index)

    @property
    def h_u(self):
        return self.h[: self.config.num_unicast]

    @property
    def hhat_u(self):
        return self.hhat[: self.config.num_unicast]

    @property
    def h_gj(self):
        return [self.h[self.config.group_members(g)] for g in range(self.config.num_groups)]


class ChannelBlock(object):
    """Consecutive slots drawn in one go: arrays of shape (slots, receivers)."""

    __slots__ = ("h", "hhat", "bins", "state_index")

    def __init__(self, h, hhat, bins, state_index):
        self.h = h
        self.hhat = hhat
        self.bins = bins
        self.state_index = state_index

    def __len__(self):
        return self.h.shape[0]

    def draw(self, t, config, repair_members=()):
        return ChannelDraw(
            config, self.h[t], self.hhat[t], repair_members, self.state_index[t]
        )


def _complex_normal(rng, shape, variance):
    """Circular-symmetric complex Gaussian with the given variance per receiver (last axis)."""
    z = rng.standard_normal(shape + (2,))
    return np.sqrt(variance / 2.0) * (z[..., 0] + 1j * z[..., 1])


class Channel(object):
    """
    Generates the fading process and its imperfect reports. The receivers
    that report CSI are the unicast users plus the active repair receivers;
    the joint bin of their reports is the CSI state index.
    All randomness comes from the ``rng`` handed to the sampling calls.
    """

    def __init__(self, config, repair_members=()):
        self._logger = sim_logger("ratelesscast.channel")
        self.config = config
        self.set_repair_members(repair_members)

    def set_repair_members(self, repair_members):
        """:param repair_members: flat receiver indices of the multicast members with a repair flow"""
        self.repair_members = tuple(int(r) for r in repair_members)
        self.reporting = tuple(range(self.config.num_unicast)) + self.repair_members
        self._dims = (self.config.quant_bins,) * len(self.reporting)
        self._logger.debug("CSI reporting receivers: %s, states: %s", self.reporting, self.num_states)

    @property
    def num_states(self):
        return int(self.config.quant_bins ** len(self.reporting))

    # ~ sampling

    def sample_slot(self, rng, prev_draw=None):
        """
        One slot of channel states.
        :param rng: numpy Generator owned by the caller
        :param prev_draw: the previous slot, used by the AR(1) mode (stationary start if None)
        :rtype: ChannelDraw
        """
        prev_h = None if prev_draw is None else prev_draw.h
        block = self.sample_block(rng, 1, prev_h=prev_h)
        return block.draw(0, self.config, self.repair_members)

    def sample_block(self, rng, n, prev_h=None):
        """
        ``n`` consecutive slots, see ``sample_slot``.
        :rtype: ChannelBlock
        """
        cfg = self.config
        shape = (n, cfg.num_receivers)
        var = cfg.variance
        if cfg.mode == MODE_STATIC:
            h = np.broadcast_to(np.sqrt(var).astype(complex), shape).copy()
            hhat = h.copy()
            bins = np.broadcast_to(self._rayleigh_bins(np.abs(hhat[:1])), shape).copy()
        elif cfg.mode == MODE_DISCRETE:
            u = rng.random(shape + (3,))
            cdf = np.cumsum(cfg.gain_probs)
            cdf[-1] = 1.0
            atom = np.searchsorted(cdf, u[..., 0], side="right")
            other = np.searchsorted(cdf, u[..., 1], side="right")
            report = np.where(u[..., 2] < cfg.rho, atom, other)
            levels = np.asarray(cfg.gain_levels)
            h = np.sqrt(var * levels[atom]).astype(complex)
            hhat = np.sqrt(var * levels[report]).astype(complex)
            bins = report
        else:
            if cfg.mode == MODE_AR1:
                if prev_h is None:
                    prev_h = _complex_normal(rng, (cfg.num_receivers,), var)
                a = np.sqrt(cfg.ar_coeff)
                w = _complex_normal(rng, shape, var)
                h, _ = lfilter([np.sqrt(1.0 - cfg.ar_coeff)], [1.0, -a], w, axis=0, zi=(a * prev_h)[None, :])
            else:
                h = _complex_normal(rng, shape, var)
            noise = _complex_normal(rng, shape, var)
            hhat = np.sqrt(cfg.rho) * h + np.sqrt(1.0 - cfg.rho) * noise
            if cfg.rho == 1.0:
                hhat = h.copy()
            bins = self._rayleigh_bins(np.abs(hhat))
        return ChannelBlock(h, hhat, bins, self.state_index(bins))

    # ~ CSI quantization

    def _rayleigh_bins(self, mag):
        """Equiprobable bins of a Rayleigh magnitude with E|hhat|^2 = variance."""
        B = self.config.quant_bins
        cdf = -np.expm1(-(mag ** 2) / self.config.variance)
        return np.minimum((cdf * B).astype(int), B - 1)

    def csi_bins(self, hhat):
        """Bin of every receiver's report, shape like ``hhat``."""
        cfg = self.config
        if cfg.mode == MODE_DISCRETE:
            levels = np.asarray(cfg.gain_levels)
            ratio = np.abs(hhat) ** 2 / cfg.variance
            return np.argmin(np.abs(ratio[..., None] - levels), axis=-1)
        return self._rayleigh_bins(np.abs(hhat))

    def state_index(self, bins):
        """Joint index of the reporting receivers' bins (first receiver most significant)."""
        bins = np.asarray(bins)
        if not self.reporting:
            return np.zeros(bins.shape[:-1], dtype=int)
        sel = bins[..., list(self.reporting)]
        return np.ravel_multi_index(tuple(np.moveaxis(sel, -1, 0)), self._dims)

    def quantize_csi(self, draw):
        """CSI state index of one slot."""
        return int(self.state_index(self.csi_bins(draw.hhat)))

    def state_bins(self, i):
        """
        Bins of the reporting receivers in joint state ``i``, one entry per
        receiver; ``i`` may be an array of states.
        """
        if not self.reporting:
            return ()
        return np.unravel_index(i, self._dims)

    def state_distribution(self):
        """Stationary probability of every joint CSI state."""
        cfg = self.config
        B = cfg.quant_bins
        marginals = []
        for rx in self.reporting:
            if cfg.mode == MODE_DISCRETE:
                marginals.append(np.asarray(cfg.gain_probs, dtype=float))
            elif cfg.mode == MODE_STATIC:
                m = np.zeros(B)
                m[int(self._rayleigh_bins(np.sqrt(cfg.variance[rx:rx + 1]))[0])] = 1.0
                marginals.append(m)
            else:
                marginals.append(np.full(B, 1.0 / B))
        pi = np.ones(1)
        for m in marginals:
            pi = np.multiply.outer(pi, m).ravel()
        return pi

    def sample_gains(self, rng, rx, size):
        """
        i.i.d. samples of |h|^2 of one receiver, used by Monte-Carlo code length oracles.
        """
        cfg = self.config
        var = cfg.variance[rx]
        if cfg.mode == MODE_STATIC:
            return np.full(size, var)
        if cfg.mode == MODE_DISCRETE:
            idx = rng.choice(len(cfg.gain_levels), size=size, p=cfg.gain_probs)
            return var * np.asarray(cfg.gain_levels)[idx]
        return rng.exponential(var, size=size)
