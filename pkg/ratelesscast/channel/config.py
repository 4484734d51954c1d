"""
Relates the parameters of the downlink channel.
Receivers are numbered flat: the unicast users first, then the members of
multicast group 0, group 1, ...
"""
import math

import numpy as np

from .definitions import (
    MODES,
    MODE_AR1,
    MODE_DISCRETE,
    DEFAULT_I_MAX,
    DEFAULT_SYMBOLS_PER_SLOT,
    DEFAULT_AR_COEFF,
    DEFAULT_QUANT_BINS,
)


class ChannelConfigError(ValueError):
    pass


def snr_db_to_variance(snr_db, p_av):
    """SNR = E{|h|^2} P_av, so the channel variance is the linear SNR over P_av."""
    if p_av <= 0:
        return 10.0 ** (snr_db / 10.0)
    return 10.0 ** (snr_db / 10.0) / p_av


class ChannelConfig(object):
    def __init__(
        self,
        unicast_snr_db=(),
        group_snr_db=(),
        rho=1.0,
        i_max=DEFAULT_I_MAX,
        symbols_per_slot=DEFAULT_SYMBOLS_PER_SLOT,
        mode="iid_rayleigh",
        ar_coeff=DEFAULT_AR_COEFF,
        quant_bins=DEFAULT_QUANT_BINS,
        p_av=1.0,
        gain_levels=None,
        gain_probs=None,
    ):
        """
        :param unicast_snr_db: mean SNR (dB) of every unicast user
        :param group_snr_db: one list of member SNRs (dB) per multicast group
        :param rho: accuracy of the imperfect CSI, 0 (no information) .. 1 (perfect)
        :param i_max: cap of the mutual information in bits/symbol
        :param symbols_per_slot: K
        :param mode: one of ``definitions.MODES``
        :param ar_coeff: AR(1) coefficient of the true channel (ar1 mode only)
        :param quant_bins: magnitude bins per CSI-reporting receiver
        :param p_av: average power budget, fixes the channel variance from the SNR
        :param gain_levels: discrete mode only, |h|^2 atoms relative to the variance
        :param gain_probs: discrete mode only, probabilities of the atoms
        """
        self.unicast_snr_db = tuple(float(s) for s in unicast_snr_db)
        self.group_snr_db = tuple(tuple(float(s) for s in g) for g in group_snr_db)
        self.rho = float(rho)
        self.i_max = float(i_max)
        self.symbols_per_slot = int(symbols_per_slot)
        self.mode = mode
        self.ar_coeff = float(ar_coeff)
        self.quant_bins = int(quant_bins)
        self.p_av = float(p_av)
        self.gain_levels = None if gain_levels is None else tuple(float(g) for g in gain_levels)
        self.gain_probs = None if gain_probs is None else tuple(float(p) for p in gain_probs)
        self._validate()

        self.num_unicast = len(self.unicast_snr_db)
        self.group_sizes = tuple(len(g) for g in self.group_snr_db)
        self.num_groups = len(self.group_sizes)
        self.num_receivers = self.num_unicast + sum(self.group_sizes)
        snrs = list(self.unicast_snr_db) + [s for g in self.group_snr_db for s in g]
        self.variance = np.array([snr_db_to_variance(s, self.p_av) for s in snrs])
        offsets = np.cumsum((self.num_unicast,) + self.group_sizes)
        self._group_offsets = tuple(int(o) for o in offsets[:-1])

    def _validate(self):
        if self.mode not in MODES:
            raise ChannelConfigError("Unknown channel mode {}, expected one of {}".format(self.mode, MODES))
        if not 0.0 <= self.rho <= 1.0:
            raise ChannelConfigError("rho must be in [0, 1], got {}".format(self.rho))
        if not self.i_max > 0:
            raise ChannelConfigError("i_max must be positive, got {}".format(self.i_max))
        if self.symbols_per_slot < 1:
            raise ChannelConfigError("symbols_per_slot must be >= 1")
        if self.quant_bins < 1:
            raise ChannelConfigError("quant_bins must be >= 1")
        if self.mode == MODE_AR1 and not 0.0 <= self.ar_coeff < 1.0:
            raise ChannelConfigError("ar_coeff must be in [0, 1), got {}".format(self.ar_coeff))
        for s in self.unicast_snr_db + tuple(s for g in self.group_snr_db for s in g):
            if not math.isfinite(s):
                raise ChannelConfigError("SNR values must be finite")
        if any(len(g) == 0 for g in self.group_snr_db):
            raise ChannelConfigError("Multicast groups need at least one member")
        if self.mode == MODE_DISCRETE:
            if not self.gain_levels or not self.gain_probs or len(self.gain_levels) != len(self.gain_probs):
                raise ChannelConfigError("discrete mode needs gain_levels and gain_probs of equal length")
            if any(g < 0 for g in self.gain_levels) or any(p < 0 for p in self.gain_probs):
                raise ChannelConfigError("gain_levels and gain_probs must be nonnegative")
            if abs(sum(self.gain_probs) - 1.0) > 1e-9:
                raise ChannelConfigError("gain_probs must sum to 1")
            if self.quant_bins != len(self.gain_levels):
                raise ChannelConfigError("discrete mode reports the atom index, quant_bins must equal the number of atoms")

    @property
    def i_max_k(self):
        """Largest number of bits one slot can carry."""
        return self.i_max * self.symbols_per_slot

    def member_index(self, g, j):
        """Flat receiver index of member ``j`` of multicast group ``g``."""
        return self._group_offsets[g] + j

    def group_members(self, g):
        start = self._group_offsets[g]
        return list(range(start, start + self.group_sizes[g]))

    def as_dict(self):
        return dict(
            unicast_snr_db=list(self.unicast_snr_db),
            group_snr_db=[list(g) for g in self.group_snr_db],
            rho=self.rho,
            i_max=self.i_max,
            symbols_per_slot=self.symbols_per_slot,
            mode=self.mode,
            ar_coeff=self.ar_coeff,
            quant_bins=self.quant_bins,
            p_av=self.p_av,
            gain_levels=None if self.gain_levels is None else list(self.gain_levels),
            gain_probs=None if self.gain_probs is None else list(self.gain_probs),
        )

    def replace(self, **kw):
        d = self.as_dict()
        d.update(kw)
        return ChannelConfig(**d)
