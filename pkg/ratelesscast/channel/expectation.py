import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.stats import rice

from ratelesscast.sim_logger import sim_logger
from ratelesscast.util.log import logtime

from .definitions import (
    MODE_STATIC,
    MODE_DISCRETE,
    QUAD_NODES,
    BIN_NODES,
    TAIL_SIGMAS,
    RATE_GRID_STEPS,
    FIXED_RATE_CELLS,
    DEFAULT_I_MAX,
)

_logger = sim_logger("ratelesscast.channel.expectation")

_GL_X, _GL_W = leggauss(QUAD_NODES)
_BIN_X, _BIN_W = leggauss(BIN_NODES)


def mutual_information(h, P, i_max=DEFAULT_I_MAX):
    """
    I(h, P) = min(log2(1 + |h|^2 P), i_max) in bits/symbol.
    Works on scalars and numpy arrays alike.
    """
    return mi_from_gain(np.abs(h) ** 2, P, i_max)


def mi_from_gain(gain, P, i_max=DEFAULT_I_MAX):
    """Same as ``mutual_information`` with the power gain |h|^2 given directly."""
    ret = np.minimum(np.log2(1.0 + np.asarray(gain) * P), i_max)
    if np.ndim(ret) == 0:
        return float(ret)
    return ret


def rician_expected_mi(nu, s2, P, i_max=DEFAULT_I_MAX):
    """
    E{min(log2(1 + P r^2), i_max)} where r = |h| is Rician with line-of-sight
    amplitude ``nu`` and per-dimension variance ``s2``.
    The capped part above r_cap is the Rician tail probability, the rest is a
    fixed-node Gauss-Legendre sum over a window of +- TAIL_SIGMAS around ``nu``.
    :param nu: array of Rician amplitudes
    :type nu: numpy.ndarray
    :return: array shaped like ``nu``
    """
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    if P <= 0:
        return np.zeros_like(nu)
    if s2 <= 0:
        return np.minimum(np.log2(1.0 + P * nu ** 2), i_max)
    s = np.sqrt(s2)
    r_cap = np.sqrt((2.0 ** i_max - 1.0) / P)
    lo = np.maximum(0.0, nu - TAIL_SIGMAS * s)
    hi = np.minimum(r_cap, nu + TAIL_SIGMAS * s)
    width = np.maximum(hi - lo, 0.0)
    # (len(nu), QUAD_NODES)
    r = lo[:, None] + 0.5 * width[:, None] * (_GL_X[None, :] + 1.0)
    w = 0.5 * width[:, None] * _GL_W[None, :]
    b = nu[:, None] / s
    body = np.sum(w * rice.pdf(r, b, scale=s) * np.log2(1.0 + P * r ** 2), axis=1)
    tail = i_max * rice.sf(r_cap, nu / s, scale=s)
    return body + tail


def rician_success(nu, s2, gain_threshold):
    """
    Pr{|h|^2 >= gain_threshold} for Rician |h|.
    :param nu: array of Rician amplitudes, shape (k,)
    :param gain_threshold: array of thresholds, shape (n,)
    :return: array (k, n)
    """
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    x = np.atleast_1d(np.asarray(gain_threshold, dtype=float))
    if s2 <= 0:
        return (nu[:, None] ** 2 >= x[None, :]).astype(float)
    s = np.sqrt(s2)
    return rice.sf(np.sqrt(np.maximum(x, 0.0))[None, :], (nu / s)[:, None], scale=s)


def conditional_expected_mi(hhat, P, rho, variance=1.0, i_max=DEFAULT_I_MAX):
    """
    E{I(h, P) | hhat} under the additive uncertainty model
    hhat = sqrt(rho) h + sqrt(1 - rho) n. Given hhat, h is complex Gaussian with
    mean sqrt(rho) hhat and variance (1 - rho) * variance, so |h| is Rician.
    Returns bits/symbol, callers multiply by K.
    """
    nu = np.sqrt(rho) * np.abs(hhat)
    s2 = (1.0 - rho) * variance / 2.0
    return float(rician_expected_mi(nu, s2, P, i_max)[0])


def rate_grid(i_max_k, steps=RATE_GRID_STEPS):
    """0 .. I_max K in ``steps`` equal steps."""
    return np.linspace(0.0, i_max_k, steps + 1)


def _gain_thresholds(rates, P, symbols_per_slot):
    """|h|^2 needed for I(h, P) K >= R, inf where the rate is not reachable."""
    with np.errstate(divide="ignore", over="ignore"):
        x = (2.0 ** (rates / symbols_per_slot) - 1.0) / P if P > 0 else np.full_like(rates, np.inf)
    x = np.where(rates <= 0, 0.0, x)
    return x


def _best_rate(rates, success):
    """argmax of R * success(R), the lowest rate wins ties."""
    goodput = rates * success
    idx = int(np.argmax(goodput))
    return float(rates[idx]), float(goodput[idx]), float(success[idx])


def best_fixed_rate(hhat, P, rho, variance=1.0, i_max=DEFAULT_I_MAX, symbols_per_slot=1):
    """
    Goodput-maximizing fixed code rate for one transmission given hhat:
    R* = argmax_R R Pr{I(h, P) K >= R | hhat}, searched on the rate grid.
    With a degenerate posterior (rho = 1) the exact rate I(hhat, P) K is a candidate.
    :return: (R* bits, goodput bits, success probability)
    """
    i_max_k = i_max * symbols_per_slot
    rates = rate_grid(i_max_k)
    nu = np.sqrt(rho) * np.abs(hhat)
    s2 = (1.0 - rho) * variance / 2.0
    if s2 <= 0:
        rates = np.union1d(rates, [mutual_information(hhat, P, i_max) * symbols_per_slot])
    x = _gain_thresholds(rates, P, symbols_per_slot)
    success = np.where(rates > i_max_k + 1e-12, 0.0, rician_success(nu, s2, x)[0])
    return _best_rate(rates, success)


class _Posterior(object):
    """
    Distribution of |h| given what the transmitter knows, either as weighted
    Rician components (``s2 > 0``) or as weighted atoms of |h|^2.
    """

    def __init__(self, weights, gains=None, nus=None, s2=0.0):
        self.weights = np.asarray(weights, dtype=float)
        self.s2 = float(s2)
        if gains is None and self.s2 <= 0:
            gains = np.asarray(nus, dtype=float) ** 2
        self.atoms = gains is not None
        self.gains = None if gains is None else np.asarray(gains, dtype=float)
        self.nus = None if nus is None else np.asarray(nus, dtype=float)

    def expected_mi(self, P, i_max):
        if self.atoms:
            return float(np.dot(self.weights, mi_from_gain(self.gains, P, i_max)))
        return float(np.dot(self.weights, rician_expected_mi(self.nus, self.s2, P, i_max)))

    def success(self, gain_thresholds):
        if self.atoms:
            ok = self.gains[:, None] >= np.asarray(gain_thresholds)[None, :]
            return np.dot(self.weights, ok.astype(float))
        return np.dot(self.weights, rician_success(self.nus, self.s2, gain_thresholds))

    def atom_rates(self, P, i_max, symbols_per_slot):
        if not self.atoms:
            return np.empty(0)
        return mi_from_gain(self.gains, P, i_max) * symbols_per_slot


def _gain_posterior(gains, weights):
    return _Posterior(weights, gains=gains)


class ExpectationTable(object):
    """
    Cached per-bin statistics of every receiver's channel, for every power level:
    - ``expected[rx, b, k]``: E{I(h, P_k) | hhat in bin b} in bits/symbol
    - ``fixed_rate[rx, b, k]`` / ``goodput[rx, b, k]``: goodput-maximizing rate and its goodput (bits/slot)
    - ``ergodic_pav[rx]``: unconditional E{I(h, P_av)} (no CSI, as multicast members see it)
    - ``group_rate[g]`` / ``group_goodput[g]``: fixed multicast packet rate at P_av and the weakest member's goodput
    The scheduler and the region solver read the same numbers.
    """

    def __init__(self, config, levels):
        self._logger = sim_logger("ratelesscast.channel.ExpectationTable")
        self.config = config
        self.levels = np.asarray(sorted(set(float(l) for l in levels)), dtype=float)
        self._build()

    @logtime()
    def _build(self):
        cfg = self.config
        n_rx, n_bins, n_lvl = cfg.num_receivers, cfg.quant_bins, len(self.levels)
        self.expected = np.zeros((n_rx, n_bins, n_lvl))
        self.fixed_rate = np.zeros((n_rx, n_bins, n_lvl))
        self.goodput = np.zeros((n_rx, n_bins, n_lvl))
        self.ergodic_pav = np.zeros(n_rx)
        rates = rate_grid(cfg.i_max_k)
        for rx in range(n_rx):
            for b in range(n_bins):
                post = self.bin_posterior(rx, b)
                for k, P in enumerate(self.levels):
                    self.expected[rx, b, k] = post.expected_mi(P, cfg.i_max)
                    self.fixed_rate[rx, b, k], self.goodput[rx, b, k], _ = self._best_rate(post, P, rates)
            self.ergodic_pav[rx] = self.prior(rx).expected_mi(cfg.p_av, cfg.i_max)
        self.group_rate = np.zeros(cfg.num_groups)
        self.group_goodput = np.zeros(cfg.num_groups)
        for g in range(cfg.num_groups):
            self.group_rate[g], self.group_goodput[g] = self._best_group_rate(g, rates)
        self._logger.debug(
            "Expectation table built: %s receivers, %s bins, %s power levels", n_rx, n_bins, n_lvl
        )

    def prior(self, rx):
        """Distribution of |h| with no CSI at all."""
        cfg = self.config
        var = cfg.variance[rx]
        if cfg.mode == MODE_STATIC:
            return _gain_posterior([var], [1.0])
        if cfg.mode == MODE_DISCRETE:
            return _gain_posterior(var * np.asarray(cfg.gain_levels), cfg.gain_probs)
        # Rayleigh: Rician with nu = 0
        return _Posterior([1.0], nus=[0.0], s2=var / 2.0)

    def bin_posterior(self, rx, b):
        """Distribution of |h| given that the receiver's report falls in bin ``b``."""
        cfg = self.config
        var = cfg.variance[rx]
        if cfg.mode == MODE_STATIC:
            return _gain_posterior([var], [1.0])
        if cfg.mode == MODE_DISCRETE:
            probs = np.asarray(cfg.gain_probs)
            weights = (1.0 - cfg.rho) * probs
            weights[b] += cfg.rho
            return _gain_posterior(var * np.asarray(cfg.gain_levels), weights)
        # Equiprobable Rayleigh bins: |hhat| = sigma sqrt(-ln(1 - u)), u uniform on the bin
        B = cfg.quant_bins
        u_lo, u_hi = b / float(B), (b + 1) / float(B)
        u = u_lo + 0.5 * (u_hi - u_lo) * (_BIN_X + 1.0)
        mag = np.sqrt(var * -np.log1p(-u))
        weights = _BIN_W / np.sum(_BIN_W)
        return _Posterior(weights, nus=np.sqrt(cfg.rho) * mag, s2=(1.0 - cfg.rho) * var / 2.0)

    def _best_rate(self, post, P, rates):
        cfg = self.config
        cand = np.union1d(rates, post.atom_rates(P, cfg.i_max, cfg.symbols_per_slot))
        x = _gain_thresholds(cand, P, cfg.symbols_per_slot)
        success = np.where(cand > cfg.i_max_k + 1e-12, 0.0, post.success(x))
        return _best_rate(cand, success)

    def _best_group_rate(self, g, rates):
        """
        Packet rate of a group whose members collect the packets they decode
        on their own: argmax_R min_j R Pr{I(h_gj, P_av) K >= R}, the goodput
        of the weakest member.
        """
        cfg = self.config
        members = cfg.group_members(g)
        priors = [self.prior(rx) for rx in members]
        cand = rates
        for post in priors:
            cand = np.union1d(cand, post.atom_rates(cfg.p_av, cfg.i_max, cfg.symbols_per_slot))
        x = _gain_thresholds(cand, cfg.p_av, cfg.symbols_per_slot)
        success = np.min([post.success(x) for post in priors], axis=0)
        success = np.where(cand > cfg.i_max_k + 1e-12, 0.0, success)
        rate, goodput, _ = _best_rate(cand, success)
        return rate, goodput

    def level_index(self, P):
        return int(np.searchsorted(self.levels, P))

    def member_mi_pmf(self, rx, P):
        """
        Lattice distribution of I(h, P) K for receivers with atomic channels
        (static / discrete modes), as {bits: probability}.
        """
        post = self.prior(rx)
        if not post.atoms:
            raise ValueError("Receiver {} has a continuous channel, no lattice pmf".format(rx))
        pmf = {}
        for r, w in zip(post.atom_rates(P, self.config.i_max, self.config.symbols_per_slot), post.weights):
            if w > 0:
                pmf[float(r)] = pmf.get(float(r), 0.0) + float(w)
        return pmf


class FixedRateCache(object):
    """
    Goodput-maximizing fixed rate R*(hhat, P) of the Rayleigh modes, for the
    report of the current slot rather than its CSI bin. The report power
    |hhat|^2 / variance is cut into ``cells`` equiprobable cells and every
    cell gets the rate of its midpoint, one table per distinct P * variance.
    With rho = 1 nothing is tabulated: R* = I(hhat, P) K, decoded for sure.
    """

    def __init__(self, config, levels, cells=FIXED_RATE_CELLS):
        self.config = config
        self.levels = np.asarray(levels, dtype=float)
        self.cells = int(cells)
        self.exact = config.rho >= 1.0
        snr = config.variance[:, None] * self.levels[None, :]
        self.snrs, key = np.unique(snr, return_inverse=True)
        self._key = key.reshape(snr.shape)
        self.rate = np.zeros((len(self.snrs), self.cells))
        self.goodput = np.zeros((len(self.snrs), self.cells))
        if not self.exact:
            self._build()

    @logtime()
    def _build(self):
        cfg = self.config
        rates = rate_grid(cfg.i_max_k)
        u = (np.arange(self.cells) + 0.5) / self.cells
        nu = np.sqrt(cfg.rho) * np.sqrt(-np.log1p(-u))
        s2 = (1.0 - cfg.rho) / 2.0
        rows = np.arange(self.cells)
        for q, snr in enumerate(self.snrs):
            if snr <= 0:
                continue
            # thresholds of the normalized gain |h|^2 / variance
            x = _gain_thresholds(rates, snr, cfg.symbols_per_slot)
            goodput = rates[None, :] * rician_success(nu, s2, x)
            idx = np.argmax(goodput, axis=1)
            self.rate[q] = rates[idx]
            self.goodput[q] = goodput[rows, idx]
        _logger.debug("Fixed rate cache built: %s SNR values, %s cells", len(self.snrs), self.cells)

    def cell(self, hhat, receivers):
        """Cell of every report, ``hhat`` and ``receivers`` of the same length."""
        gain = np.abs(hhat) ** 2 / self.config.variance[receivers]
        return np.minimum((-np.expm1(-gain) * self.cells).astype(int), self.cells - 1)

    def lookup(self, hhat, receivers):
        """
        :param hhat: reports of ``receivers``
        :param receivers: flat receiver indices
        :return: (R*, goodput) in bits, arrays (len(receivers), len(levels))
        """
        receivers = np.asarray(receivers, dtype=int)
        if self.exact:
            rate = mi_from_gain(np.abs(hhat)[:, None] ** 2, self.levels[None, :], self.config.i_max)
            rate = rate * self.config.symbols_per_slot
            return rate, rate
        key = self._key[receivers]
        cell = self.cell(hhat, receivers)[:, None]
        return self.rate[key, cell], self.goodput[key, cell]
