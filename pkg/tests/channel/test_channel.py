import numpy as np
import pytest

from ratelesscast.channel import (
    Channel,
    ChannelConfig,
    ChannelConfigError,
    ChannelDraw,
    ExpectationTable,
    mutual_information,
    conditional_expected_mi,
    best_fixed_rate,
    FixedRateCache,
)

from testutils.configs import lattice_channel, static_channel, SNR_MI5, LATTICE_GAINS


def unit_channel(n=1, **kw):
    return ChannelConfig(unicast_snr_db=[0.0] * n, **kw)


# ~ mutual information


def test_mutual_information_examples():
    assert mutual_information(1.0, 1.0) == pytest.approx(1.0)
    assert mutual_information(np.sqrt(31.0), 1.0) == pytest.approx(5.0)
    assert mutual_information(np.sqrt(63.0), 1.0) == 5.0
    assert mutual_information(1.0 + 0j, 0.0) == 0.0


def test_mutual_information_bounds():
    h = np.random.default_rng(3).standard_normal(1000) * 10
    for P in (0.0, 0.5, 2.0, 100.0):
        mi = mutual_information(h, P)
        assert np.all(mi >= 0) and np.all(mi <= 5.0)


# ~ sampling


def test_rho_one_reports_exact_channel(rng):
    channel = Channel(unit_channel(3, rho=1.0))
    block = channel.sample_block(rng, 1000)
    assert np.array_equal(block.h, block.hhat)


def test_rho_zero_report_is_independent(rng):
    channel = Channel(unit_channel(1, rho=0.0))
    block = channel.sample_block(rng, 100000)
    c = np.corrcoef(np.abs(block.h[:, 0]), np.abs(block.hhat[:, 0]))[0, 1]
    assert abs(c) < 0.02


@pytest.mark.slow
def test_rho_sets_covariance_of_report(rng):
    channel = Channel(unit_channel(1, rho=0.8))
    block = channel.sample_block(rng, 1000000)
    cov = np.mean(block.h[:, 0] * np.conj(block.hhat[:, 0]))
    assert cov.real == pytest.approx(np.sqrt(0.8), abs=0.01)
    assert abs(cov.imag) < 0.01


def test_ar1_lag_correlation(rng):
    cfg = unit_channel(1, rho=1.0, mode="ar1_rayleigh", ar_coeff=0.1)
    block = Channel(cfg).sample_block(rng, 100000)
    h = block.h[:, 0]
    assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, abs=0.03)
    lag = np.mean(h[1:] * np.conj(h[:-1])).real
    assert lag == pytest.approx(np.sqrt(0.1), abs=0.02)


def test_ar1_blocks_continue(rng):
    cfg = unit_channel(1, rho=1.0, mode="ar1_rayleigh", ar_coeff=0.99)
    channel = Channel(cfg)
    first = channel.sample_block(rng, 10)
    second = channel.sample_block(rng, 10, prev_h=first.h[-1])
    # strongly correlated process, no restart between blocks
    assert abs(second.h[0, 0] - first.h[-1, 0]) < 1.0


def test_sample_slot(rng):
    cfg = ChannelConfig(unicast_snr_db=[0.0, 3.0], group_snr_db=[[0.0, 0.0]], quant_bins=2, rho=0.5)
    channel = Channel(cfg)
    draw = channel.sample_slot(rng)
    assert draw.h.shape == (4,)
    assert draw.h_u.shape == (2,)
    assert [len(h) for h in draw.h_gj] == [2]
    assert 0 <= draw.state_index < channel.num_states == 4
    assert channel.quantize_csi(draw) == draw.state_index


def test_sample_slot_ar1_follows_previous_draw(rng):
    cfg = unit_channel(1, rho=1.0, mode="ar1_rayleigh", ar_coeff=0.999)
    channel = Channel(cfg)
    first = channel.sample_slot(rng)
    second = channel.sample_slot(rng, prev_draw=first)
    assert abs(second.h[0] - first.h[0]) < 0.5


def test_static_channel_is_constant(rng):
    cfg = static_channel(unicast_snr_db=[SNR_MI5, 0.0], quant_bins=4)
    block = Channel(cfg).sample_block(rng, 50)
    assert np.allclose(np.abs(block.h) ** 2, cfg.variance)
    assert np.all(block.state_index == block.state_index[0])
    assert mutual_information(block.h[0, 0], 1.0) == pytest.approx(5.0)


def test_discrete_channel_atoms_and_reports(rng):
    cfg = lattice_channel(num_unicast=1, rho=1.0)
    block = Channel(cfg).sample_block(rng, 10000)
    gains = np.abs(block.h[:, 0]) ** 2
    assert set(np.round(gains, 9)) <= set(LATTICE_GAINS)
    assert np.mean(np.isclose(gains, LATTICE_GAINS[1])) == pytest.approx(0.5, abs=0.03)
    # rho = 1: the report is the true atom
    assert np.array_equal(block.bins[:, 0], (gains > 10).astype(int))


def test_discrete_config_needs_one_bin_per_atom():
    with pytest.raises(ChannelConfigError):
        ChannelConfig(
            unicast_snr_db=[0.0], mode="discrete", quant_bins=3, gain_levels=[1.0, 2.0], gain_probs=[0.5, 0.5]
        )


@pytest.mark.parametrize(
    "kw",
    [dict(rho=1.5), dict(mode="nakagami"), dict(quant_bins=0), dict(group_snr_db=[[]])],
)
def test_invalid_channel_config(kw):
    with pytest.raises(ChannelConfigError):
        ChannelConfig(unicast_snr_db=[0.0], **kw)


# ~ conditional expectation


def test_conditional_expectation_rho_one_is_exact():
    for hhat in (0.3 + 0.1j, 1.0, 2.5j):
        for P in (0.5, 1.0, 10.0):
            assert conditional_expected_mi(hhat, P, 1.0) == pytest.approx(mutual_information(hhat, P), abs=1e-12)


def test_conditional_expectation_rho_zero_ignores_report():
    a = conditional_expected_mi(0.2, 10.0, 0.0)
    b = conditional_expected_mi(2.0 + 1j, 10.0, 0.0)
    assert a == pytest.approx(b, abs=1e-9)


def _mc_conditional(rng, hhat, P, rho, n=4000000, chunks=4):
    ret = 0.0
    for _ in range(chunks):
        z = rng.standard_normal((n, 2))
        h = np.sqrt(rho) * hhat + np.sqrt((1.0 - rho) / 2.0) * (z[:, 0] + 1j * z[:, 1])
        ret += np.mean(mutual_information(h, P))
    return ret / chunks


@pytest.mark.slow
@pytest.mark.parametrize("hhat, rho", [(1.0 + 0j, 0.8), (0.0, 0.0)])
def test_conditional_expectation_matches_monte_carlo(rng, hhat, rho):
    assert conditional_expected_mi(hhat, 10.0, rho) == pytest.approx(_mc_conditional(rng, hhat, 10.0, rho), abs=1e-3)


@pytest.mark.slow
def test_conditional_expectation_random_triples(rng):
    for _ in range(20):
        hhat = rng.rayleigh(np.sqrt(0.5)) * np.exp(2j * np.pi * rng.random())
        P = rng.choice([0.5, 1.0, 2.0, 10.0])
        rho = rng.uniform(0.05, 0.95)
        mc = _mc_conditional(rng, hhat, P, rho, n=1000000, chunks=4)
        assert conditional_expected_mi(hhat, P, rho) == pytest.approx(mc, abs=2e-3)


# ~ quantization


def test_single_bin_state_is_zero(rng):
    channel = Channel(unit_channel(2, quant_bins=1))
    block = channel.sample_block(rng, 100)
    assert np.all(block.state_index == 0)
    assert channel.num_states == 1


def test_two_bins_split_at_rayleigh_median():
    cfg = unit_channel(1, quant_bins=2)
    channel = Channel(cfg)
    median = np.sqrt(np.log(2.0))
    below = ChannelDraw(cfg, np.array([1.0 + 0j]), np.array([0.9 * median + 0j]))
    above = ChannelDraw(cfg, np.array([1.0 + 0j]), np.array([1.1 * median + 0j]))
    assert channel.quantize_csi(below) == 0
    assert channel.quantize_csi(above) == 1


def test_joint_states_are_equiprobable(rng):
    channel = Channel(unit_channel(2, quant_bins=4, rho=0.5))
    block = channel.sample_block(rng, 100000)
    counts = np.bincount(block.state_index, minlength=16) / 100000.0
    assert len(counts) == 16
    assert np.all(np.abs(counts - 1.0 / 16) < 0.01)
    assert np.allclose(channel.state_distribution(), 1.0 / 16)


def test_state_index_roundtrip_of_bins():
    channel = Channel(unit_channel(3, quant_bins=2))
    for i in range(channel.num_states):
        bins = np.array(channel.state_bins(i))
        assert channel.state_index(bins) == i


def test_repair_members_report_csi():
    cfg = ChannelConfig(unicast_snr_db=[0.0], group_snr_db=[[0.0, 0.0, 0.0]], quant_bins=2)
    channel = Channel(cfg, repair_members=[cfg.member_index(0, 2)])
    assert channel.reporting == (0, 3)
    assert channel.num_states == 4


# ~ expectation table and fixed-rate codes


def test_fixed_rate_with_perfect_csi():
    R, goodput, success = best_fixed_rate(1.0, 3.0, 1.0)
    assert R == pytest.approx(2.0)
    assert goodput == pytest.approx(2.0)
    assert success == 1.0


def test_goodput_never_beats_expected_mi(rng):
    for _ in range(200):
        hhat = rng.rayleigh(np.sqrt(0.5)) + 0j
        P = float(rng.choice([0.5, 1.0, 10.0]))
        rho = float(rng.uniform(0.0, 1.0))
        _, goodput, _ = best_fixed_rate(hhat, P, rho)
        assert goodput <= conditional_expected_mi(hhat, P, rho) + 1e-4


def test_table_goodput_below_expectation():
    cfg = ChannelConfig(unicast_snr_db=[10.0, 3.0], group_snr_db=[[10.0, 5.0]], rho=0.5, quant_bins=4)
    table = ExpectationTable(cfg, [0.0, 0.5, 1.0, 2.0])
    assert np.all(table.goodput <= table.expected + 1e-6)
    # E{I | bin} grows with the bin and with the power
    assert np.all(np.diff(table.expected[:2], axis=1) >= -1e-9)
    assert np.all(np.diff(table.expected, axis=2) >= -1e-9)
    assert np.all(table.expected[:, :, 0] == 0)
    assert table.group_goodput[0] <= min(table.ergodic_pav[2:]) + 1e-6


def test_table_discrete_posterior():
    cfg = lattice_channel(num_unicast=1, rho=0.8)
    table = ExpectationTable(cfg, [1.0])
    # bin 0 reported: true atom 0 with 0.8 + 0.2 * 0.5
    assert table.expected[0, 0, 0] == pytest.approx(0.9 * 2.0 + 0.1 * 5.0)
    assert table.expected[0, 1, 0] == pytest.approx(0.1 * 2.0 + 0.9 * 5.0)
    assert table.member_mi_pmf(0, 1.0) == {2.0: 0.5, 5.0: 0.5}


def test_group_rate_serves_the_weakest_member():
    # R = 5 reaches each member half the time: 2.5 bits against 2 bits at R = 2
    table = ExpectationTable(lattice_channel(group_sizes=(3,)), [1.0])
    assert table.group_rate[0] == pytest.approx(5.0)
    assert table.group_goodput[0] == pytest.approx(2.5)


def test_member_pmf_needs_atomic_channel():
    table = ExpectationTable(unit_channel(1, quant_bins=1), [1.0])
    with pytest.raises(ValueError):
        table.member_mi_pmf(0, 1.0)


# ~ fixed rate of the current report


def test_fixed_rate_cache_perfect_csi_is_exact(rng):
    cfg = ChannelConfig(unicast_snr_db=[10.0, 0.0], rho=1.0)
    cache = FixedRateCache(cfg, [0.0, 0.5, 1.0, 2.0])
    hhat = (rng.standard_normal(50) + 1j * rng.standard_normal(50)) * 2.0
    receivers = rng.integers(0, 2, size=50)
    rate, goodput = cache.lookup(hhat, receivers)
    assert rate.shape == (50, 4)
    for k in range(50):
        for o, P in enumerate(cache.levels):
            assert rate[k, o] == pytest.approx(mutual_information(hhat[k], P))
    assert np.array_equal(rate, goodput)


@pytest.mark.parametrize("rho", [0.3, 0.8])
def test_fixed_rate_cache_matches_search_at_cell_midpoints(rho):
    cfg = unit_channel(1, rho=rho)
    levels = [0.5, 1.0, 2.0]
    cache = FixedRateCache(cfg, levels, cells=64)
    cells = np.array([0, 7, 31, 50, 63])
    hhat = np.sqrt(-np.log1p(-(cells + 0.5) / 64.0)) + 0j
    receivers = np.zeros(len(cells), dtype=int)
    assert np.array_equal(cache.cell(hhat, receivers), cells)
    rate, goodput = cache.lookup(hhat, receivers)
    for k, h in enumerate(hhat):
        for o, P in enumerate(levels):
            R, G, _ = best_fixed_rate(h, P, rho)
            assert rate[k, o] == pytest.approx(R)
            assert goodput[k, o] == pytest.approx(G)


def test_fixed_rate_cache_grows_with_the_report():
    cfg = ChannelConfig(unicast_snr_db=[10.0], rho=0.8)
    cache = FixedRateCache(cfg, [1.0])
    mag = np.sqrt(10.0 * np.linspace(0.01, 6.0, 200))
    _, goodput = cache.lookup(mag + 0j, np.zeros(200, dtype=int))
    assert np.all(np.diff(goodput[:, 0]) >= -1e-9)
    # variance 10: the report is normalized before the cell lookup
    mid = np.sqrt(10.0 * -np.log1p(-128.5 / 256.0))
    assert cache.cell(np.array([mid]), [0])[0] == 128
