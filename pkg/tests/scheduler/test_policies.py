import numpy as np
import pytest
from hypothesis import given, strategies as st

from ratelesscast.scheduler import (
    PowerSet,
    PowerSetError,
    ActionSpace,
    SchedulerSnapshot,
    KIND_UNICAST,
    KIND_MULTICAST,
    KIND_REPAIR,
    KIND_IDLE,
    POLICY_NC_RC,
    POLICY_FIXED_RATE,
    POLICY_UNICAST_ONLY,
    rate_loss_factor,
    unicast_metric,
    multicast_rate,
    multicast_metric,
    nc_rc_decide,
    fixed_rate_decide,
    get_policy,
    genie_region_rate,
)

from testutils.configs import static_channel, sim_config, SNR_MI4


def test_rate_loss_factor_is_eight_ninths():
    assert rate_loss_factor(40, 5) == 8.0 / 9.0


def test_unicast_metric_applies_rate_loss():
    P, metric, I = unicast_metric(10.0, 0.0, [4.5], 40, [1.0], 5)
    assert I == pytest.approx(4.0)
    assert metric == pytest.approx(40.0)


def test_unicast_without_power_penalty_picks_max_level():
    P, _, _ = unicast_metric(5.0, 0.0, [0.0, 1.0, 2.0, 2.5], 40, [0.0, 0.5, 1.0, 2.0], 5)
    assert P == 2.0


def test_unicast_empty_queue_picks_lowest_level():
    P, metric, _ = unicast_metric(0.0, 3.0, [0.0, 1.0, 2.0], 40, [0.0, 1.0, 2.0], 5)
    assert P == 0.0
    assert metric <= 0


def test_multicast_rate_before_first_code():
    assert multicast_rate(1, 0, 40, 5) == 5.0


def test_multicast_rate_measured():
    assert multicast_rate(3, 10, 40, 5) == 12.0
    metric, I_g = multicast_metric(2.0, 1.0, 3, 10, 40, 1.0, 5)
    assert I_g == 12.0
    assert metric == 23.0


def test_power_set_levels():
    ps = PowerSet([0.5, 1.0, 2.0], 1.0)
    assert ps.unicast_levels == (0.0, 0.5, 1.0, 2.0)
    assert ps.O == 4
    assert PowerSet([0.0, 1.0], 1.0).O == 2
    assert PowerSet([1.0], 1.0, includes_zero=False).O == 1


@pytest.mark.parametrize("levels, p_av", [([1.0, 0.5], 1.0), ([0.5, 2.0], 1.0), ([], 1.0), ([-1.0, 1.0], 1.0)])
def test_invalid_power_set(levels, p_av):
    with pytest.raises(PowerSetError):
        PowerSet(levels, p_av)


def test_action_space_layout():
    space = ActionSpace(2, 1, 1, PowerSet([1.0, 2.0], 1.0))
    assert space.O == 3
    assert space.F == 2 * 3 + 1 + 3
    assert space.multicast(0) == 6
    assert space.repair(0, 2) == 9
    assert space.power(space.repair(0, 2)) == 2.0
    assert space.power(space.multicast(0)) == 1.0
    assert space.flow(space.unicast(1, 2)) == 1
    assert space.flow(space.repair(0, 0)) == 3
    assert space.power(space.idle_index) == 0.0


ONE_LEVEL = PowerSet([1.0], 1.0, includes_zero=False)


def _snapshot(Q_u, expected, Z=0.0, **kw):
    Q_u = np.asarray(Q_u, dtype=float)
    return SchedulerSnapshot(
        Z=Z, Q_u=Q_u, M_u=np.full(len(Q_u), 40.0), unicast_expected=np.asarray(expected, dtype=float), **kw
    )


def test_decide_takes_the_largest_metric():
    # 100 * 4.5 * 8/9 = 400 against 62.5 * 4.5 * 8/9 = 250
    action = nc_rc_decide(_snapshot([100.0, 62.5], [[4.5], [4.5]]), ONE_LEVEL, 5)
    assert action.kind == KIND_UNICAST
    assert action.flow == 0
    assert action.metric == pytest.approx(400.0)


def test_decide_all_empty_goes_to_first_flow():
    snap = _snapshot([0.0], [[4.5]], Q_g=[0.0], M_g=[40.0])
    action = nc_rc_decide(snap, ONE_LEVEL, 5)
    assert action.flow == 0
    assert action.metric == 0.0


def test_decide_exact_tie_goes_to_lower_flow():
    action = nc_rc_decide(_snapshot([10.0, 20.0, 20.0], [[4.5], [4.5], [4.5]]), ONE_LEVEL, 5)
    assert action.flow == 1


def test_decide_multicast_against_unicast():
    # unicast 10 * 4 = 40, multicast 20 * 5 - 0 = 100 before its first code
    snap = _snapshot([10.0], [[4.5]], Q_g=[20.0], M_g=[40.0], n_g=[1], sum_lengths=[0])
    action = nc_rc_decide(snap, ONE_LEVEL, 5)
    assert action.kind == KIND_MULTICAST
    assert action.flow == 1
    assert action.power == 1.0


def test_decide_idles_when_every_metric_is_negative():
    ps = PowerSet([1.0], 1.0)
    snap = SchedulerSnapshot(Z=3.0, Q_g=[0.0], M_g=[40.0])
    action = nc_rc_decide(snap, ps, 5)
    assert action.kind == KIND_IDLE
    assert action.idle
    assert action.m == ActionSpace(0, 1, 0, ps).idle_index


def test_zero_power_unicast_is_no_transmission():
    ps = PowerSet([1.0], 1.0)
    action = nc_rc_decide(_snapshot([0.0], [[0.0, 4.5]], Z=3.0, Q_g=[0.0], M_g=[40.0]), ps, 5)
    assert action.kind == KIND_UNICAST
    assert action.power == 0.0
    assert action.idle


def test_decide_skips_repair_without_residual():
    ps = PowerSet([1.0], 1.0, includes_zero=False)
    snap = SchedulerSnapshot(Z=0.0, Q_v=[100.0, 5.0], M_v=[0.0, 15.0], repair_expected=[[5.0], [5.0]])
    action = nc_rc_decide(snap, ps, 5)
    assert action.kind == KIND_REPAIR
    assert action.index == 1
    # residual of 15 bits: factor 15 / 20
    assert action.rate == pytest.approx(3.75)


def test_decide_overhead_scales_rates():
    a = nc_rc_decide(_snapshot([10.0], [[4.5]]), ONE_LEVEL, 5, epsilon=0.0)
    b = nc_rc_decide(_snapshot([10.0], [[4.5]]), ONE_LEVEL, 5, epsilon=0.25)
    assert b.rate == pytest.approx(a.rate / 1.25)


SCALES = st.sampled_from([0.25, 0.5, 2.0, 4.0, 1024.0])
QUEUE = st.integers(0, 10000).map(float)


@given(
    st.lists(QUEUE, min_size=1, max_size=4),
    st.lists(QUEUE, min_size=0, max_size=2),
    st.integers(0, 1000).map(float),
    st.integers(0, 2 ** 16),
    SCALES,
)
def test_decision_is_scale_invariant(Q_u, Q_g, Z, draw_seed, c):
    r = np.random.default_rng(draw_seed)
    ps = PowerSet([0.5, 1.0, 2.0], 1.0)
    expected = np.sort(r.uniform(0, 5, size=(len(Q_u), ps.O)), axis=1)
    expected[:, 0] = 0.0
    G = len(Q_g)
    snap = SchedulerSnapshot(
        Z=Z,
        Q_u=Q_u,
        M_u=np.full(len(Q_u), 40.0),
        unicast_expected=expected,
        Q_g=Q_g,
        M_g=np.full(G, 40.0),
        n_g=r.integers(1, 20, size=G),
        sum_lengths=r.integers(10, 400, size=G),
    )
    assert nc_rc_decide(snap.scaled(c), ps, 5).m == nc_rc_decide(snap, ps, 5).m


def _decide_by_loop(snap, ps, i_max_k):
    """Action index of the largest Q I - Z P, one (flow, power) pair at a time."""
    space = ActionSpace(len(snap.Q_u), len(snap.Q_g), len(snap.Q_v), ps)
    best_m, best = None, -np.inf
    for u in range(space.U):
        rate = snap.unicast_expected[u] * rate_loss_factor(snap.M_u[u], i_max_k)
        for k, P in enumerate(ps.unicast_levels):
            metric = snap.Q_u[u] * rate[k] - snap.Z * P
            if metric > best:
                best_m, best = space.unicast(u, k), metric
    for g in range(space.G):
        metric = snap.Q_g[g] * multicast_rate(snap.n_g[g], snap.sum_lengths[g], snap.M_g[g], i_max_k) - snap.Z * ps.p_av
        if metric > best:
            best_m, best = space.multicast(g), metric
    for v in range(space.V):
        if snap.M_v[v] <= 0:
            continue
        rate = snap.repair_expected[v] * rate_loss_factor(snap.M_v[v], i_max_k)
        for k, P in enumerate(ps.unicast_levels):
            metric = snap.Q_v[v] * rate[k] - snap.Z * P
            if metric > best:
                best_m, best = space.repair(v, k), metric
    if best_m is None or (ps.includes_zero and best < 0):
        return space.idle_index
    return best_m


@given(
    st.lists(QUEUE, min_size=0, max_size=3),
    st.lists(QUEUE, min_size=0, max_size=2),
    st.lists(st.tuples(QUEUE, st.sampled_from([0.0, 12.5, 40.0])), min_size=0, max_size=3),
    st.integers(0, 1000).map(float),
    st.integers(0, 2 ** 16),
    st.booleans(),
)
def test_decision_matches_loop_over_actions(Q_u, Q_g, repair, Z, draw_seed, includes_zero):
    r = np.random.default_rng(draw_seed)
    ps = PowerSet([0.5, 1.0, 2.0], 1.0, includes_zero=includes_zero)
    G, V = len(Q_g), len(repair)
    snap = SchedulerSnapshot(
        Z=Z,
        Q_u=Q_u,
        M_u=np.full(len(Q_u), 40.0),
        unicast_expected=np.sort(r.uniform(0, 5, size=(len(Q_u), ps.O)), axis=1),
        Q_g=Q_g,
        M_g=np.full(G, 40.0),
        n_g=r.integers(1, 20, size=G),
        sum_lengths=r.integers(10, 400, size=G),
        Q_v=[q for q, _ in repair],
        M_v=[m for _, m in repair],
        repair_expected=np.sort(r.uniform(0, 5, size=(V, ps.O)), axis=1),
    )
    assert nc_rc_decide(snap, ps, 5).m == _decide_by_loop(snap, ps, 5)


def test_fixed_rate_uses_goodput():
    snap = SchedulerSnapshot(
        Z=0.0,
        Q_u=[10.0, 10.0],
        M_u=[40.0, 40.0],
        unicast_goodput=[[2.0], [3.0]],
        unicast_rate=[[2.5], [4.0]],
        Q_g=[5.0],
        M_g=[40.0],
        group_goodput=[4.0],
        group_rate=[5.0],
    )
    # unicast 10 * 3 = 30 against the group at 5 * 5 before its first code
    action, rate = fixed_rate_decide(snap, ONE_LEVEL, 5)
    assert action.flow == 1
    assert rate == 4.0


def test_fixed_rate_schedules_groups_on_session_rate():
    snap = SchedulerSnapshot(
        Z=0.0,
        Q_u=[10.0],
        M_u=[40.0],
        unicast_goodput=[[3.0]],
        unicast_rate=[[4.0]],
        Q_g=[10.0],
        M_g=[40.0],
        n_g=[4],
        sum_lengths=[40],
        group_goodput=[1.0],
        group_rate=[2.5],
    )
    # measured 4 * 40 / 40 = 4 bits/slot, not the packet goodput of 1
    action, rate = fixed_rate_decide(snap, ONE_LEVEL, 5)
    assert action.kind == KIND_MULTICAST
    assert action.metric == pytest.approx(40.0)
    assert rate == 2.5


def test_fixed_rate_idle_has_no_code_rate():
    snap = SchedulerSnapshot(Z=2.0, Q_g=[0.0], M_g=[40.0], group_rate=[5.0])
    action, rate = fixed_rate_decide(snap, PowerSet([1.0], 1.0), 5)
    assert action.idle
    assert rate == 0.0


def test_get_policy():
    assert get_policy(POLICY_FIXED_RATE, ONE_LEVEL, 5).name == POLICY_FIXED_RATE
    assert get_policy(POLICY_UNICAST_ONLY, ONE_LEVEL, 5).name == POLICY_UNICAST_ONLY
    action, rate = get_policy(POLICY_NC_RC, ONE_LEVEL, 5).decide(_snapshot([1.0], [[4.5]]))
    assert rate is None and action.flow == 0
    with pytest.raises(ValueError):
        get_policy("round_robin", ONE_LEVEL, 5)


def test_genie_removes_rate_loss():
    cfg = sim_config(static_channel(unicast_snr_db=[SNR_MI4]), levels=(1.0,), includes_zero=False, lam=1.0)
    assert genie_region_rate(cfg) == pytest.approx(4.0, abs=1e-6)
