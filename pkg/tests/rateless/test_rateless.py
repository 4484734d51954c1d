import csv

import numpy as np
import pytest

from ratelesscast.rateless import (
    UnicastReception,
    MulticastReception,
    NoCompletedCodesError,
    step_unicast,
    step_multicast,
    mean_code_length,
    member_mean_throughput,
    export_lengths,
)
from ratelesscast.region import lbar_oracle_exact


def test_unicast_accumulates():
    state = UnicastReception(40)
    state.R = 30.0
    state, acked = step_unicast(state, True, 5.0)
    assert state.R == 35.0
    assert not acked


def test_unicast_decodes_and_resets():
    state = UnicastReception(40)
    state.R = 36.0
    state, acked = step_unicast(state, True, 5.0)
    assert acked
    assert state.R == 0.0
    assert state.n == 2
    assert state.length_history == [1]


def test_unicast_not_scheduled_is_unchanged():
    state = UnicastReception(40)
    state.R, state.T = 12.0, 3
    state, acked = step_unicast(state, False, 5.0)
    assert (state.R, state.T, state.n, acked) == (12.0, 3, 1, False)


def test_unicast_overhead_raises_threshold():
    state = UnicastReception(40, epsilon=0.1)
    for _ in range(8):
        state, acked = step_unicast(state, True, 5.0)
    # 40 bits of MI are not enough for 44
    assert not acked
    state, acked = step_unicast(state, True, 5.0)
    assert acked and state.length_history == [9]


def test_single_member_multicast_matches_unicast(rng):
    uni = UnicastReception(40)
    multi = MulticastReception(40, 1)
    for mi in rng.choice([0.0, 2.0, 3.5, 5.0], size=2000):
        _, a = step_unicast(uni, True, mi)
        _, b = step_multicast(multi, True, [mi])
        assert a == b
    assert uni.length_history == multi.length_history


def test_multicast_partial_decode():
    state = MulticastReception(40, 2)
    state.R = np.array([38.0, 20.0])
    state, acked = step_multicast(state, True, [5.0, 5.0])
    assert not acked
    assert list(state.decoded_mask) == [True, False]
    assert state.R[1] == 25.0


def test_decoded_member_stops_listening():
    state = MulticastReception(40, 2)
    state.R = np.array([38.0, 20.0])
    step_multicast(state, True, [5.0, 5.0])
    step_multicast(state, True, [5.0, 5.0])
    assert state.R[0] == 43.0


def test_deterministic_multicast_code_length():
    state = MulticastReception(40, 3)
    for _ in range(8 * 20):
        step_multicast(state, True, [5.0, 5.0, 5.0])
    assert state.length_history == [8] * 20
    assert state.Upsilon == 160
    assert state.completed == 20


def test_untracked_member_does_not_delay_session():
    state = MulticastReception(40, 2)
    state.set_tracked([0])
    for _ in range(8):
        state, acked = step_multicast(state, True, [5.0, 1.0])
    assert acked
    assert state.length_history == [8]
    assert np.isnan(state.per_member_lengths[0][1])
    assert list(state.settled_registers) == [40.0, 8.0]


def test_mean_code_length():
    assert mean_code_length([8, 8, 8]) == 8.0
    with pytest.raises(NoCompletedCodesError):
        mean_code_length([])


def test_member_mean_throughput():
    state = MulticastReception(40, 2)
    state.per_member_lengths = [np.array([8.0, 10.0]), np.array([8.0, np.nan])]
    assert member_mean_throughput(state, 0) == pytest.approx(5.0)
    assert member_mean_throughput(state, 1) == pytest.approx(4.0)


@pytest.mark.slow
@pytest.mark.parametrize("members", [1, 2])
def test_mean_code_length_matches_chain_oracle(rng, members):
    state = MulticastReception(40, members)
    codes = 30000
    while state.completed < codes:
        step_multicast(state, True, rng.choice([2.0, 5.0], size=members))
    exact = lbar_oracle_exact({2.0: 0.5, 5.0: 0.5}, 40, member_count=members)
    assert mean_code_length(state.length_history) == pytest.approx(exact, rel=0.01)


def test_export_lengths(tmp_path):
    state = MulticastReception(40, 2)
    state.set_tracked([0])
    for _ in range(16):
        step_multicast(state, True, [5.0, 1.0])
    path = export_lengths(state, str(tmp_path / "lengths" / "g0.csv"))
    with open(path) as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["code_index", "L", "L_0", "L_1"]
    assert rows[1:] == [["1", "8", "8", ""], ["2", "8", "8", ""]]
