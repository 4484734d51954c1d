import numpy as np
import pytest
from hypothesis import given, strategies as st

from ratelesscast.queueing import (
    DataQueue,
    PowerQueue,
    draw_arrivals,
    step_data_queue,
    step_power_queue,
    average_power_bound,
    ARRIVALS_DETERMINISTIC,
    ARRIVALS_POISSON,
)


def test_zero_rate_has_no_arrivals(rng):
    assert draw_arrivals(rng, 0.0) == 0
    assert not np.any(draw_arrivals(rng, 0.0, size=1000))


def test_deterministic_arrivals(rng):
    assert draw_arrivals(rng, 7.0, ARRIVALS_DETERMINISTIC) == 7
    a = draw_arrivals(rng, [7.0, 2.0], ARRIVALS_DETERMINISTIC, size=(5, 2))
    assert a.shape == (5, 2)
    assert np.all(a[:, 0] == 7) and np.all(a[:, 1] == 2)


@pytest.mark.slow
def test_poisson_arrival_mean(rng):
    a = draw_arrivals(rng, 7.0, ARRIVALS_POISSON, size=1000000)
    assert np.mean(a) == pytest.approx(7.0, abs=0.01)


def test_unknown_arrival_mode(rng):
    with pytest.raises(ValueError):
        draw_arrivals(rng, 1.0, "bursty")


@pytest.mark.parametrize(
    "Q, served, arrivals, expected",
    [(100.0, True, 10, 70.0), (30.0, True, 0, 0.0), (50.0, False, 5, 55.0)],
)
def test_data_queue_examples(Q, served, arrivals, expected):
    q = DataQueue(1.0, 40, Q=Q)
    step_data_queue(q, served, 40.0, arrivals)
    assert q.Q == expected
    assert q.consistent()


@given(
    st.lists(
        st.tuples(st.booleans(), st.floats(0, 60), st.integers(0, 50)),
        max_size=50,
    )
)
def test_data_queue_recursion(steps):
    q = DataQueue(1.0, 40)
    for served, bits, arrivals in steps:
        before = q.Q
        step_data_queue(q, served, bits, arrivals)
        assert q.Q == pytest.approx(max(before - (bits if served else 0.0), 0.0) + arrivals)
        assert q.Q >= 0
    assert q.consistent()


def test_power_queue_examples():
    z = PowerQueue(2.0)
    step_power_queue(z, 3.0)
    assert z.Z == 3.0
    z = PowerQueue(2.0, Z=5.0)
    step_power_queue(z, 0.0)
    assert z.Z == 3.0


def test_power_at_budget_is_fixed_point():
    z = PowerQueue(2.0)
    for _ in range(100):
        step_power_queue(z, 2.0)
        assert z.Z == 2.0


@given(st.lists(st.sampled_from([0.0, 0.5, 1.0, 2.0, 4.0]), min_size=1, max_size=200))
def test_average_power_bound(powers):
    z = PowerQueue(1.0)
    for P in powers:
        step_power_queue(z, P)
    assert z.W / z.slots <= average_power_bound(z) + 1e-9
