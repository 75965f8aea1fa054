import math

import pytest
from hypothesis import given, strategies as st

from ebsim.core import (CouplingParams, MetricsSnapshot, advance_remaining_ticks,
                        avg_phase_advancement, avg_phase_difference,
                        circular_distance, in_setw, jump_remaining,
                        phase_advance)
from ebsim.topology import make_regular_grid, make_complete


def test_coupling_params_validation():
    with pytest.raises(ValueError):
        CouplingParams(0.0, 0.01)
    with pytest.raises(ValueError):
        CouplingParams(0.6, 0.01)
    with pytest.raises(ValueError):
        CouplingParams(0.01, 0.0)
    with pytest.raises(ValueError):
        CouplingParams(0.01, 1.0)
    assert CouplingParams(0.5, 0.5).stable  # 0.5 < 0.5/0.5


def test_phase_advance_mid_period():
    assert phase_advance(0.5, CouplingParams(0.01, 0.01)) == pytest.approx(0.995)


def test_phase_advance_inside_window_unchanged():
    p = CouplingParams(0.01, 0.01)
    assert phase_advance(0.005, p) == 0.005
    assert phase_advance(0.995, p) == 0.995


def test_phase_advance_wide_window_edge():
    # phi = 0.9 with epsilon = 0.2 sits at/above the upper window edge
    # (1 - eps = 0.8), so the "otherwise" branch applies and the phase is
    # left untouched -- the advancement rule is strict on both edges.
    assert phase_advance(0.9, CouplingParams(0.2, 0.1)) == 0.9


def test_jump_remaining():
    assert jump_remaining(0.5, 0.01) == pytest.approx(0.005)
    assert jump_remaining(0.9, 0.1) == pytest.approx(0.01)


def test_in_setw():
    assert in_setw(0.0, 0.01)
    assert not in_setw(0.5, 0.01)
    assert in_setw(0.991, 0.01)
    assert in_setw(0.01, 0.01)       # inclusive edges
    assert in_setw(0.99, 0.01)


def test_advance_remaining_ticks_basic():
    assert advance_remaining_ticks(500, 0.01) == 5
    assert advance_remaining_ticks(1000, 0.01) == 10


def test_advance_remaining_ticks_floors_at_one():
    # tiny sigma would round to zero ticks; a reaction never fires
    # within the same tick
    assert advance_remaining_ticks(1000, 0.0004) == 1


def test_advance_remaining_ticks_never_increases():
    # rounding half-up could exceed the old remaining for sigma near 1
    assert advance_remaining_ticks(10, 0.95) == 10
    assert advance_remaining_ticks(1, 0.5) == 1
    assert advance_remaining_ticks(0, 0.5) == 0


@given(st.floats(0.0, 1.0), st.floats(0.001, 0.5), st.floats(0.001, 0.999))
def test_phase_advance_monotone(phi, eps, sigma):
    assert phase_advance(phi, CouplingParams(eps, sigma)) >= phi


@given(st.floats(0.0, 1.0), st.floats(0.001, 0.5), st.floats(0.001, 0.999))
def test_phase_advance_window_idempotent(phi, eps, sigma):
    p = CouplingParams(eps, sigma)
    if in_setw(phi, eps):
        assert phase_advance(phi, p) == phi


@given(st.floats(0.0, 1.0), st.floats(0.001, 0.5), st.floats(0.001, 0.999))
def test_phase_advance_lands_near_fire(phi, eps, sigma):
    # outside the window, the remaining phase after the jump is
    # sigma * (1 - phi) <= sigma * (1 - eps)
    p = CouplingParams(eps, sigma)
    if eps < phi < 1.0 - eps:
        rem = 1.0 - phase_advance(phi, p)
        assert rem == pytest.approx(sigma * (1.0 - phi))
        assert rem <= sigma * (1.0 - eps) + 1e-12


@given(st.integers(0, 10**6), st.floats(0.0001, 0.999))
def test_advance_remaining_ticks_bounds(remaining, sigma):
    new = advance_remaining_ticks(remaining, sigma)
    assert new <= remaining
    if remaining >= 1:
        assert new >= 1


def test_circular_distance():
    assert circular_distance(0.99, 0.01) == pytest.approx(0.02)
    assert circular_distance(0.2, 0.4) == pytest.approx(0.2)
    assert circular_distance(0.0, 0.5) == pytest.approx(0.5)


def test_avg_phase_difference_pair():
    topo = make_complete(2)
    assert avg_phase_difference({0: 0.2, 1: 0.4}, topo, circular=False) == pytest.approx(0.2)


def test_avg_phase_difference_all_equal():
    topo = make_regular_grid(3, 3, wraparound=True)
    phases = {i: 0.37 for i in topo.node_ids}
    assert avg_phase_difference(phases, topo, circular=False) == 0.0
    assert avg_phase_difference(phases, topo, circular=True) == 0.0


def test_avg_phase_difference_torus_against_double_loop():
    topo = make_regular_grid(5, 5, wraparound=True)
    phases = {i: i / 25 for i in topo.node_ids}
    # independent brute-force over all (i, j in N_i) pairs
    total = 0.0
    for i in topo.node_ids:
        neigh = topo.neighbors(i)
        acc = 0.0
        for j in neigh:
            d = abs(phases[i] - phases[j])
            acc += min(d, 1.0 - d)
        total += acc / len(neigh)
    expected = total / 25
    assert avg_phase_difference(phases, topo, circular=True) == pytest.approx(expected)


def test_avg_phase_difference_rejects_isolated():
    topo = make_complete(2)
    topo.adjacency[0].clear()
    topo.adjacency[1].clear()
    with pytest.raises(ValueError):
        avg_phase_difference({0: 0.1, 1: 0.2}, topo, circular=True)


@given(st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4))
def test_avg_phase_difference_circular_bounded(vals):
    topo = make_complete(4)
    phases = dict(enumerate(vals))
    d = avg_phase_difference(phases, topo, circular=True)
    assert 0.0 <= d <= 0.5


def test_avg_phase_advancement():
    assert avg_phase_advancement([], 3) == 0.0
    assert avg_phase_advancement([(0.5, 0.995)], 2) == pytest.approx(0.2475)
    with pytest.raises(ValueError):
        avg_phase_advancement([], 0)


def test_metrics_snapshot_validation():
    MetricsSnapshot(0.1, 0.0, 3)
    with pytest.raises(ValueError):
        MetricsSnapshot(-0.1, 0.0, 3)
    with pytest.raises(ValueError):
        MetricsSnapshot(0.1, 0.0, -1)
