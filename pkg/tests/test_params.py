import pytest
from hypothesis import given, strategies as st

from ebsim.params import (adaptive_c, build_report, check_stability,
                          delta_from_ticks, epsilon_opt, sigma_max)
from ebsim.topology import make_random_geometric, make_regular_grid


def test_epsilon_opt_zero_airtime():
    assert epsilon_opt(0, 17, 0, 10000) == 0.0


def test_epsilon_opt_substitution():
    # 40 ms slots, 20 neighbours, 10 s period -> 800 / 20000
    assert epsilon_opt(40, 20, 0, 10000) == pytest.approx(0.04)
    assert epsilon_opt(50, 4, 0, 10000) == pytest.approx(0.01)


def test_epsilon_opt_clamped():
    assert epsilon_opt(1000, 100, 0, 1000) == 0.5
    with pytest.raises(ValueError):
        epsilon_opt(10, 4, 0, 0)


@given(st.integers(0, 100), st.integers(0, 50), st.integers(0, 1000),
       st.integers(1, 10**6))
def test_epsilon_opt_monotone(beta, n, nu, t):
    base = epsilon_opt(beta, n, nu, t)
    assert epsilon_opt(beta + 1, n, nu, t) >= base
    assert epsilon_opt(beta, n + 1, nu, t) >= base
    assert epsilon_opt(beta, n, nu + 1, t) >= base
    assert epsilon_opt(beta, n, nu, t + 1) <= base


def test_sigma_max():
    assert sigma_max(0.1, 0, 10000) == pytest.approx(1 / 9)
    assert sigma_max(0.01, 0, 10000) == pytest.approx(0.01 / 0.99)
    # delay eating the whole window: 2 nu / T = epsilon
    assert sigma_max(0.1, 500, 10000) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        sigma_max(1.0, 0, 10000)


def test_adaptive_c_substitution():
    assert adaptive_c(50, 4, 80) == 160
    assert adaptive_c(50, 20, 80) == 800
    assert adaptive_c(50, 1, 100) == 50


@given(st.integers(1, 500), st.integers(0, 100))
def test_adaptive_c_full_threshold(c0, n):
    assert adaptive_c(c0, n, 100) == c0 * n


def test_adaptive_c_validation():
    with pytest.raises(ValueError):
        adaptive_c(0, 4, 80)
    with pytest.raises(ValueError):
        adaptive_c(50, -1, 80)
    with pytest.raises(ValueError):
        adaptive_c(50, 4, 101)


def test_delta_from_ticks():
    assert delta_from_ticks(100, 10000) == pytest.approx(0.01)
    with pytest.raises(ValueError):
        delta_from_ticks(100, 0)


def test_check_stability():
    stable, margin = check_stability(0.1, 0.01, 0.01)
    assert stable and margin > 0
    # epsilon = 2*delta fails the strict requirement
    stable, _ = check_stability(0.1, 0.01, 0.05)
    assert not stable
    stable, margin = check_stability(0.5, 0.99, 0.0)
    assert stable and margin == pytest.approx(0.01)


@given(st.floats(0.001, 0.5), st.floats(0.0001, 0.999))
def test_check_stability_zero_delay_matches_bound(eps, sigma):
    stable, _ = check_stability(eps, sigma, 0.0)
    assert stable == (sigma < eps / (1.0 - eps))


def test_build_report_stable_case():
    r = build_report(epsilon=0.1, sigma=0.01, t=10000, c0=50, nu=0, s_th=80)
    assert r.stable
    assert r.sigma_max == pytest.approx(1 / 9)
    assert any("stable" in line for line in r.lines())


def test_build_report_unstable_and_warning():
    r = build_report(epsilon=0.01, sigma=0.02, t=1000, c0=50, nu=0, s_th=80)
    assert not r.stable and r.margin < 0


def test_build_report_no_valid_sigma_warning():
    r = build_report(epsilon=0.1, sigma=0.01, t=10000, c0=50, nu=500, s_th=80)
    assert any("no valid sigma" in w for w in r.warnings)


def test_build_report_adaptive_table():
    topo = make_regular_grid(5, 5, wraparound=True)
    r = build_report(epsilon=0.05, sigma=0.01, t=10000, c0=50, nu=0,
                     s_th=80, topology=topo, adaptive=True)
    assert r.adaptive_c_per_node == {nid: 160 for nid in topo.node_ids}
    assert any("adaptive C range = 160..160" in line for line in r.lines())


def test_build_report_epsilon_below_opt_warning():
    topo = make_random_geometric(87, 0.320408, seed=7)
    r = build_report(epsilon=0.001, sigma=0.0005, t=30000, c0=50, nu=0,
                     s_th=80, topology=topo, adaptive=True)
    assert any("below epsilon_opt" in w for w in r.warnings)
