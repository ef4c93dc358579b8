import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import curve_fit

from cmos_snn.synapse import (BCM_THETA1, BCM_THETA2, DEFAULT_MAP, DEFAULT_STDP, StdpParams,
                              SynapseState, WeightMap, apply_spikes, bcm_curve, bcm_drift,
                              bcm_theta, conductance, decay_traces, delta_w_curve,
                              find_zero_crossing, pairing_drift, poisson_train, simulate_pair)

DT = 10e-9


def nn_drift_oracle(p: StdpParams, pre, post) -> float:
    """Nearest-neighbour pairing by direct search, unclamped.

    Each post samples the latest earlier pre; each pre samples the latest
    earlier post, provided it lies inside the pairing window.  Assumes no
    coincident pre/post times.
    """
    pre, post = np.sort(pre), np.sort(post)
    g = p.step_gain
    total = 0.0
    i = np.searchsorted(pre, post, side="left") - 1
    ok = i >= 0
    lag = post[ok] - pre[i[ok]]
    total += g * p.a_plus * np.exp(-lag[lag < p.pot_cutoff] / p.tau_plus).sum()
    j = np.searchsorted(post, pre, side="left") - 1
    ok = j >= 0
    lag = pre[ok] - post[j[ok]]
    total -= g * p.a_minus * np.exp(-lag[lag < p.dep_cutoff] / p.tau_minus).sum()
    return total


def test_closed_form_matches_state_machine():
    lags = np.arange(-700, 701, 7) * DT
    for lag in lags:
        sim = simulate_pair(DEFAULT_STDP, None, lag, DT)
        assert sim == pytest.approx(delta_w_curve(DEFAULT_STDP, lag), rel=1e-9, abs=1e-15)


def test_sign_structure():
    assert delta_w_curve(DEFAULT_STDP, 1e-6) > 0
    assert delta_w_curve(DEFAULT_STDP, -1e-6) < 0
    assert delta_w_curve(DEFAULT_STDP, 0.0) == 0.0
    assert simulate_pair(DEFAULT_STDP, None, 0.0, DT) == 0.0
    # beyond the cutoff window nothing happens
    assert delta_w_curve(DEFAULT_STDP, 6e-6) == 0.0
    assert delta_w_curve(DEFAULT_STDP, -6e-6) == 0.0


@pytest.mark.parametrize("tau_plus,tau_minus", [(1e-6, 1e-6), (0.6e-6, 1.5e-6)])
def test_exponential_fit_recovers_time_constants(tau_plus, tau_minus):
    p = StdpParams(tau_plus=tau_plus, tau_minus=tau_minus)
    lags = np.arange(10, 300, 10) * DT
    ltp = np.array([simulate_pair(p, None, t, DT) for t in lags])
    ltd = np.array([simulate_pair(p, None, -t, DT) for t in lags])

    def expo(t, a, tau):
        return a * np.exp(-t / tau)

    (_, tp), _ = curve_fit(expo, lags, ltp, p0=(0.5, 0.8e-6))
    (_, tm), _ = curve_fit(expo, lags, -ltd, p0=(0.5, 0.8e-6))
    assert tp == pytest.approx(tau_plus, rel=0.02)
    assert tm == pytest.approx(tau_minus, rel=0.02)


def test_staircase_until_clamp():
    s = SynapseState.initial(DEFAULT_MAP)
    levels = [float(s.v_g)]
    t = 0.0
    for _ in range(8):
        s = decay_traces(s, DEFAULT_STDP, 10e-6)  # traces fully decayed between pairs
        s = apply_spikes(s, DEFAULT_STDP, DEFAULT_MAP, t, True, False)
        s = decay_traces(s, DEFAULT_STDP, 1e-6)
        s = apply_spikes(s, DEFAULT_STDP, DEFAULT_MAP, t + 1e-6, False, True)
        levels.append(float(s.v_g))
        t += 20e-6
    steps = np.diff(levels)
    hit = levels.index(DEFAULT_MAP.v_hi)
    assert hit >= 2
    assert np.all(steps[:hit] > 0)
    assert np.all(np.array(levels[hit:]) == DEFAULT_MAP.v_hi)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.booleans(), st.integers(1, 300)), max_size=60),
       st.floats(1.1, 1.6))
def test_gate_voltage_never_leaves_bounds(events, v0):
    s = SynapseState.initial(DEFAULT_MAP, v_g=v0)
    t = 0.0
    for pre, post, gap in events:
        s = decay_traces(s, DEFAULT_STDP, gap * DT)
        t += gap * DT
        s = apply_spikes(s, DEFAULT_STDP, DEFAULT_MAP, t, pre, post)
        assert DEFAULT_MAP.v_lo <= float(s.v_g) <= DEFAULT_MAP.v_hi


def test_coincident_pair_changes_nothing():
    s = SynapseState.initial(DEFAULT_MAP, v_g=1.3)
    s.trace_pre = np.array(1.0)
    s.trace_post = np.array(1.0)
    s2 = apply_spikes(s, DEFAULT_STDP, DEFAULT_MAP, 0.0, True, True)
    assert float(s2.v_g) == 1.3
    assert float(s2.trace_pre) == DEFAULT_STDP.a_plus


def test_conductance_endpoints_exact_and_linear():
    w = DEFAULT_MAP
    assert conductance(w, w.v_lo) == w.g_hrs
    assert conductance(w, w.v_hi) == w.g_lrs
    mid = conductance(w, 0.5 * (w.v_lo + w.v_hi))
    assert mid == pytest.approx(0.5 * (w.g_hrs + w.g_lrs), rel=1e-12)
    with pytest.raises(ValueError):
        conductance(w, 1.7)
    with pytest.raises(ValueError):
        WeightMap(v_lo=1.6, v_hi=1.1)


def test_bcm_theta_values():
    assert bcm_theta(0.267, -0.175, 0.7, 1.7) == pytest.approx(1.010, abs=5e-4)
    assert bcm_theta(0.19, -0.138, 0.7, 1.7) == pytest.approx(1.642, abs=5e-4)
    assert BCM_THETA1.theta() == bcm_theta(0.267, -0.175, 0.7, 1.7)
    with pytest.raises(ZeroDivisionError):
        bcm_theta(0.2, -0.2, 1.0, 1.0)


def test_bcm_theta_is_root_of_poisson_expectation():
    for p in (BCM_THETA1, BCM_THETA2):
        th = p.theta()
        e = p.a_plus / (th + 1 / p.tau_plus) - p.a_minus / (th + 1 / p.tau_minus)
        assert abs(e) < 1e-12


def test_pairing_drift_matches_search_oracle():
    rng = np.random.default_rng(3)
    p = BCM_THETA1
    pre = poisson_train(1.3, 500.0, rng)
    post = poisson_train(1.3, 500.0, rng)
    assert pairing_drift(p, pre, post) == pytest.approx(nn_drift_oracle(p, pre, post), rel=1e-9)


def test_pairing_window():
    for steps in (499, 501, 650):
        inside = steps < 500
        for sign in (1, -1):
            dw = simulate_pair(DEFAULT_STDP, None, sign * steps * DT, DT)
            assert (dw != 0) == inside
    assert math.isinf(BCM_THETA1.pot_cutoff) and math.isinf(BCM_THETA2.dep_cutoff)


def test_windowed_drift_matches_search_oracle():
    rng = np.random.default_rng(8)
    p = DEFAULT_STDP
    pre = poisson_train(2e5, 2e-3, rng)
    post = poisson_train(2e5, 2e-3, rng)
    got = pairing_drift(p, pre, post)
    assert got == pytest.approx(nn_drift_oracle(p, pre, post), rel=1e-9)
    assert got != pytest.approx(nn_drift_oracle(StdpParams(t_max_pot=math.inf,
                                                           t_max_dep=math.inf), pre, post))


def test_pairing_drift_matches_stepped_synapse():
    p = DEFAULT_STDP
    rng = np.random.default_rng(5)
    n = 3000
    pre = rng.random(n) < 0.01
    post = rng.random(n) < 0.01
    s = SynapseState.initial(DEFAULT_MAP)
    for k in range(n):
        if k:
            s = decay_traces(s, p, DT)
        s = apply_spikes(s, p, DEFAULT_MAP, k * DT, pre[k], post[k])
    ref = float(s.v_g) - DEFAULT_MAP.v_lo
    got = pairing_drift(p, np.flatnonzero(pre) * DT, np.flatnonzero(post) * DT, DEFAULT_MAP)
    assert got == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_bcm_drift_tracks_poisson_expectation():
    p = BCM_THETA2
    for f in (0.5, 3.0):
        expected = f * f * p.step_gain * (p.a_plus / (f + 1 / p.tau_plus)
                                          - p.a_minus / (f + 1 / p.tau_minus))
        got = bcm_drift(p, f, events=40000)
        assert got == pytest.approx(expected, rel=0.1)


def test_bcm_drift_errors_and_determinism():
    with pytest.raises(ValueError):
        bcm_drift(BCM_THETA1, 0.0)
    with pytest.raises(ValueError):
        bcm_drift(BCM_THETA1, 1.0, window=5.0)
    with pytest.raises(ValueError):
        bcm_drift(BCM_THETA1, 1.0, protocol="burst")
    assert bcm_drift(BCM_THETA1, 1.5, seed=4) == bcm_drift(BCM_THETA1, 1.5, seed=4)


def test_periodic_offset_protocol_closed_form():
    p = BCM_THETA1
    f = 2.0
    T = 1 / f
    # post lags pre by T/2: every post sees a pre T/2 earlier and vice versa
    per_period = p.a_plus * math.exp(-T / 2 / p.tau_plus) - p.a_minus * math.exp(-T / 2 / p.tau_minus)
    got = bcm_drift(p, f, protocol="periodic-offset", window=200.0)
    n_pairs = 400
    expected = p.step_gain * (n_pairs * per_period + p.a_minus * math.exp(-T / 2 / p.tau_minus)) / 200.0
    assert got == pytest.approx(expected, rel=1e-9)


def test_zero_crossing_helper():
    f = np.array([0.5, 1.0, 1.5, 2.0])
    assert find_zero_crossing(f, [-1.0, -0.5, 0.5, 1.0]) == pytest.approx(1.25)
    assert find_zero_crossing(f, [1.0, 1.0, 1.0, 1.0]) is None
    assert len(bcm_curve(BCM_THETA1, [0.5, 1.0], events=500)) == 2
