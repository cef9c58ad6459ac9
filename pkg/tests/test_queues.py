import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tilestream.fixtures import EXAMPLE_BUDGET_INPUTS, EXAMPLE_BUDGETS, EXAMPLE_CONFIGS
from tilestream.queues import (
    SICKNESS_OVERFLOW,
    STALL,
    bandwidth_budget,
    raw_bandwidth_budget,
    update_packet_queue,
    update_sickness_queue,
)

REL = 1e-12

def test_packet_queue_steady_when_download_matches_playback():
    u = update_packet_queue(0.5, 1.0, 4.0, 1.0, 0, 0.1, gamma=6.0, Bt=6.0)
    assert u.value == pytest.approx(0.5, rel=REL) and u.event is None

def test_packet_queue_hand_value():
    u = update_packet_queue(0.5, 1.0, 4.0, 1.0, 0, 0.1, gamma=4.0, Bt=8.0)
    assert u.value == pytest.approx(0.625, rel=REL)

def test_packet_queue_stall():
    u = update_packet_queue(0.05, 1.0, 4.0, 1.0, 0, 0.1, gamma=24.0, Bt=8.0)
    assert u.value == 0.0 and u.event == STALL

def test_packet_queue_clamps_at_full_without_event():
    u = update_packet_queue(0.95, 1.0, 4.0, 1.0, 0, 0.1, gamma=0.0, Bt=8.0)
    assert u.value == 1.0 and u.event is None

@pytest.mark.parametrize("cfg,expected", list(zip(EXAMPLE_CONFIGS, EXAMPLE_BUDGETS)))
def test_example_budgets(cfg, expected):
    i = EXAMPLE_BUDGET_INPUTS
    s, y = cfg
    b = bandwidth_budget(i["qp_prev"], i["Bt"], i["T"], i["Cp"], i["lam"], s, y, i["k_dof"], i["bw_unit"])
    assert b == expected

def test_budget_at_target_is_raw_bandwidth():
    assert bandwidth_budget(0.5, 7.3, 1.0, 4.0, 0.5, 1.0, 0, 0.1, 0.1) == 73

def test_budget_floor_at_zero():
    # qp below lam - T/Cp makes the raw value negative
    assert raw_bandwidth_budget(0.2, 8.0, 1.0, 4.0, 0.5, 1.0, 0, 0.1) < 0
    assert bandwidth_budget(0.2, 8.0, 1.0, 4.0, 0.5, 1.0, 0, 0.1, 1.0) == 0

def test_sickness_decay_only():
    u = update_sickness_queue(0.3, 0.0, 0.0, 0.0, 0.85, 1, 0.1, 1000.0, 0.05)
    assert u.value == pytest.approx(0.3 - 0.00005, rel=REL)

def test_sickness_full_rotation():
    u = update_sickness_queue(0.3, 100.0, 100.0, 0.5, 1.0, 0, 0.1, 1000.0, 0.05)
    assert u.value - 0.3 == pytest.approx(0.00145, rel=1e-9)

def test_sickness_shrunk_and_blurred():
    u = update_sickness_queue(0.3, 100.0, 100.0, 0.5, 0.7, 1, 0.1, 1000.0, 0.05)
    assert u.value - 0.3 == pytest.approx(0.000895, rel=1e-9)

def test_sickness_clamps_and_flags_overflow():
    u = update_sickness_queue(0.9999, 100.0, 100.0, 1.0, 1.0, 0, 0.1, 10.0, 0.0)
    assert u.value == 1.0 and u.event == SICKNESS_OVERFLOW
    u = update_sickness_queue(0.0, 0.0, 0.0, 0.0, 1.0, 0, 0.1, 1000.0, 0.05)
    assert u.value == 0.0 and u.event is None

def test_invalid_inputs():
    with pytest.raises(ValueError):
        update_packet_queue(0.5, 1.0, 4.0, 1.0, 0, 0.1, 1.0, 0.0)
    with pytest.raises(ValueError):
        update_sickness_queue(0.5, 0, 0, 0, 1.0, 0, 0.1, 0.0, 0.05)

def _sickness_inputs(rng, n):
    return dict(
        qs=rng.uniform(0, 1, n),
        wy=rng.uniform(0, 200, n),
        wp=rng.uniform(0, 200, n),
        f=rng.uniform(0, 1, n),
        s=rng.uniform(0.7, 1.0, n),
        k=rng.uniform(0.01, 0.5, n),
        cs=rng.uniform(1, 2000, n),
        om=rng.uniform(0, 0.5, n),
    )

def test_sickness_monotonicity_random(rng):
    n = 10_000
    x = _sickness_inputs(rng, n)
    bump = rng.uniform(0, 1, n)
    for k in range(n):
        base = dict(qs_prev=x["qs"][k], omega_y=x["wy"][k], omega_p=x["wp"][k], expected_flow=x["f"][k],
                    s_fov=x["s"][k], y_dof=0, k_dof=x["k"][k], Cs=x["cs"][k], Omega=x["om"][k])
        q0 = update_sickness_queue(**base).value
        up = lambda **kw: update_sickness_queue(**{**base, **kw}).value  # noqa: E731
        assert up(omega_y=base["omega_y"] + 10 * bump[k]) >= q0
        assert up(omega_p=base["omega_p"] + 10 * bump[k]) >= q0
        assert up(expected_flow=min(1.0, base["expected_flow"] + bump[k])) >= q0
        assert up(s_fov=min(1.0, base["s_fov"] + 0.1 * bump[k])) >= q0
        assert up(y_dof=1) <= q0
        assert up(Omega=base["Omega"] + bump[k]) <= q0

def test_budget_monotone_in_interventions(rng):
    for _ in range(10_000):
        qp, bt = rng.uniform(0, 1), rng.uniform(0.1, 20)
        s_hi = rng.uniform(0.7, 1.0)
        s_lo = rng.uniform(0.7, s_hi)
        args = (qp, bt, 1.0, 4.0, 0.5)
        b = lambda s, y: bandwidth_budget(*args, s, y, 0.1, 0.01)  # noqa: E731
        assert b(s_lo, 0) >= b(s_hi, 0)
        assert b(s_hi, 1) >= b(s_hi, 0)

def test_packet_queue_monotone_in_fetch_size(rng):
    for _ in range(10_000):
        qp, bt, g = rng.uniform(0, 1), rng.uniform(0.1, 20), rng.uniform(0, 40)
        a = update_packet_queue(qp, 1.0, 4.0, 1.0, 0, 0.1, g, bt).value
        b = update_packet_queue(qp, 1.0, 4.0, 1.0, 0, 0.1, g + rng.uniform(0, 5), bt).value
        assert b <= a

@given(
    qp=st.floats(0.25, 1.0),
    bt=st.floats(0.1, 50),
    s=st.floats(0.7, 1.0),
    y=st.integers(0, 1),
)
def test_spending_raw_budget_lands_on_target(qp, bt, s, y):
    gamma = raw_bandwidth_budget(qp, bt, 1.0, 4.0, 0.5, s, y, 0.1)
    nxt = update_packet_queue(qp, 1.0, 4.0, s, y, 0.1, gamma, bt).value
    assert nxt >= 0.5 - 1e-12

@given(
    qs=st.floats(0, 1), wy=st.floats(-300, 300), wp=st.floats(-300, 300), f=st.floats(0, 1),
    s=st.floats(0.7, 1.0), y=st.integers(0, 1),
)
def test_updates_are_pure_and_bounded(qs, wy, wp, f, s, y):
    a = update_sickness_queue(qs, wy, wp, f, s, y, 0.1, 1000.0, 0.05)
    b = update_sickness_queue(qs, wy, wp, f, s, y, 0.1, 1000.0, 0.05)
    assert a == b and 0.0 <= a.value <= 1.0
    assert math.isfinite(a.value)
