import math

import pytest
from hypothesis import given, strategies as st

from hidden_influence.spacetime import (Event, FrameVelocity, TimeOrder, WitnessSearchError,
                                        find_witness_point, frame_time_order, in_future_lightcone,
                                        rhombus_witness_distance, witness_bound_fig2,
                                        witness_bound_fig3, witness_distance)

import oracles

S3 = math.sqrt(3)
coord = st.floats(-5, 5, allow_nan=False)


def rhombus(d, tA, tD, tB=0.0):
    return (Event("A", (0, 0, 0), tA), Event("B", (d / 2, S3 * d / 2, 0), tB),
            Event("C", (d / 2, -S3 * d / 2, 0), tB), Event("D", (d, 0, 0), tD))


# --- lightcones -------------------------------------------------------------

def test_lightcone_examples():
    o = Event("O", (0, 0, 0), 0)
    assert in_future_lightcone(Event("P", (0, 0, 0), 1), o)
    assert in_future_lightcone(Event("P", (1, 0, 0), 1), o)
    assert not in_future_lightcone(Event("P", (2, 0, 0), 1), o)
    assert not in_future_lightcone(Event("P", (0, 0, 0), -1), o)


def test_lightcone_rejects_bad_c():
    o = Event("O", (0, 0, 0), 0)
    with pytest.raises(ValueError):
        in_future_lightcone(o, o, c=0)


def test_event_validation():
    with pytest.raises(ValueError):
        Event("X", (0, 0), 0)
    with pytest.raises(ValueError):
        Event("X", (0, math.inf, 0), 0)


@given(st.tuples(coord, coord, coord, coord), st.tuples(coord, coord, coord, coord),
       st.floats(0.1, 3))
def test_lightcone_matches_oracle(a, b, c):
    A, B = Event("A", a[:3], a[3]), Event("B", b[:3], b[3])
    assert in_future_lightcone(B, A, c) == oracles.lightcone(b, a, c)


@given(st.tuples(coord, coord, coord, coord), st.lists(st.floats(0, 1), min_size=6, max_size=6),
       st.floats(0.2, 3))
def test_lightcone_transitive(e1, r, c):
    # build a timelike-or-null chain E1 -> E2 -> E3
    def step(e, dt, frac, ang):
        rad = frac * c * dt
        return (e[0] + rad * math.cos(ang), e[1] + rad * math.sin(ang), e[2], e[3] + dt)
    e2 = step(e1, 0.1 + r[0], r[1], 6 * r[2])
    e3 = step(e2, 0.1 + r[3], r[4], 6 * r[5])
    E1, E2, E3 = (Event(k, v[:3], v[3]) for k, v in zip("123", (e1, e2, e3)))
    # shrink slightly so rounding cannot push points off the boundary
    assume_ok = in_future_lightcone(E2, E1, c) and in_future_lightcone(E3, E2, c)
    if assume_ok:
        assert in_future_lightcone(E3, E1, c * (1 + 1e-12))


# --- boosted order ------------------------------------------------------------

def test_frame_order_examples():
    o = Event("O", (0, 0, 0), 0)
    assert frame_time_order(o, Event("P", (0, 0, 0), 1), FrameVelocity()) is TimeOrder.FUTURE
    assert frame_time_order(o, Event("P", (1, 0, 0), 0), FrameVelocity((0.5, 0, 0))) is TimeOrder.PAST
    assert frame_time_order(o, Event("P", (1, 0, 0), 0.5), FrameVelocity((0.5, 0, 0))) is TimeOrder.SIMULTANEOUS


def test_frame_order_rejects_superluminal_frame():
    o = Event("O", (0, 0, 0), 0)
    with pytest.raises(ValueError):
        frame_time_order(o, o, FrameVelocity((1, 0, 0)), c=1)


ev = st.tuples(coord, coord, coord, coord)
vel = st.tuples(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))


@given(ev, ev)
def test_frame_order_rest_frame_is_time_order(a, b):
    A, B = Event("A", a[:3], a[3]), Event("B", b[:3], b[3])
    got = frame_time_order(A, B, FrameVelocity())
    want = (TimeOrder.FUTURE if b[3] > a[3] else TimeOrder.PAST if b[3] < a[3]
            else TimeOrder.SIMULTANEOUS)
    assert got is want


@given(ev, ev, vel)
def test_frame_order_antisymmetric(a, b, u):
    A, B = Event("A", a[:3], a[3]), Event("B", b[:3], b[3])
    U = FrameVelocity(u)
    flip = {TimeOrder.PAST: TimeOrder.FUTURE, TimeOrder.FUTURE: TimeOrder.PAST,
            TimeOrder.SIMULTANEOUS: TimeOrder.SIMULTANEOUS}
    assert frame_time_order(B, A, U) is flip[frame_time_order(A, B, U)]


@given(ev, ev, vel)
def test_frame_order_sign_matches_lorentz_transform(a, b, u):
    s = oracles.boosted_dt(a, b, u)
    if abs(s) > 1e-9:
        got = frame_time_order(Event("A", a[:3], a[3]), Event("B", b[:3], b[3]), FrameVelocity(u))
        assert got is (TimeOrder.FUTURE if s > 0 else TimeOrder.PAST)


# --- closed-form bounds ---------------------------------------------------------

def test_fig2_bound_values():
    assert witness_bound_fig2(1, 0.1, 1) == pytest.approx(oracles.FIG2_CAPTION_SPOT, rel=1e-15)
    assert witness_bound_fig2(1, 0, 1) == 0
    with pytest.raises(ValueError):
        witness_bound_fig2(1, 0.25, 1)
    with pytest.raises(ValueError):
        witness_bound_fig2(1, -0.1, 1)


def test_fig3_bound_values():
    assert witness_bound_fig3(1, 0, 1) == 0
    assert witness_bound_fig3(1, 0.1, 1) == pytest.approx(float(oracles.decimal_fig3(1, 0.1)), rel=1e-14)
    assert witness_bound_fig3(1, 0.1, 1) == pytest.approx(oracles.FIG3_SPOT, rel=1e-14)
    with pytest.raises(ValueError):
        witness_bound_fig3(1, 1 / S3, 1)


@given(st.floats(0.5, 5), st.floats(0.0, 0.24), st.floats(0.0, 0.24), st.floats(0.5, 2))
def test_fig2_bound_monotone_in_eps(d, e1, e2, c):
    e1, e2 = sorted((e1 * d / c, e2 * d / c))
    assert witness_bound_fig2(d, e1, c) <= witness_bound_fig2(d, e2, c)


@given(st.floats(0.5, 5), st.floats(0.0, 0.99), st.floats(0.0, 0.99), st.floats(0.5, 2))
def test_fig3_bound_monotone_in_v(d, f1, f2, c):
    v1, v2 = sorted((f1 * c / S3, f2 * c / S3))
    assert witness_bound_fig3(d, v1, c) <= witness_bound_fig3(d, v2, c)


# --- witness search ------------------------------------------------------------

def test_single_included_event_is_its_own_witness():
    e = Event("A", (0.3, -1, 2), 0.7)
    w = find_witness_point([e])
    assert w.position == e.position and w.time == e.time


def test_excluded_coincident_with_included_gives_none():
    e = Event("A", (0, 0, 0), 0)
    assert find_witness_point([e, Event("B", (1, 0, 0), 0)], [e]) is None


def test_degenerate_pair_is_an_error():
    e = Event("A", (0, 0, 0), 0)
    with pytest.raises(WitnessSearchError):
        find_witness_point([e], [], (e, e.shifted(1)))


def test_fig2_witness_points_satisfy_cone_conditions():
    A, B, C, D = rhombus(1, -0.2, -0.1)
    for inc, exc in (([A, B, C], [D]), ([D, B, C], [A])):
        w = find_witness_point(inc, exc, (B, C))
        assert w is not None
        assert all(in_future_lightcone(w, e) for e in inc)
        assert not any(in_future_lightcone(w, e) for e in exc)
        assert abs(math.dist(w.position, B.position) - math.dist(w.position, C.position)) < 1e-9


def test_fig2_witness_is_earliest():
    A, B, C, D = rhombus(1, -0.2, -0.1)
    w = find_witness_point([A, B, C], [D], (B, C))
    # the earliest admissible point sits at the locus boundary behind A
    assert w.position[0] == pytest.approx(-oracles.FIG2_A_PRIME, abs=1e-6)
    assert w.time == pytest.approx(B.time + math.dist(w.position, B.position), abs=1e-12)


def test_fig2_nearest_witness_distances_match_closed_forms():
    A, B, C, D = rhombus(1, -0.2, -0.1)
    da = witness_distance([A, B, C], [D], A, (B, C))
    dd = witness_distance([D, B, C], [A], D, (B, C))
    assert da == pytest.approx(oracles.FIG2_A_PRIME, rel=1e-6)
    assert dd == pytest.approx(oracles.FIG2_D_PRIME, rel=1e-6)
    assert rhombus_witness_distance(1, -0.1) == pytest.approx(oracles.FIG2_A_PRIME, rel=1e-14)
    assert rhombus_witness_distance(1, -0.2) == pytest.approx(oracles.FIG2_D_PRIME, rel=1e-14)


def test_fig2_closed_forms_match_brute_force_grid():
    evA, evB, evC, evD = (0, 0, 0, -0.2), (0.5, S3 / 2, 0, 0), (0.5, -S3 / 2, 0, 0), (1, 0, 0, -0.1)
    assert oracles.grid_min_distance(evA, [evA, evB, evC], [evD]) == pytest.approx(0.2375, abs=6e-3)
    assert oracles.grid_min_distance(evD, [evD, evB, evC], [evA]) == pytest.approx(0.6, abs=6e-3)


@pytest.mark.parametrize("d,eps,c", [(1, 0.05, 1), (2, 0.1, 1), (1, 0.2, 1), (3, 0.3, 1.5)])
def test_nearest_witness_equals_axis_formula(d, eps, c):
    A, B, C, D = rhombus(d, -2 * eps, -eps)
    assert witness_distance([A, B, C], [D], A, (B, C), c) == pytest.approx(
        oracles.axis_a_prime(d, eps, c), rel=1e-6)
    assert witness_distance([D, B, C], [A], D, (B, C), c) == pytest.approx(
        oracles.axis_d_prime(d, eps, c), rel=1e-6)


@pytest.mark.parametrize("v", [0.02, 0.1, 0.3, 0.5])
def test_fig3_nearest_witness_matches_formula(v):
    t = -S3 * v / 2
    A, B, C, D = rhombus(1, t, t)
    assert witness_distance([A, B, C], [D], A, (B, C)) == pytest.approx(
        witness_bound_fig3(1, v), rel=1e-6)
    assert witness_distance([D, B, C], [A], D, (B, C)) == pytest.approx(
        witness_bound_fig3(1, v), rel=1e-6)


def test_fig3_formula_with_general_c():
    d, c = 2.0, 3.0
    v = 0.2 * c
    t = -S3 * v * d / (2 * c * c)
    A, B, C, D = rhombus(d, t, t)
    assert witness_distance([A, B, C], [D], A, (B, C), c) == pytest.approx(
        witness_bound_fig3(d, v, c), rel=1e-6)


def test_no_witness_when_excluded_event_is_earliest_and_close():
    # D in the past cone of both B and C: every point after B and C is after D
    A, B, C, _ = rhombus(1, -0.2, -0.1)
    D = Event("D", (1, 0, 0), -5)
    assert find_witness_point([A, B, C], [D], (B, C)) is None
