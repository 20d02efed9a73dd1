"""Transition-function tests.

Expected values for the multi-step scenarios were worked out by hand from
the per-line rules (write, read both neighbors, compare, recompute the color
components via least-excluded-value scans).
"""

import pytest
from hypothesis import given, strategies as st

from wfcolor.protocols import (
    Continue,
    DELTASQ,
    FAST5,
    INFINITE,
    ProtocolMismatch,
    ProtocolState,
    RegisterRecord,
    Return,
    SLOW5,
    SLOW6,
    deltasq_activate,
    fast5_activate,
    initial_state,
    mex,
    palette_ok,
    publish,
    slow5_activate,
    slow6_activate,
)


def rec(x, a=0, b=0, r=None):
    return RegisterRecord(x, a, b, r)


def frec(x, r=0, a=0, b=0):
    return RegisterRecord(x, a, b, r)


def test_mex_examples():
    assert mex(set()) == 0
    assert mex({0, 1, 3}) == 2
    assert mex({1, 2}) == 0


def test_initial_states():
    assert initial_state(SLOW6, 7) == ProtocolState(SLOW6, 7, 0, 0, None)
    assert initial_state(FAST5, 7) == ProtocolState(FAST5, 7, 0, 0, 0)
    with pytest.raises(ValueError):
        initial_state("other", 7)


def test_publish_projects_state():
    state = ProtocolState(FAST5, 5, 1, 2, 3)
    assert publish(state) == RegisterRecord(5, 1, 2, 3)


# --- slow6 ------------------------------------------------------------------

def test_slow6_isolated_returns_zero_pair():
    decision = slow6_activate(initial_state(SLOW6, 5), (None, None))
    assert decision == Return((0, 0))


def test_slow6_first_synchronous_round_on_triangle():
    # ids 5, 1, 9; everyone sees colliding (0,0) colors and recomputes
    d5 = slow6_activate(initial_state(SLOW6, 5), (rec(1), rec(9)))
    d1 = slow6_activate(initial_state(SLOW6, 1), (rec(5), rec(9)))
    d9 = slow6_activate(initial_state(SLOW6, 9), (rec(5), rec(1)))
    assert d5 == Continue(ProtocolState(SLOW6, 5, 1, 1))
    assert d1 == Continue(ProtocolState(SLOW6, 1, 1, 0))
    assert d9 == Continue(ProtocolState(SLOW6, 9, 0, 1))


def test_slow6_second_synchronous_round_returns_distinct_colors():
    d5 = slow6_activate(
        ProtocolState(SLOW6, 5, 1, 1), (rec(1, 1, 0), rec(9, 0, 1))
    )
    d1 = slow6_activate(
        ProtocolState(SLOW6, 1, 1, 0), (rec(5, 1, 1), rec(9, 0, 1))
    )
    d9 = slow6_activate(
        ProtocolState(SLOW6, 9, 0, 1), (rec(5, 1, 1), rec(1, 1, 0))
    )
    colors = {d5.color, d1.color, d9.color}
    assert colors == {(1, 1), (1, 0), (0, 1)}


def test_slow6_rejects_foreign_state_and_records():
    with pytest.raises(ProtocolMismatch):
        slow6_activate(initial_state(SLOW5, 5), (None, None))
    with pytest.raises(ProtocolMismatch):
        slow6_activate(initial_state(SLOW6, 5), (frec(3), None))


def test_slow6_wrong_arity():
    with pytest.raises(ValueError):
        slow6_activate(initial_state(SLOW6, 5), (None, None, None))


view_values = st.integers(min_value=0, max_value=30)
colors = st.integers(min_value=0, max_value=3)


@st.composite
def slow6_cases(draw):
    x = draw(st.integers(min_value=0, max_value=30))
    state = ProtocolState(SLOW6, x, draw(colors), draw(colors))
    views = []
    for _ in range(2):
        if draw(st.booleans()):
            vx = draw(view_values.filter(lambda v, x=x: v != x))
            views.append(rec(vx, draw(colors), draw(colors)))
        else:
            views.append(None)
    return state, tuple(views)


@given(slow6_cases())
def test_slow6_pure_and_symmetric(case):
    state, views = case
    first = slow6_activate(state, views)
    assert slow6_activate(state, views) == first
    assert slow6_activate(state, (views[1], views[0])) == first


@given(slow6_cases())
def test_slow6_stop_rule(case):
    # A miss always changes the color pair and avoids every visible color
    # (meaningful when both neighbors are visible with distinct identifiers).
    state, views = case
    decision = slow6_activate(state, views)
    if isinstance(decision, Return):
        assert all(v is None or (v.a, v.b) != decision.color for v in views)
    else:
        fresh = (decision.state.a, decision.state.b)
        for v in views:
            if v is not None:
                assert fresh != (v.a, v.b)
        if all(v is not None for v in views):
            assert fresh != (state.a, state.b)


# --- slow5 ------------------------------------------------------------------

def test_slow5_isolated_returns_a():
    assert slow5_activate(initial_state(SLOW5, 5), (None, None)) == Return(0)


def test_slow5_first_synchronous_round_on_triangle():
    d9 = slow5_activate(initial_state(SLOW5, 9), (rec(5), rec(1)))
    d1 = slow5_activate(initial_state(SLOW5, 1), (rec(5), rec(9)))
    d5 = slow5_activate(initial_state(SLOW5, 5), (rec(1), rec(9)))
    assert d9 == Continue(ProtocolState(SLOW5, 9, 0, 1))
    assert d1 == Continue(ProtocolState(SLOW5, 1, 1, 1))
    assert d5 == Continue(ProtocolState(SLOW5, 5, 1, 1))


@st.composite
def slow5_cases(draw, protocol=SLOW5):
    x = draw(st.integers(min_value=0, max_value=30))
    a = draw(colors)
    state = ProtocolState(
        protocol, x, a, draw(st.integers(min_value=0, max_value=3).map(lambda d: a + d)),
        0 if protocol == FAST5 else None,
    )
    views = []
    for _ in range(2):
        if draw(st.booleans()):
            vx = draw(view_values.filter(lambda v, x=x: v != x))
            r = draw(st.sampled_from([0, 1, 2, INFINITE])) if protocol == FAST5 else None
            views.append(RegisterRecord(vx, draw(colors), draw(colors), r))
        else:
            views.append(None)
    return state, tuple(views)


@given(slow5_cases())
def test_slow5_continue_keeps_b_at_least_a(case):
    state, views = case
    decision = slow5_activate(state, views)
    if isinstance(decision, Continue):
        assert decision.state.b >= decision.state.a


@given(slow5_cases())
def test_slow5_pure_and_symmetric(case):
    state, views = case
    first = slow5_activate(state, views)
    assert slow5_activate(state, views) == first
    assert slow5_activate(state, (views[1], views[0])) == first


@given(slow5_cases())
def test_slow5_fresh_b_avoids_visible_components(case):
    state, views = case
    decision = slow5_activate(state, views)
    if isinstance(decision, Continue):
        seen = {c for v in views if v is not None for c in (v.a, v.b)}
        assert decision.state.b not in seen


# --- fast5 ------------------------------------------------------------------

def test_fast5_isolated_returns_a():
    assert fast5_activate(initial_state(FAST5, 5), (None, None)) == Return(0)


def test_fast5_between_but_reduction_too_big():
    # f(12, 4) = 7 is not below 4, so only the counter moves
    state = ProtocolState(FAST5, 12, 0, 0, 0)
    decision = fast5_activate(state, (frec(20), frec(4)))
    assert decision == Continue(ProtocolState(FAST5, 12, 1, 1, 1))


def test_fast5_between_adopts_reduction():
    # f(12, 11) = 0 < 11 is adopted
    state = ProtocolState(FAST5, 12, 0, 0, 0)
    decision = fast5_activate(state, (frec(20), frec(11)))
    assert decision == Continue(ProtocolState(FAST5, 0, 1, 1, 1))


def test_fast5_local_minimum_freezes_and_drops():
    # f(20,3) = 0 and f(11,3) = 4; the least value outside {0,4} is 1 < 3
    state = ProtocolState(FAST5, 3, 0, 0, 0)
    decision = fast5_activate(state, (frec(20), frec(11)))
    assert decision == Continue(ProtocolState(FAST5, 1, 1, 1, INFINITE))


def test_fast5_local_maximum_freezes_counter():
    state = ProtocolState(FAST5, 30, 0, 0, 0)
    decision = fast5_activate(state, (frec(20), frec(11)))
    assert isinstance(decision, Continue)
    assert decision.state.r == INFINITE
    assert decision.state.x == 30


def test_fast5_blocked_counter_skips_identifier_move():
    # own counter above a neighbor's: no increment, no identifier change
    state = ProtocolState(FAST5, 12, 0, 0, 2)
    decision = fast5_activate(state, (frec(20, r=1), frec(11, r=5)))
    assert decision == Continue(ProtocolState(FAST5, 12, 1, 1, 2))


def test_fast5_missing_view_skips_identifier_block():
    state = ProtocolState(FAST5, 12, 0, 0, 0)
    decision = fast5_activate(state, (frec(11), None))
    assert isinstance(decision, Continue)
    assert decision.state.r == 0
    assert decision.state.x == 12


@given(slow5_cases(protocol=FAST5))
def test_fast5_identifier_never_grows_counter_never_shrinks(case):
    state, views = case
    decision = fast5_activate(state, views)
    if isinstance(decision, Continue):
        assert decision.state.x <= state.x
        assert decision.state.r >= state.r
        assert decision.state.b >= decision.state.a


@given(slow5_cases(protocol=FAST5))
def test_fast5_infinite_counter_is_absorbing(case):
    state, views = case
    frozen = state._replace(r=INFINITE)
    decision = fast5_activate(frozen, views)
    if isinstance(decision, Continue):
        assert decision.state.r == INFINITE
        assert decision.state.x == frozen.x


@given(slow5_cases(protocol=FAST5))
def test_fast5_pure_and_symmetric(case):
    state, views = case
    first = fast5_activate(state, views)
    assert fast5_activate(state, views) == first
    assert fast5_activate(state, (views[1], views[0])) == first


def test_fast5_rejects_counterless_views():
    with pytest.raises(ProtocolMismatch):
        fast5_activate(initial_state(FAST5, 5), (rec(3), None))


# --- deltasq ----------------------------------------------------------------

def test_deltasq_isolated_returns_zero_pair():
    assert deltasq_activate(initial_state(DELTASQ, 5), (None, None, None)) == Return((0, 0))


def test_deltasq_star_center_bumps_a():
    state = initial_state(DELTASQ, 2)
    decision = deltasq_activate(state, (rec(5), rec(7), rec(9)))
    assert decision == Continue(ProtocolState(DELTASQ, 2, 1, 0))


@given(slow6_cases())
def test_deltasq_matches_slow6_on_degree_two(case):
    state, views = case
    mirrored = ProtocolState(DELTASQ, state.x, state.a, state.b)
    expected = slow6_activate(state, views)
    got = deltasq_activate(mirrored, views)
    if isinstance(expected, Return):
        assert got == expected
    else:
        assert got.state == expected.state._replace(protocol=DELTASQ)


# --- palettes ---------------------------------------------------------------

def test_palette_membership():
    assert palette_ok(SLOW6, (2, 0))
    assert not palette_ok(SLOW6, (2, 1))
    assert palette_ok(SLOW5, 4)
    assert not palette_ok(SLOW5, 5)
    assert palette_ok(DELTASQ, (2, 1), delta=3)
    assert not palette_ok(DELTASQ, (2, 2), delta=3)
