"""The four coloring protocols as pure per-activation transition functions.

Every activation takes the process's private state together with the register
contents read from its neighbors and yields a decision: either the final
color, or the next private state. An unwritten neighbor register reads as
None; it equals no color and contributes to no comparison set, so a process
that sees only unwritten registers returns immediately.

slow6   two-sided color pair (a, b), palette {(a, b) : a + b <= 2}, cycles
slow5   scalar color from {0..4} chosen between the a and b components, cycles
fast5   slow5 plus a counter-gated identifier reduction, cycles
deltasq slow6 generalized to any degree, palette {(a, b) : a + b <= Delta}
"""

from __future__ import annotations

from typing import Iterable, NamedTuple, Sequence, Union

from .cointoss import cv_reduce

INFINITE = float("inf")

SLOW6 = "slow6"
SLOW5 = "slow5"
FAST5 = "fast5"
DELTASQ = "deltasq"

PROTOCOLS = (SLOW6, SLOW5, FAST5, DELTASQ)
CYCLE_ONLY = (SLOW6, SLOW5, FAST5)
PAIR_COLORED = (SLOW6, DELTASQ)


class ProtocolMismatch(ValueError):
    """A state or register record belongs to a different protocol."""


class RegisterRecord(NamedTuple):
    """Published single-writer register content; r is the fast5 counter."""

    x: int
    a: int
    b: int
    r: int | float | None = None


class ProtocolState(NamedTuple):
    """Private per-process state; r is used by fast5 only."""

    protocol: str
    x: int
    a: int = 0
    b: int = 0
    r: int | float | None = None


class Return(NamedTuple):
    color: Union[int, tuple[int, int]]


class Continue(NamedTuple):
    state: ProtocolState


Decision = Union[Return, Continue]
View = Union[RegisterRecord, None]

Color = Union[int, tuple[int, int]]


def initial_state(protocol: str, x: int) -> ProtocolState:
    """Fresh state for input identifier x: colors zero, counter zero."""
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}")
    return ProtocolState(protocol, x, 0, 0, 0 if protocol == FAST5 else None)


def publish(state: ProtocolState) -> RegisterRecord:
    """Register content a process writes at the start of an activation."""
    return RegisterRecord(state.x, state.a, state.b, state.r)


def mex(values: Iterable[int]) -> int:
    """Least natural number absent from values."""
    present = values if isinstance(values, (set, frozenset)) else set(values)
    m = 0
    while m in present:
        m += 1
    return m


def _check_views(state: ProtocolState, views: Sequence[View], protocol: str) -> None:
    if state.protocol != protocol:
        raise ProtocolMismatch(f"state of {state.protocol!r} fed to {protocol}")
    wants_counter = protocol == FAST5
    for v in views:
        if v is not None and (v.r is not None) != wants_counter:
            raise ProtocolMismatch(f"register {v} does not match protocol {protocol}")


def _two_sided_step(state: ProtocolState, views: Sequence[View], protocol: str) -> Decision:
    _check_views(state, views, protocol)
    a, b = state.a, state.b
    fresh = True
    for v in views:
        if v is not None and v.a == a and v.b == b:
            fresh = False
            break
    if fresh:
        return Return((a, b))
    x = state.x
    above = set()
    below = set()
    for v in views:
        if v is None:
            continue
        if v.x > x:
            above.add(v.a)
        elif v.x < x:
            below.add(v.b)
    return Continue(ProtocolState(protocol, x, mex(above), mex(below)))


def slow6_activate(state: ProtocolState, views: Sequence[View]) -> Decision:
    """One activation of the 6-color protocol.

    Returns the pair (a, b) when it differs from both visible neighbor
    colors; otherwise recomputes a against larger-identifier neighbors and b
    against smaller-identifier ones.
    """
    if len(views) != 2:
        raise ValueError(f"slow6 expects 2 neighbor views, got {len(views)}")
    return _two_sided_step(state, views, SLOW6)


def slow5_activate(state: ProtocolState, views: Sequence[View]) -> Decision:
    """One activation of the 5-color protocol.

    With C the visible neighbor color components and C+ those of
    larger-identifier neighbors: return a if fresh, else b if fresh, else
    continue with a = mex(C+) and b = mex(C). C+ being a subset of C keeps
    b >= a on every state this produces.
    """
    if len(views) != 2:
        raise ValueError(f"slow5 expects 2 neighbor views, got {len(views)}")
    _check_views(state, views, SLOW5)
    x = state.x
    seen = set()
    above = set()
    for v in views:
        if v is None:
            continue
        seen.add(v.a)
        seen.add(v.b)
        if v.x > x:
            above.add(v.a)
            above.add(v.b)
    if state.a not in seen:
        return Return(state.a)
    if state.b not in seen:
        return Return(state.b)
    return Continue(ProtocolState(SLOW5, x, mex(above), mex(seen)))


def fast5_activate(state: ProtocolState, views: Sequence[View]) -> Decision:
    """One activation of the fast 5-color protocol.

    The coloring half is exactly the 5-color protocol. On a miss, a process
    whose counter does not exceed either visible neighbor counter gets one
    identifier move: strictly-between processes bump the counter and adopt
    the reduction against their smaller neighbor when it lands below it;
    local extrema freeze the counter, and a local minimum may drop to the
    smallest value avoiding both neighbors' reductions against it.

    With an unwritten neighbor register the identifier half is skipped
    entirely: the counter comparison is undefined at that point, and with a
    frozen identifier the step degenerates to the plain 5-color protocol,
    which is safe.
    """
    if len(views) != 2:
        raise ValueError(f"fast5 expects 2 neighbor views, got {len(views)}")
    _check_views(state, views, FAST5)
    v0, v1 = views
    x = state.x
    seen = set()
    above = set()
    for v in views:
        if v is None:
            continue
        seen.add(v.a)
        seen.add(v.b)
        if v.x > x:
            above.add(v.a)
            above.add(v.b)
    if state.a not in seen:
        return Return(state.a)
    if state.b not in seen:
        return Return(state.b)
    a, b = mex(above), mex(seen)
    r, next_x = state.r, x
    if v0 is not None and v1 is not None and r < INFINITE and r <= min(v0.r, v1.r):
        if v0.x < v1.x:
            lo, hi = v0.x, v1.x
        else:
            lo, hi = v1.x, v0.x
        if lo < x < hi:
            r = r + 1
            y = cv_reduce(x, lo)
            if y < lo:
                next_x = y
        else:
            r = INFINITE
            if x < lo:
                next_x = min(x, mex((cv_reduce(v0.x, x), cv_reduce(v1.x, x))))
    return Continue(ProtocolState(FAST5, next_x, a, b, r))


def deltasq_activate(state: ProtocolState, views: Sequence[View]) -> Decision:
    """One activation of the general-graph protocol: the two-sided rule of
    slow6 over an arbitrary number of neighbor views."""
    return _two_sided_step(state, views, DELTASQ)


ACTIVATE = {
    SLOW6: slow6_activate,
    SLOW5: slow5_activate,
    FAST5: fast5_activate,
    DELTASQ: deltasq_activate,
}


def palette_ok(protocol: str, color: Color, delta: int = 2) -> bool:
    """Whether an output color lies in the protocol's declared palette."""
    if protocol == SLOW6:
        return isinstance(color, tuple) and color[0] + color[1] <= 2
    if protocol == DELTASQ:
        return isinstance(color, tuple) and color[0] + color[1] <= delta
    if protocol in (SLOW5, FAST5):
        return isinstance(color, int) and 0 <= color <= 4
    raise ValueError(f"unknown protocol {protocol!r}")
