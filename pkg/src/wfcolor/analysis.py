"""Audits and metrics over recorded traces.

Most audits replay the trace's register bookkeeping: the published value of a
variable at time t is what its owner wrote at its latest working activation
up to t, and stays frozen once the owner returns or crashes. The two
heard-of sets per process (identifiers reachable along increasing paths, and
along decreasing ones) are recomputed here from that bookkeeping rather than
tracked inside the protocols, which keeps the transition functions minimal.

The audit of the published-identifier coloring is also available as a
streaming observer so that large runs can be checked without retaining their
step records.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Mapping, NamedTuple

from .engine import NotTerminated, StepRecord, Trace
from .model import Graph, IdAssignment, UNIQUE
from .protocols import (
    Color,
    Continue,
    FAST5,
    INFINITE,
    Return,
    SLOW5,
    SLOW6,
    palette_ok,
)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class ABSets(NamedTuple):
    """Identifiers a process has heard of along increasing (A) and
    decreasing (B) identifier paths."""

    A: frozenset[int]
    B: frozenset[int]


@dataclass
class AuditReport:
    name: str
    violations: list[tuple[int | None, int | None, str]] = field(default_factory=list)
    checked: int = 0

    @property
    def passed(self) -> bool:
        return not self.violations

    def flag(self, t: int | None, node: int | None, detail: str) -> None:
        self.violations.append((t, node, detail))

    def summary(self) -> str:
        status = "pass" if self.passed else f"FAIL ({len(self.violations)} violations)"
        return f"{self.name}: {status}"

    def lines(self) -> Iterator[str]:
        """Line-delimited serialization in the trace-file style: a header
        line, then one line per violation."""
        yield _dump({"audit": self.name, "checked": self.checked, "pass": self.passed})
        for t, node, detail in self.violations:
            yield _dump({"t": t, "node": node, "detail": detail})


def write_report(report: AuditReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in report.lines():
            fh.write(line + "\n")


def check_proper_coloring(graph: Graph, outputs: Mapping[int, Color]) -> AuditReport:
    """Flag every edge whose two endpoints returned the same color."""
    report = AuditReport("proper_coloring")
    for p, q in graph.edges():
        if p in outputs and q in outputs:
            report.checked += 1
            if outputs[p] == outputs[q]:
                report.flag(None, p, f"nodes {p} and {q} both output {outputs[p]!r}")
    return report


def check_palette(outputs: Mapping[int, Color], protocol: str, delta: int = 2) -> AuditReport:
    """Flag every output outside the protocol's declared palette."""
    report = AuditReport("palette")
    for p, color in sorted(outputs.items()):
        report.checked += 1
        if not palette_ok(protocol, color, delta):
            report.flag(None, p, f"output {color!r} outside the {protocol} palette")
    return report


def round_complexity(trace: Trace) -> int:
    """Largest working-activation index reached by any process."""
    if not trace.terminated:
        raise NotTerminated("round complexity is defined for terminated traces only")
    return max(trace.activations.values(), default=0)


# --- published-value bookkeeping -------------------------------------------

class _HatScan(NamedTuple):
    """State of the replayed bookkeeping after one step."""

    t: int
    record: StepRecord
    xhat: list[int | None]
    a_sets: list[frozenset[int]]
    b_sets: list[frozenset[int]]
    prev_a: list[frozenset[int]]
    prev_b: list[frozenset[int]]
    n_up: list[int]
    n_down: list[int]


def _scan(trace: Trace) -> Iterator[_HatScan]:
    """Replay a trace, maintaining published identifiers and heard-of sets.

    Yields the bookkeeping after every step. The heard-of set of an activated
    working process is rebuilt from the published sets of its neighbors with
    larger (resp. smaller) published identifiers; everyone else's sets are
    frozen.
    """
    n = trace.header.graph.node_count
    adjacency = trace.header.graph.adjacency
    empty: frozenset[int] = frozenset()
    xhat: list[int | None] = [None] * n
    a_local = [empty] * n
    b_local = [empty] * n
    a_hat = [empty] * n
    b_hat = [empty] * n
    for record in trace.steps:
        moved = record.decisions.keys()
        for p in moved:
            xhat[p] = record.writes[p].x
            a_hat[p] = a_local[p]
            b_hat[p] = b_local[p]
        prev_a = list(a_local)
        prev_b = list(b_local)
        n_up = [0] * n
        n_down = [0] * n
        for p in moved:
            xp = xhat[p]
            above: frozenset[int] = empty
            below: frozenset[int] = empty
            up = down = 0
            for q in adjacency[p]:
                xq = xhat[q]
                if xq is None:
                    continue
                if xq > xp:
                    up += 1
                    above = above | a_hat[q] | {xq}
                elif xq < xp:
                    down += 1
                    below = below | b_hat[q] | {xq}
            a_local[p] = above
            b_local[p] = below
            n_up[p] = up
            n_down[p] = down
        yield _HatScan(record.t, record, xhat, a_local, b_local, prev_a, prev_b, n_up, n_down)


def ab_sets(trace: Trace, node: int, t: int) -> ABSets:
    """The heard-of sets of a node at the end of step t (t = 0 gives empty sets)."""
    if not 0 <= t <= len(trace.steps):
        raise ValueError(f"time {t} outside the recorded 0..{len(trace.steps)} range")
    if not 0 <= node < trace.header.graph.node_count:
        raise ValueError(f"unknown node {node}")
    result = ABSets(frozenset(), frozenset())
    for scan in _scan(trace):
        if scan.t > t:
            break
        result = ABSets(scan.a_sets[node], scan.b_sets[node])
    return result


def _require_protocol(trace: Trace, protocol: str, audit: str) -> None:
    if trace.header.protocol != protocol:
        raise ValueError(f"{audit} audits {protocol} traces, got {trace.header.protocol}")


def parity_audit(trace: Trace) -> AuditReport:
    """Activated processes that miss with at most one larger (resp. smaller)
    published neighbor must hold a color component matching the parity of
    their heard-of set on that side."""
    _require_protocol(trace, SLOW6, "parity")
    report = AuditReport("parity")
    for scan in _scan(trace):
        for p, decision in scan.record.decisions.items():
            if not isinstance(decision, Continue):
                continue
            state = decision.state
            if scan.n_up[p] <= 1:
                report.checked += 1
                if state.a % 2 != len(scan.a_sets[p]) % 2:
                    report.flag(
                        scan.t, p,
                        f"a={state.a} but |A|={len(scan.a_sets[p])}",
                    )
            if scan.n_down[p] <= 1:
                report.checked += 1
                if state.b % 2 != len(scan.b_sets[p]) % 2:
                    report.flag(
                        scan.t, p,
                        f"b={state.b} but |B|={len(scan.b_sets[p])}",
                    )
    return report


def ab_exclusion_audit(trace: Trace, check_b: bool | None = None) -> AuditReport:
    """Everything heard of upward lies above the own published identifier,
    and (for unique-identifier inputs) everything heard of downward lies
    below it."""
    _require_protocol(trace, SLOW6, "ab_exclusion")
    if check_b is None:
        check_b = trace.header.ids.kind == UNIQUE
    report = AuditReport("ab_exclusion")
    n = trace.header.graph.node_count
    for scan in _scan(trace):
        for p in range(n):
            xp = scan.xhat[p]
            if xp is None:
                if scan.a_sets[p] or scan.b_sets[p]:
                    report.flag(scan.t, p, "heard-of sets nonempty before first write")
                continue
            report.checked += 1
            if any(x <= xp for x in scan.a_sets[p]):
                report.flag(scan.t, p, f"A contains a value <= published id {xp}")
            if check_b and any(x >= xp for x in scan.b_sets[p]):
                report.flag(scan.t, p, f"B contains a value >= published id {xp}")
    return report


def ab_growth_audit(trace: Trace) -> AuditReport:
    """Heard-of sets only ever grow, inclusion-wise."""
    _require_protocol(trace, SLOW6, "ab_growth")
    report = AuditReport("ab_growth")
    n = trace.header.graph.node_count
    for scan in _scan(trace):
        for p in range(n):
            report.checked += 1
            if not scan.prev_a[p] <= scan.a_sets[p]:
                report.flag(scan.t, p, "A lost elements")
            if not scan.prev_b[p] <= scan.b_sets[p]:
                report.flag(scan.t, p, "B lost elements")
    return report


def stop_rule_audit(trace: Trace) -> AuditReport:
    """On every miss the refreshed b component avoids all four visible
    neighbor color components."""
    _require_protocol(trace, SLOW5, "stop_rule")
    report = AuditReport("stop_rule")
    for record in trace.steps:
        for p, decision in record.decisions.items():
            if not isinstance(decision, Continue):
                continue
            seen = {c for v in record.reads[p] if v is not None for c in (v.a, v.b)}
            report.checked += 1
            if decision.state.b in seen:
                report.flag(record.t, p, f"refreshed b={decision.state.b} collides with {sorted(seen)}")
    return report


class XhatColoringObserver:
    """Streaming check that published identifiers stay properly colored.

    Feed every step record in order; violations accumulate in the report.
    """

    def __init__(self, graph: Graph):
        self._adjacency = graph.adjacency
        self._xhat: list[int | None] = [None] * graph.node_count
        self.report = AuditReport("xhat_coloring")

    def __call__(self, record: StepRecord) -> None:
        xhat = self._xhat
        for p, rec in record.writes.items():
            xhat[p] = rec.x
        for p in record.writes:
            xp = xhat[p]
            for q in self._adjacency[p]:
                self.report.checked += 1
                if xhat[q] == xp:
                    self.report.flag(
                        record.t, p, f"published ids of neighbors {p},{q} both {xp}"
                    )


def xhat_coloring_audit(trace: Trace) -> AuditReport:
    """Published identifiers of neighbors never collide (written ones only)."""
    _require_protocol(trace, FAST5, "xhat_coloring")
    observer = XhatColoringObserver(trace.header.graph)
    for record in trace.steps:
        observer(record)
    return observer.report


def blocked_at(trace: Trace, node: int, t: int) -> bool:
    """The fast-protocol blocked predicate: a finite counter equal to its
    published value on a process that has not returned by time t."""
    _require_protocol(trace, FAST5, "blocked_at")
    if not 0 <= t <= len(trace.steps):
        raise ValueError(f"time {t} outside the recorded 0..{len(trace.steps)} range")
    r_local: int | float = 0
    r_hat: int | float | None = None
    for record in trace.steps:
        if record.t > t:
            break
        decision = record.decisions.get(node)
        if decision is None:
            continue
        r_hat = record.writes[node].r
        if isinstance(decision, Return):
            return False
        r_local = decision.state.r
    return r_local < INFINITE and r_local == r_hat


# --- identifier geometry ----------------------------------------------------

def local_maxima(ids: IdAssignment, graph: Graph) -> set[int]:
    return {
        p
        for p in range(graph.node_count)
        if all(ids.ids[p] > ids.ids[q] for q in graph.adjacency[p])
    }


def local_minima(ids: IdAssignment, graph: Graph) -> set[int]:
    return {
        p
        for p in range(graph.node_count)
        if all(ids.ids[p] < ids.ids[q] for q in graph.adjacency[p])
    }


def monotone_distances(ids: IdAssignment, graph: Graph) -> dict[int, tuple[int, int]]:
    """Per node, the distance to the nearest local maximum along a strictly
    increasing path and to the nearest local minimum along a strictly
    decreasing one. Local maxima have the first distance 0, minima the
    second."""
    if not graph.is_cycle:
        raise ValueError("monotone distances are defined on cycles")
    values = ids.ids
    n = graph.node_count

    def chase(p: int, q: int, up: bool) -> int:
        # length of the monotone run starting with edge p -> q (pre: strict step)
        steps = 1
        prev, cur = p, q
        while True:
            a, b = graph.adjacency[cur]
            nxt = b if a == prev else a
            if (values[nxt] > values[cur]) == up and values[nxt] != values[cur]:
                prev, cur = cur, nxt
                steps += 1
                if steps > n:
                    raise RuntimeError("monotone walk failed to terminate")
            else:
                return steps

    out = {}
    for p in range(n):
        ups = [chase(p, q, True) for q in graph.adjacency[p] if values[q] > values[p]]
        downs = [chase(p, q, False) for q in graph.adjacency[p] if values[q] < values[p]]
        out[p] = (min(ups) if ups else 0, min(downs) if downs else 0)
    return out


def slow6_bound(ell: int, ell_prime: int) -> int:
    return min(3 * ell, 3 * ell_prime, ell + ell_prime) + 4


def activation_bound_audit(trace: Trace) -> AuditReport:
    """Per-node activation counts against the protocol's declared bounds.

    slow6: min(3l, 3l', l+l') + 4 per node plus floor(3n/2) + 4 globally;
    slow5: 3l + 4 for non-minima plus 3n + 8 for everyone.
    """
    protocol = trace.header.protocol
    if protocol not in (SLOW6, SLOW5):
        raise ValueError(f"no closed-form activation bound for {protocol}")
    graph = trace.header.graph
    ids = trace.header.ids
    n = graph.node_count
    distances = monotone_distances(ids, graph)
    report = AuditReport("activation_bound")
    global_bound = 3 * n // 2 + 4 if protocol == SLOW6 else 3 * n + 8
    for p in range(n):
        count = trace.activations.get(p, 0)
        ell, ell_prime = distances[p]
        if protocol == SLOW6:
            bound = min(slow6_bound(ell, ell_prime), global_bound)
        else:
            bound = 3 * ell + 4 if ell_prime > 0 else global_bound
            bound = min(bound, global_bound)
        report.checked += 1
        if count > bound:
            report.flag(None, p, f"{count} working activations exceed bound {bound}")
    return report
