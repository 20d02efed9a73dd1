"""Execution engine with write-then-read step semantics and trace recording.

A step activates a set of processes simultaneously: every activated working
process first writes its register, then all of them read their neighbors'
registers (so simultaneous writers see each other's fresh values), and
finally each applies its protocol transition. Activating a process that has
already returned is a silent no-op; its register stays frozen at the last
written value and remains readable.

Traces serialize as line-delimited JSON: a header line, one line per step
with fields t/act/w/rd/dec, and a final line with out/tstar. Identical
inputs produce byte-identical trace files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, IO, Iterable, NamedTuple, Sequence

from .model import Graph, IdAssignment, from_edges
from .protocols import (
    ACTIVATE,
    CYCLE_ONLY,
    Color,
    Continue,
    Decision,
    FAST5,
    INFINITE,
    PROTOCOLS,
    ProtocolState,
    RegisterRecord,
    Return,
    initial_state,
    publish,
)


class NotTerminated(RuntimeError):
    """The queried quantity is only defined for terminated executions."""


class StepRecord(NamedTuple):
    """Everything that happened at one time step."""

    t: int
    activated: tuple[int, ...]
    writes: dict[int, RegisterRecord]
    reads: dict[int, tuple[RegisterRecord | None, ...]]
    decisions: dict[int, Decision]

    def working(self) -> tuple[int, ...]:
        """Activated processes that were still working at this step."""
        return tuple(sorted(self.decisions))


@dataclass(frozen=True)
class TraceHeader:
    graph: Graph
    ids: IdAssignment
    protocol: str
    sched: str
    seed: int
    horizon: int


@dataclass
class Trace:
    header: TraceHeader
    steps: list[StepRecord]
    outputs: dict[int, Color]
    activations: dict[int, int]
    tstar: int | None

    @property
    def terminated(self) -> bool:
        return self.tstar is not None


class Execution:
    """Single-owner mutable execution state of one protocol over one graph."""

    def __init__(self, graph: Graph, ids: IdAssignment, protocol: str):
        if protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {protocol!r}")
        ids.validate_for(graph)
        if protocol in CYCLE_ONLY and not graph.is_cycle:
            raise ValueError(f"{protocol} runs on cycles only")
        self.graph = graph
        self.ids = ids
        self.protocol = protocol
        self.registers: list[RegisterRecord | None] = [None] * graph.node_count
        self.states: list[ProtocolState] = [
            initial_state(protocol, x) for x in ids.ids
        ]
        self.returned: dict[int, Color] = {}
        self.activations: list[int] = [0] * graph.node_count
        self.working: set[int] = set(range(graph.node_count))
        self.last_movers = 0
        self._activate = ACTIVATE[protocol]
        self._t = 0

    @property
    def now(self) -> int:
        return self._t

    def all_returned(self) -> bool:
        return not self.working

    def apply_step(self, activated: Iterable[int], record: bool = True) -> StepRecord | None:
        """Run one simultaneous step for the given activation set.

        With record=False the step is applied without building a StepRecord,
        which keeps long unobserved runs cheap; the effect on the execution
        is identical either way.
        """
        acts = set(activated)
        n = self.graph.node_count
        for p in acts:
            if not 0 <= p < n:
                raise ValueError(f"unknown node index {p}")
        self._t += 1
        movers = sorted(acts & self.working)
        self.last_movers = len(movers)
        registers = self.registers
        states = self.states
        activations = self.activations
        adjacency = self.graph.adjacency
        activate = self._activate
        writes: dict[int, RegisterRecord] = {}
        for p in movers:
            rec = publish(states[p])
            registers[p] = rec
            if record:
                writes[p] = rec
        reads: dict[int, tuple[RegisterRecord | None, ...]] = {}
        decisions: dict[int, Decision] = {}
        for p in movers:
            views = tuple([registers[q] for q in adjacency[p]])
            decision = activate(states[p], views)
            if record:
                reads[p] = views
                decisions[p] = decision
            activations[p] += 1
            if type(decision) is Return:
                self.returned[p] = decision.color
                self.working.discard(p)
            else:
                states[p] = decision.state
        if not record:
            return None
        return StepRecord(self._t, tuple(sorted(acts)), writes, reads, decisions)


def new_execution(graph: Graph, ids: IdAssignment, protocol: str) -> Execution:
    """All registers unwritten, all states fresh, nobody returned."""
    return Execution(graph, ids, protocol)


def default_horizon(protocol: str, node_count: int) -> int:
    """Generous step budgets: termination inside them is expected, so running
    out signals a bug rather than a tight schedule."""
    if protocol == FAST5:
        return 400
    return 20 * node_count + 200


def run(
    execution: Execution,
    scheduler,
    horizon: int,
    observers: Sequence[Callable[[StepRecord], None]] = (),
    keep_steps: bool = True,
    seed: int = 0,
) -> Trace:
    """Drive an execution under a scheduler for at most horizon steps.

    Stops early once no process the scheduler can still activate is working;
    the trace then reports the last time a working process was activated as
    tstar. Running out of horizon is reported, not raised.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    steps: list[StepRecord] = []
    tstar = 0
    terminated = False
    recording = keep_steps or bool(observers)
    for t in range(1, horizon + 1):
        record = execution.apply_step(scheduler.at(t), record=recording)
        if execution.last_movers:
            tstar = t
        if keep_steps:
            steps.append(record)
        for observer in observers:
            observer(record)
        if execution.working.isdisjoint(scheduler.support_after(t + 1)):
            terminated = True
            break
    header = TraceHeader(
        execution.graph,
        execution.ids,
        execution.protocol,
        scheduler.text,
        seed,
        horizon,
    )
    return Trace(
        header,
        steps,
        dict(execution.returned),
        {p: c for p, c in enumerate(execution.activations)},
        tstar if terminated else None,
    )


# --- trace serialization -------------------------------------------------

def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _encode_counter(r: int | float | None) -> int | str | None:
    if r is None:
        return None
    return "inf" if r == INFINITE else r


def _decode_counter(raw) -> int | float | None:
    if raw is None:
        return None
    return INFINITE if raw == "inf" else raw


def encode_record(rec: RegisterRecord | None) -> list | None:
    if rec is None:
        return None
    if rec.r is None:
        return [rec.x, rec.a, rec.b]
    return [rec.x, _encode_counter(rec.r), rec.a, rec.b]


def decode_record(raw, protocol: str) -> RegisterRecord | None:
    if raw is None:
        return None
    if protocol == FAST5:
        x, r, a, b = raw
        return RegisterRecord(x, a, b, _decode_counter(r))
    x, a, b = raw
    return RegisterRecord(x, a, b)


def _encode_color(color: Color) -> int | list[int]:
    return list(color) if isinstance(color, tuple) else color


def _decode_color(raw) -> Color:
    return tuple(raw) if isinstance(raw, list) else raw


def _encode_decision(decision: Decision) -> list:
    if isinstance(decision, Return):
        return ["ret", _encode_color(decision.color)]
    st = decision.state
    if st.r is None:
        return ["cont", [st.x, st.a, st.b]]
    return ["cont", [st.x, _encode_counter(st.r), st.a, st.b]]


def _decode_decision(raw, protocol: str) -> Decision:
    tag, payload = raw
    if tag == "ret":
        return Return(_decode_color(payload))
    if protocol == FAST5:
        x, r, a, b = payload
        return Continue(ProtocolState(protocol, x, a, b, _decode_counter(r)))
    x, a, b = payload
    return Continue(ProtocolState(protocol, x, a, b))


def header_line(header: TraceHeader) -> str:
    return _dump(
        {
            "graph": {"n": header.graph.node_count, "edges": header.graph.edges()},
            "ids": {"kind": header.ids.kind, "values": list(header.ids.ids)},
            "protocol": header.protocol,
            "sched": header.sched,
            "seed": header.seed,
            "horizon": header.horizon,
        }
    )


def step_line(record: StepRecord) -> str:
    return _dump(
        {
            "t": record.t,
            "act": list(record.activated),
            "w": {str(p): encode_record(rec) for p, rec in record.writes.items()},
            "rd": {
                str(p): [encode_record(v) for v in views]
                for p, views in record.reads.items()
            },
            "dec": {str(p): _encode_decision(d) for p, d in record.decisions.items()},
        }
    )


def final_line(trace: Trace) -> str:
    return _dump(
        {
            "out": {str(p): _encode_color(c) for p, c in sorted(trace.outputs.items())},
            "tstar": trace.tstar,
        }
    )


def write_trace(trace: Trace, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header_line(trace.header) + "\n")
        for record in trace.steps:
            fh.write(step_line(record) + "\n")
        fh.write(final_line(trace) + "\n")


class TraceFileWriter:
    """Streaming observer writing trace lines as steps happen; memory stays
    flat regardless of run size. Call finish() with the completed trace."""

    def __init__(self, fh: IO[str], header: TraceHeader):
        self._fh = fh
        fh.write(header_line(header) + "\n")

    def __call__(self, record: StepRecord) -> None:
        self._fh.write(step_line(record) + "\n")

    def finish(self, trace: Trace) -> None:
        self._fh.write(final_line(trace) + "\n")


def parse_header(line: str) -> TraceHeader:
    raw = json.loads(line)
    graph = from_edges(raw["graph"]["n"], [tuple(e) for e in raw["graph"]["edges"]])
    ids = IdAssignment(tuple(raw["ids"]["values"]), raw["ids"]["kind"])
    return TraceHeader(graph, ids, raw["protocol"], raw["sched"], raw["seed"], raw["horizon"])


def read_trace(path: str) -> Trace:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if len(lines) < 2:
        raise ValueError(f"trace file {path} is truncated")
    header = parse_header(lines[0])
    protocol = header.protocol
    steps = []
    for line in lines[1:-1]:
        raw = json.loads(line)
        steps.append(
            StepRecord(
                raw["t"],
                tuple(raw["act"]),
                {int(p): decode_record(rec, protocol) for p, rec in raw["w"].items()},
                {
                    int(p): tuple(decode_record(v, protocol) for v in views)
                    for p, views in raw["rd"].items()
                },
                {int(p): _decode_decision(d, protocol) for p, d in raw["dec"].items()},
            )
        )
    tail = json.loads(lines[-1])
    outputs = {int(p): _decode_color(c) for p, c in tail["out"].items()}
    activations: dict[int, int] = {p: 0 for p in range(header.graph.node_count)}
    for record in steps:
        for p in record.decisions:
            activations[p] += 1
    return Trace(header, steps, outputs, activations, tail["tstar"])
