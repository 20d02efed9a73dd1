"""Schedule generators, adversarial search, and exhaustive model checking.

A scheduler is a pure generator of activation sets: the same descriptor
produces the same set at the same time index, always. Crashes are modeled
purely as absence from the schedule from some time onward.

Descriptor text forms (used in trace headers and on the command line):

    sync                        every node, every step
    rr                          singleton {t mod n}
    rand:<p>:<seed>             each node independently with probability p
    crash:<node>@<t>,...;<base> base schedule minus node from time t onward
    replay:<file>               explicit sets loaded from a schedule file
    replay:@<sets>              explicit sets inline, steps split by '|'

Schedule files hold one step per line: space-separated node indices, a blank
line for an empty set; lines starting with '#' are comments.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence, Union

from .engine import new_execution
from .model import Graph, IdAssignment
from .protocols import ACTIVATE, Return, palette_ok, publish


@dataclass(frozen=True)
class Synchronous:
    pass


@dataclass(frozen=True)
class RoundRobin:
    pass


@dataclass(frozen=True)
class RandomSched:
    p_act: float
    seed: int


@dataclass(frozen=True)
class CrashSched:
    base: "Descriptor"
    crash_times: tuple[tuple[int, int], ...]  # (node, first silent time)


@dataclass(frozen=True)
class ReplaySched:
    sets: tuple[frozenset[int], ...]
    source: str | None = None


Descriptor = Union[Synchronous, RoundRobin, RandomSched, CrashSched, ReplaySched]


def format_descriptor(descriptor: Descriptor) -> str:
    if isinstance(descriptor, Synchronous):
        return "sync"
    if isinstance(descriptor, RoundRobin):
        return "rr"
    if isinstance(descriptor, RandomSched):
        return f"rand:{descriptor.p_act}:{descriptor.seed}"
    if isinstance(descriptor, CrashSched):
        pairs = ",".join(f"{p}@{t}" for p, t in descriptor.crash_times)
        return f"crash:{pairs};{format_descriptor(descriptor.base)}"
    if isinstance(descriptor, ReplaySched):
        if descriptor.source is not None:
            return f"replay:{descriptor.source}"
        steps = "|".join(",".join(str(p) for p in sorted(s)) for s in descriptor.sets)
        return f"replay:@{steps}"
    raise ValueError(f"unknown descriptor {descriptor!r}")


def parse_descriptor(text: str) -> Descriptor:
    if text == "sync":
        return Synchronous()
    if text == "rr":
        return RoundRobin()
    if text.startswith("rand:"):
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected rand:<p>:<seed>, got {text!r}")
        return RandomSched(float(parts[1]), int(parts[2]))
    if text.startswith("crash:"):
        body = text[len("crash:"):]
        if ";" not in body:
            raise ValueError(f"expected crash:<node>@<t>,...;<base>, got {text!r}")
        pairs_text, base_text = body.split(";", 1)
        pairs = []
        for item in pairs_text.split(","):
            node_text, time_text = item.split("@")
            pairs.append((int(node_text), int(time_text)))
        return CrashSched(parse_descriptor(base_text), tuple(pairs))
    if text.startswith("replay:@"):
        body = text[len("replay:@"):]
        if not body:
            return ReplaySched(())
        return ReplaySched(
            tuple(
                frozenset(int(p) for p in chunk.split(",") if p)
                for chunk in body.split("|")
            )
        )
    if text.startswith("replay:"):
        path = text[len("replay:"):]
        return ReplaySched(load_schedule(path), source=path)
    raise ValueError(f"unknown scheduler descriptor {text!r}")


def load_schedule(path: str) -> tuple[frozenset[int], ...]:
    sets = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            if raw.lstrip().startswith("#"):
                continue
            line = raw.split("#", 1)[0].strip()
            sets.append(frozenset(int(p) for p in line.split()))
    return tuple(sets)


def save_schedule(sets: Sequence[frozenset[int]], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in sets:
            fh.write(" ".join(str(p) for p in sorted(s)) + "\n")


class Scheduler:
    """A descriptor bound to a node count, queryable by time index."""

    def __init__(self, descriptor: Descriptor, node_count: int):
        self.descriptor = descriptor
        self.node_count = node_count
        self.text = format_descriptor(descriptor)
        self._all = frozenset(range(node_count))
        if isinstance(descriptor, RandomSched):
            if not 0 < descriptor.p_act <= 1:
                raise ValueError(f"activation probability {descriptor.p_act} not in (0,1]")
        if isinstance(descriptor, CrashSched):
            for node, t in descriptor.crash_times:
                if not 0 <= node < node_count:
                    raise ValueError(f"crash node {node} out of range")
                if t < 0:
                    raise ValueError(f"crash time {t} is negative")
            self._base = Scheduler(descriptor.base, node_count)
        if isinstance(descriptor, ReplaySched):
            for s in descriptor.sets:
                for p in s:
                    if not 0 <= p < node_count:
                        raise ValueError(f"replay schedule node {p} out of range")
            suffix: list[frozenset[int]] = [frozenset()] * (len(descriptor.sets) + 1)
            for i in range(len(descriptor.sets) - 1, -1, -1):
                union = suffix[i + 1] | descriptor.sets[i]
                suffix[i] = suffix[i + 1] if union == suffix[i + 1] else union
            self._suffix = suffix

    def at(self, t: int) -> frozenset[int]:
        """The activation set sigma(t), t >= 1."""
        d = self.descriptor
        if isinstance(d, Synchronous):
            return self._all
        if isinstance(d, RoundRobin):
            return frozenset((t % self.node_count,))
        if isinstance(d, RandomSched):
            rng = random.Random(f"rand:{d.seed}:{t}")
            p = d.p_act
            return frozenset(i for i in range(self.node_count) if rng.random() < p)
        if isinstance(d, CrashSched):
            alive = self._base.at(t)
            dead = {node for node, start in d.crash_times if t >= start}
            return alive - dead if dead else alive
        if isinstance(d, ReplaySched):
            return d.sets[t - 1] if 0 < t <= len(d.sets) else frozenset()
        raise ValueError(f"unknown descriptor {d!r}")

    def support_after(self, t: int) -> frozenset[int]:
        """Nodes that may still appear in sigma(t') for some t' >= t."""
        d = self.descriptor
        if isinstance(d, CrashSched):
            dead = frozenset(node for node, start in d.crash_times if t >= start)
            return self._base.support_after(t) - dead
        if isinstance(d, ReplaySched):
            index = min(max(t - 1, 0), len(d.sets))
            return self._suffix[index]
        return self._all


def make_scheduler(descriptor: Descriptor | str, node_count: int) -> Scheduler:
    if isinstance(descriptor, str):
        descriptor = parse_descriptor(descriptor)
    return Scheduler(descriptor, node_count)


def materialize(scheduler: Scheduler, steps: int) -> ReplaySched:
    """Freeze sigma(1..steps) into an explicit replay descriptor."""
    return ReplaySched(tuple(scheduler.at(t) for t in range(1, steps + 1)))


# --- adversarial schedule search ------------------------------------------

def _max_working_activations(
    graph: Graph, ids: IdAssignment, protocol: str, sets: Sequence[frozenset[int]]
) -> int:
    ex = new_execution(graph, ids, protocol)
    for s in sets:
        ex.apply_step(s)
        if ex.all_returned():
            break
    return max(ex.activations)


def worst_case_search(
    graph: Graph,
    ids: IdAssignment,
    protocol: str,
    budget: int,
    seed: int,
    steps: int | None = None,
) -> tuple[ReplaySched, int]:
    """Hill-climb over replay schedules for a high working-activation count.

    Mutates the incumbent schedule (resampling whole steps or toggling single
    activations), keeps mutants that do not lose ground, and restarts from a
    fresh random schedule after a stall. Deterministic for a given seed;
    budget counts schedule evaluations.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    n = graph.node_count
    rng = random.Random(f"worstcase:{seed}")
    if steps is None:
        steps = 6 * n + 24

    def random_schedule() -> list[frozenset[int]]:
        return [
            frozenset(p for p in range(n) if rng.random() < 0.5) for _ in range(steps)
        ]

    def mutate(sets: list[frozenset[int]]) -> list[frozenset[int]]:
        out = list(sets)
        for _ in range(rng.randint(1, 3)):
            i = rng.randrange(steps)
            if rng.random() < 0.5:
                out[i] = frozenset(p for p in range(n) if rng.random() < 0.5)
            else:
                p = rng.randrange(n)
                out[i] = out[i] - {p} if p in out[i] else out[i] | {p}
        return out

    current = random_schedule()
    current_value = _max_working_activations(graph, ids, protocol, current)
    best, best_value = current, current_value
    evaluations = 1
    stall = 0
    while evaluations < budget:
        restart = stall >= 40
        candidate = random_schedule() if restart else mutate(current)
        value = _max_working_activations(graph, ids, protocol, candidate)
        evaluations += 1
        if restart or value >= current_value:
            current, current_value = candidate, value
        if value > best_value:
            best, best_value = candidate, value
            stall = 0
        else:
            stall = 0 if restart else stall + 1
    return ReplaySched(tuple(best)), best_value


# --- exhaustive model checking --------------------------------------------

class StateSpaceExceeded(RuntimeError):
    """Exploration passed the configured configuration ceiling."""


@dataclass(frozen=True)
class Counterexample:
    schedule: tuple[tuple[int, ...], ...]
    detail: str


@dataclass
class McReport:
    explored: int
    safety_violations: list[Counterexample] = field(default_factory=list)
    bound_violations: list[tuple[int, int]] = field(default_factory=list)
    bound_schedule: tuple[tuple[int, ...], ...] | None = None
    memo_hits: int = 0
    max_activations: int = 0

    @property
    def verdict(self) -> str:
        if self.safety_violations or self.bound_violations:
            return "fail"
        return "pass"


def exhaustive_check(
    graph: Graph,
    ids: IdAssignment,
    protocol: str,
    activation_bound: int | None,
    config_ceiling: int = 10_000_000,
    delta: int | None = None,
) -> McReport:
    """Explore every schedule of a tiny instance up to the activation bound.

    Branches over all non-empty subsets of working processes at every step
    (the empty set cannot affect any assertion), memoizes configurations
    (registers, states, outputs, capped activation counts), and checks at
    every new configuration that returned neighbors hold distinct in-palette
    colors and that no process worked past the activation bound. Exploration
    stops at the first violation found.

    With activation_bound=None only safety is checked: activation counts are
    dropped from the configuration, so the reachable space is explored
    regardless of how many activations it takes to reach it (this terminates
    exactly when the protocol's reachable core space is finite).
    """
    n = graph.node_count
    if n > 5:
        raise ValueError(f"exhaustive check is limited to 5 nodes, got {n}")
    base = new_execution(graph, ids, protocol)
    if delta is None:
        delta = graph.max_degree
    adjacency = graph.adjacency
    activate = ACTIVATE[protocol]
    counted = activation_bound is not None
    cap = activation_bound + 1 if counted else 0

    initial = (
        tuple(base.registers),
        tuple(base.states),
        (None,) * n,
        (0,) * n if counted else (),
    )
    report = McReport(explored=1)
    seen = {initial}
    stack = [(initial, _subsets_of_working(initial[2], n))]
    path: list[tuple[int, ...]] = []

    while stack:
        config, pending = stack[-1]
        if not pending:
            stack.pop()
            if path:
                path.pop()
            continue
        movers = pending.pop()
        registers, states, outputs, counts = config
        new_registers = list(registers)
        for p in movers:
            new_registers[p] = publish(states[p])
        new_states = list(states)
        new_outputs = list(outputs)
        new_counts = list(counts)
        fresh_returns = []
        for p in movers:
            views = tuple(new_registers[q] for q in adjacency[p])
            decision = activate(new_states[p], views)
            if counted:
                new_counts[p] = min(new_counts[p] + 1, cap)
            if isinstance(decision, Return):
                new_outputs[p] = decision.color
                fresh_returns.append(p)
            else:
                new_states[p] = decision.state
        taken = tuple(path) + (tuple(movers),)
        if counted:
            for p in movers:
                if new_counts[p] > activation_bound:
                    report.bound_violations.append((p, new_counts[p]))
                    report.bound_schedule = taken
                    return report
        for p in fresh_returns:
            color = new_outputs[p]
            if not palette_ok(protocol, color, delta):
                report.safety_violations.append(
                    Counterexample(taken, f"node {p} returned {color!r} outside the palette")
                )
                return report
            for q in adjacency[p]:
                if new_outputs[q] is not None and new_outputs[q] == color:
                    report.safety_violations.append(
                        Counterexample(taken, f"adjacent nodes {q},{p} both returned {color!r}")
                    )
                    return report
        new_config = (
            tuple(new_registers),
            tuple(new_states),
            tuple(new_outputs),
            tuple(new_counts),
        )
        if counted and max(new_counts) > report.max_activations:
            report.max_activations = max(new_counts)
        if new_config in seen:
            report.memo_hits += 1
            continue
        seen.add(new_config)
        report.explored += 1
        if report.explored > config_ceiling:
            raise StateSpaceExceeded(f"explored more than {config_ceiling} configurations")
        if any(out is None for out in new_outputs):
            path.append(tuple(movers))
            stack.append((new_config, _subsets_of_working(new_outputs, n)))
    return report


def _subsets_of_working(outputs: Sequence, n: int) -> list[tuple[int, ...]]:
    working = [p for p in range(n) if outputs[p] is None]
    subsets = []
    for mask in range(1, 1 << len(working)):
        subsets.append(tuple(working[i] for i in range(len(working)) if mask >> i & 1))
    return subsets
