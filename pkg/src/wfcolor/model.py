"""Graph topologies and input-identifier assignments.

Cycles are the primary topology; bounded-degree general graphs are supported
for the two-sided coloring protocol that runs on them. Identifier assignments
come in two kinds: globally unique values, or values that merely form a proper
coloring (duplicates allowed on non-adjacent nodes).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

UNIQUE = "unique"
PROPER = "proper-coloring"

ID_KINDS = (UNIQUE, PROPER)


class TopologyError(ValueError):
    """The requested graph shape is invalid or unsupported."""


class ColoringInfeasible(ValueError):
    """No proper coloring with the requested number of colors exists."""


@dataclass(frozen=True)
class Graph:
    """Undirected connected graph as a sorted adjacency structure."""

    node_count: int
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        n = self.node_count
        if n < 1 or len(self.adjacency) != n:
            raise TopologyError("adjacency must list every node exactly once")
        for p, nbrs in enumerate(self.adjacency):
            if any(q < 0 or q >= n for q in nbrs):
                raise TopologyError(f"node {p} has an out-of-range neighbor")
            if p in nbrs:
                raise TopologyError(f"self-loop at node {p}")
            if list(nbrs) != sorted(set(nbrs)):
                raise TopologyError(f"adjacency of node {p} must be sorted and duplicate-free")
            for q in nbrs:
                if p not in self.adjacency[q]:
                    raise TopologyError(f"edge {p}-{q} is not symmetric")
        if not self._connected():
            raise TopologyError("graph must be connected")

    def _connected(self) -> bool:
        seen = {0}
        frontier = [0]
        while frontier:
            p = frontier.pop()
            for q in self.adjacency[p]:
                if q not in seen:
                    seen.add(q)
                    frontier.append(q)
        return len(seen) == self.node_count

    @property
    def is_cycle(self) -> bool:
        return self.node_count >= 3 and all(len(nbrs) == 2 for nbrs in self.adjacency)

    @property
    def max_degree(self) -> int:
        return max(len(nbrs) for nbrs in self.adjacency)

    def edges(self) -> list[tuple[int, int]]:
        return [(p, q) for p in range(self.node_count) for q in self.adjacency[p] if p < q]


def cycle(n: int) -> Graph:
    """The ring on n >= 3 nodes; node i is adjacent to (i +/- 1) mod n."""
    if n < 3:
        raise TopologyError(f"a cycle needs at least 3 nodes, got {n}")
    adjacency = tuple(tuple(sorted(((i - 1) % n, (i + 1) % n))) for i in range(n))
    return Graph(n, adjacency)


def from_edges(node_count: int, edges: Iterable[tuple[int, int]]) -> Graph:
    """Build a graph from an undirected edge list."""
    nbrs: list[set[int]] = [set() for _ in range(node_count)]
    for u, v in edges:
        if not (0 <= u < node_count and 0 <= v < node_count):
            raise TopologyError(f"edge {u}-{v} out of range for {node_count} nodes")
        nbrs[u].add(v)
        nbrs[v].add(u)
    return Graph(node_count, tuple(tuple(sorted(s)) for s in nbrs))


def parse_edge_list(lines: Iterable[str]) -> Graph:
    """Parse the 'u v' per line edge-list format; '#' starts a comment."""
    edges = []
    top = -1
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TopologyError(f"line {lineno}: expected 'u v', got {raw!r}")
        u, v = int(parts[0]), int(parts[1])
        edges.append((u, v))
        top = max(top, u, v)
    if not edges:
        raise TopologyError("edge list is empty")
    return from_edges(top + 1, edges)


def load_edge_list(path: str) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh)


def random_connected_graph(n: int, max_degree: int, seed: int) -> Graph:
    """Seeded random connected graph with every degree <= max_degree.

    Grows a random tree under the degree cap, then adds extra edges by
    rejection until no capacity is left or an attempt budget runs out.
    """
    if n < 2:
        raise TopologyError("need at least 2 nodes")
    if max_degree < 2:
        raise TopologyError("max_degree must be at least 2")
    rng = random.Random(f"graph:{seed}")
    order = list(range(n))
    rng.shuffle(order)
    degree = [0] * n
    edges: set[tuple[int, int]] = set()
    for i in range(1, n):
        candidates = [p for p in order[:i] if degree[p] < max_degree]
        if not candidates:
            raise TopologyError(f"cannot fit {n} nodes in a tree of degree {max_degree}")
        u, v = order[i], rng.choice(candidates)
        edges.add((min(u, v), max(u, v)))
        degree[u] += 1
        degree[v] += 1
    for _ in range(4 * n):
        u, v = rng.randrange(n), rng.randrange(n)
        if u == v:
            continue
        e = (min(u, v), max(u, v))
        if e in edges or degree[u] >= max_degree or degree[v] >= max_degree:
            continue
        edges.add(e)
        degree[u] += 1
        degree[v] += 1
    return from_edges(n, sorted(edges))


@dataclass(frozen=True)
class IdAssignment:
    """Per-node input identifiers, tagged with the guarantee they carry."""

    ids: tuple[int, ...]
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in ID_KINDS:
            raise ValueError(f"unknown id kind {self.kind!r}")
        if any(v < 0 for v in self.ids):
            raise ValueError("identifiers must be naturals")
        if self.kind == UNIQUE and len(set(self.ids)) != len(self.ids):
            raise ValueError("unique id assignment has duplicate values")

    def validate_for(self, g: Graph) -> None:
        """Check the kind's invariant against a concrete graph."""
        if len(self.ids) != g.node_count:
            raise ValueError(
                f"assignment covers {len(self.ids)} nodes, graph has {g.node_count}"
            )
        for p, q in g.edges():
            if self.ids[p] == self.ids[q]:
                raise ValueError(f"adjacent nodes {p},{q} share identifier {self.ids[p]}")


def explicit_ids(g: Graph, values: Sequence[int], kind: str | None = None) -> IdAssignment:
    """Wrap explicit identifier values, inferring the kind when not given."""
    vals = tuple(values)
    if kind is None:
        kind = UNIQUE if len(set(vals)) == len(vals) else PROPER
    ids = IdAssignment(vals, kind)
    ids.validate_for(g)
    return ids


def random_unique_ids(g: Graph, bound: int | None = None, seed: int = 0) -> IdAssignment:
    """Uniformly sampled injective assignment into [0, bound).

    The default bound n**3 keeps identifiers polynomial in the system size
    while leaving room for the reduction function to act on realistic
    bit-lengths.
    """
    n = g.node_count
    if bound is None:
        bound = n**3
    if bound < n:
        raise ValueError(f"range [0,{bound}) too small for {n} distinct ids")
    rng = random.Random(f"ids:{seed}")
    ids = IdAssignment(tuple(rng.sample(range(bound), n)), UNIQUE)
    ids.validate_for(g)
    return ids


def monotone_chain_ids(n: int) -> IdAssignment:
    """ids(i) = i around the ring: one local minimum, one local maximum, and a
    single monotone chain of length n-1 (the adversarial input for the
    linear-time protocols)."""
    if n < 3:
        raise TopologyError(f"a cycle needs at least 3 nodes, got {n}")
    return IdAssignment(tuple(range(n)), UNIQUE)


def proper_coloring_ids(g: Graph, k: int, seed: int = 0) -> IdAssignment:
    """Seeded proper coloring of g with values in [0, k).

    Cycles are handled exactly: k = 2 works only on even rings, k >= 3 always.
    On general graphs a randomized greedy pass is used and raises when it gets
    stuck (guaranteed to succeed for k > max_degree).
    """
    n = g.node_count
    rng = random.Random(f"proper:{seed}")
    if k < 2:
        raise ColoringInfeasible("at least 2 colors are needed")
    if g.is_cycle and _is_ring_order(g):
        values = _ring_coloring(n, k, rng)
    else:
        values = _greedy_coloring(g, k, rng)
    ids = IdAssignment(tuple(values), PROPER)
    ids.validate_for(g)
    return ids


def _is_ring_order(g: Graph) -> bool:
    n = g.node_count
    return all(g.adjacency[i] == tuple(sorted(((i - 1) % n, (i + 1) % n))) for i in range(n))


def _ring_coloring(n: int, k: int, rng: random.Random) -> list[int]:
    if k == 2:
        if n % 2 == 1:
            raise ColoringInfeasible("an odd cycle is not 2-colorable")
        phase = rng.randrange(2)
        return [(i + phase) % 2 for i in range(n)]
    values = [rng.randrange(k)]
    for i in range(1, n):
        banned = {values[i - 1]}
        if i == n - 1:
            banned.add(values[0])
        values.append(rng.choice([c for c in range(k) if c not in banned]))
    return values


def _greedy_coloring(g: Graph, k: int, rng: random.Random) -> list[int]:
    order = list(range(g.node_count))
    rng.shuffle(order)
    values: list[int | None] = [None] * g.node_count
    for p in order:
        banned = {values[q] for q in g.adjacency[p] if values[q] is not None}
        free = [c for c in range(k) if c not in banned]
        if not free:
            raise ColoringInfeasible(f"greedy coloring stuck at node {p} with {k} colors")
        values[p] = rng.choice(free)
    return [v for v in values if v is not None]


def parse_id_list(lines: Iterable[str], g: Graph) -> IdAssignment:
    """Parse the 'node id' per line format; '#' starts a comment."""
    values: dict[int, int] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'node id', got {raw!r}")
        node, value = int(parts[0]), int(parts[1])
        if node in values:
            raise ValueError(f"line {lineno}: node {node} assigned twice")
        values[node] = value
    if sorted(values) != list(range(g.node_count)):
        raise ValueError("id file must assign every node exactly once")
    return explicit_ids(g, [values[p] for p in range(g.node_count)])


def load_ids(path: str, g: Graph) -> IdAssignment:
    with open(path, encoding="utf-8") as fh:
        return parse_id_list(fh, g)
