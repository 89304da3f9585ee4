"""Dependency DAG over attribute names with rationale-carrying edges."""

from __future__ import annotations

import enum
import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import CyclicInput, CyclicResult, FormatError, UnknownNode

EMPTY_GRAPH_TEXT = "(no edges yet)"


class Origin(str, enum.Enum):
    LLM = "llm_proposed"
    MANUAL = "manual"


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    rationale: str = ""
    origin: Origin = Origin.LLM

    def __post_init__(self):
        if self.source == self.target:
            raise ValueError(f"self-loop on {self.source!r}")
        object.__setattr__(self, "origin", Origin(self.origin))

    @property
    def key(self) -> tuple[str, str]:
        return (self.source, self.target)

    def __str__(self):
        return f"{self.source} -> {self.target}"


@dataclass(frozen=True)
class DependencyGraph:
    """Immutable DAG; ``edges`` is kept sorted by (source, target)."""

    nodes: frozenset[str] = field(default_factory=frozenset)
    edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        nodes = frozenset(self.nodes)
        edges = tuple(sorted(self.edges, key=lambda e: e.key))
        seen = set()
        for e in edges:
            if e.source not in nodes or e.target not in nodes:
                raise UnknownNode(f"edge {e} references a node outside the graph")
            if e.key in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e.key)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def build(cls, nodes: Iterable[str], edges: Iterable[Edge]) -> "DependencyGraph":
        """Like the constructor but keeps the first of any duplicate edges."""
        return cls(frozenset(nodes), tuple(dedupe_edges(edges)))

    def edge(self, source: str, target: str) -> Edge | None:
        for e in self.edges:
            if e.key == (source, target):
                return e
        return None

    def sorted_nodes(self) -> list[str]:
        return sorted(self.nodes)

    def to_json(self) -> dict:
        return {
            "nodes": self.sorted_nodes(),
            "edges": [
                {"from": e.source, "to": e.target, "rationale": e.rationale, "origin": e.origin.value}
                for e in self.edges
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, obj: Mapping) -> "DependencyGraph":
        try:
            edges = [
                Edge(e["from"], e["to"], e.get("rationale", ""), Origin(e.get("origin", Origin.LLM.value)))
                for e in obj["edges"]
            ]
            return cls(frozenset(obj["nodes"]), tuple(edges))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed graph JSON: {exc}") from exc

    @classmethod
    def loads(cls, text: str) -> "DependencyGraph":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"graph file is not valid JSON: {exc}") from exc
        return cls.from_json(obj)


def dedupe_edges(edges: Iterable[Edge]) -> list[Edge]:
    out: dict[tuple[str, str], Edge] = {}
    for e in edges:
        out.setdefault(e.key, e)
    return list(out.values())


@dataclass(frozen=True)
class Cycle:
    """Elementary cycle, rotated so the smallest node name comes first."""

    edges: tuple[Edge, ...]

    @property
    def nodes(self) -> tuple[str, ...]:
        return tuple(e.source for e in self.edges)

    def __len__(self):
        return len(self.edges)

    def __str__(self):
        return " -> ".join(self.nodes + (self.nodes[0],))


def _adjacency(nodes: Iterable[str], edges: Iterable[Edge]) -> dict[str, list[str]]:
    adj: dict[str, list[str]] = {n: [] for n in nodes}
    for e in edges:
        if e.source not in adj or e.target not in adj:
            raise UnknownNode(f"edge {e} references a node outside the node set")
        adj[e.source].append(e.target)
    for v in adj.values():
        v.sort()
    return adj


def _simple_cycles(adj: dict[str, list[str]]) -> list[list[str]]:
    """Johnson's algorithm: each elementary cycle once, starting at its smallest node.

    Start nodes are taken in sorted order; each search is restricted to nodes
    greater than the start, so a cycle is only found from its minimum node.
    """
    order = sorted(adj)
    rank = {n: i for i, n in enumerate(order)}
    found: list[list[str]] = []
    for start in order:
        lo = rank[start]
        sub = {u: [w for w in adj[u] if rank[w] >= lo] for u in order if rank[u] >= lo}
        blocked: set[str] = set()
        bmap: dict[str, set[str]] = defaultdict(set)
        path = [start]

        def unblock(u):
            stack = [u]
            while stack:
                x = stack.pop()
                if x in blocked:
                    blocked.discard(x)
                    stack.extend(bmap.pop(x, ()))

        # iterative circuit() to stay clear of the recursion limit
        blocked.add(start)
        stack = [(start, iter(sub[start]), False)]
        while stack:
            v, it, closed = stack[-1]
            advanced = False
            for w in it:
                if w == start:
                    found.append(list(path))
                    closed = True
                    stack[-1] = (v, it, closed)
                elif w not in blocked:
                    path.append(w)
                    blocked.add(w)
                    stack[-1] = (v, it, closed)
                    stack.append((w, iter(sub[w]), False))
                    advanced = True
                    break
            if advanced:
                continue
            stack.pop()
            if closed:
                unblock(v)
            else:
                for w in sub[v]:
                    bmap[w].add(v)
            path.pop()
            if stack:
                pv, pit, pclosed = stack[-1]
                stack[-1] = (pv, pit, pclosed or closed)
    return found


def detect_cycles(nodes: Iterable[str], edges: Iterable[Edge]) -> list[Cycle]:
    edges = list(edges)
    by_key = {}
    for e in edges:
        by_key.setdefault(e.key, e)
    adj = _adjacency(nodes, edges)
    cycles = []
    for path in _simple_cycles(adj):
        ring = path + [path[0]]
        cycles.append(Cycle(tuple(by_key[(a, b)] for a, b in zip(ring, ring[1:]))))
    cycles.sort(key=lambda c: (len(c), c.nodes))
    return cycles


def is_acyclic(nodes: Iterable[str], edges: Iterable[Edge]) -> bool:
    try:
        _longest_path_levels(_adjacency(nodes, edges))
    except CyclicInput:
        return False
    return True


def commit(g: DependencyGraph, new_nodes: Iterable[str], accepted: Iterable[Edge],
           pruned: Iterable[Edge | tuple[str, str]]) -> DependencyGraph:
    """Add nodes and accepted edges, drop pruned ones; the result must be a DAG."""
    drop = {p.key if isinstance(p, Edge) else tuple(p) for p in pruned}
    nodes = g.nodes | frozenset(new_nodes)
    edges = [e for e in dedupe_edges(list(g.edges) + list(accepted)) if e.key not in drop]
    if not is_acyclic(nodes, edges):
        remaining = detect_cycles(nodes, edges)
        raise CyclicResult(f"graph still has {len(remaining)} cycle(s), e.g. {remaining[0]}")
    return DependencyGraph(nodes, tuple(edges))


def _longest_path_levels(adj: dict[str, list[str]]) -> dict[str, int]:
    indeg = {n: 0 for n in adj}
    for u in adj:
        for w in adj[u]:
            indeg[w] += 1
    level = {n: 0 for n in adj}
    ready = sorted(n for n, d in indeg.items() if d == 0)
    done = 0
    while ready:
        u = ready.pop()
        done += 1
        for w in adj[u]:
            level[w] = max(level[w], level[u] + 1)
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    if done != len(adj):
        raise CyclicInput("graph contains a cycle")
    return level


def topological_layers(g: DependencyGraph) -> list[frozenset[str]]:
    """Longest-path layering: each node sits one layer after its deepest parent."""
    level = _longest_path_levels(_adjacency(g.nodes, g.edges))
    if not level:
        return []
    layers = [set() for _ in range(max(level.values()) + 1)]
    for n, lv in level.items():
        layers[lv].add(n)
    return [frozenset(s) for s in layers]


def parents(g: DependencyGraph, targets: Iterable[str]) -> frozenset[str]:
    targets = frozenset(targets)
    unknown = targets - g.nodes
    if unknown:
        raise UnknownNode(f"unknown node(s): {sorted(unknown)}")
    return frozenset(e.source for e in g.edges if e.target in targets) - targets


def subgraph(g: DependencyGraph, nodes: Iterable[str]) -> DependencyGraph:
    nodes = frozenset(nodes)
    unknown = nodes - g.nodes
    if unknown:
        raise UnknownNode(f"unknown node(s): {sorted(unknown)}")
    return DependencyGraph(nodes, tuple(e for e in g.edges if e.source in nodes and e.target in nodes))


def edge_block(e: Edge) -> str:
    return f"- {e.source} -> {e.target}\nRational: {e.rationale}"


def graph_text(g: DependencyGraph) -> str:
    if not g.edges:
        return EMPTY_GRAPH_TEXT
    return "\n\n".join(edge_block(e) for e in g.edges)
