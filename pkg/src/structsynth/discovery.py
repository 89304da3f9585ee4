"""LLM-guided breadth-first discovery of the dependency graph."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .association import association_vector, pair_score
from .dataset import Dataset, few_shot_sample
from .depgraph import Cycle, DependencyGraph, Edge, Origin, commit, detect_cycles
from .errors import EmptySourceSet, ResolutionExhausted, Unparseable
from .llm import (
    Backend,
    Exchange,
    ask,
    parse_generate_response,
    parse_resolve_response,
    parse_source_response,
    render_generate_prompt,
    render_resolve_prompt,
    render_source_prompt,
)

log = logging.getLogger(__name__)

NO_RATIONALE = "(no rationale given)"


@dataclass(frozen=True)
class DiscoveryConfig:
    few_shot_k: int = 10
    max_resolution_rounds: int = 3
    generate_retry: int = 1
    seed: int = 0


@dataclass
class DiscoveryState:
    graph: DependencyGraph
    queue: deque = field(default_factory=deque)
    visited: set = field(default_factory=set)
    transcript: list[Exchange] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    generate_calls: int = 0

    def note(self, msg: str) -> None:
        log.info(msg)
        self.notes.append(msg)


@dataclass
class DiscoveryResult:
    graph: DependencyGraph
    transcript: list[Exchange]
    notes: list[str]
    generate_calls: int


class _Names:
    """Maps LLM spellings back onto schema attribute names (case-insensitive)."""

    def __init__(self, names: Iterable[str]):
        self._map = {n.casefold(): n for n in names}

    def get(self, name: str) -> str | None:
        return self._map.get(name.strip().casefold())


def _initial_sources(train: Dataset, few_shot: Dataset, backend: Backend, state: DiscoveryState,
                     names: _Names) -> list[str]:
    prompt = render_source_prompt(train.schema, few_shot)
    for current in (prompt, prompt.repaired()):
        text = backend.complete(current)
        try:
            raw = parse_source_response(text)
        except Unparseable as exc:
            state.transcript.append(Exchange("source", None, current.text, text, None, f"unparseable: {exc}"))
            continue
        sources = []
        for name in raw:
            known = names.get(name)
            if known is None:
                state.note(f"source: dropped unknown attribute {name!r}")
            elif known not in sources:
                sources.append(known)
        state.transcript.append(Exchange("source", None, current.text, text, sources))
        if sources:
            return sources
    raise EmptySourceSet("the model named no valid source attributes, even after a retry")


def _weakest_edge(cycle: Cycle, train: Dataset) -> Edge:
    def strength(e: Edge):
        return (abs(pair_score(train, e.source, e.target).value), e.key)

    return min(cycle.edges, key=strength)


def resolve_all_cycles(nodes: Iterable[str], candidate_edges: Iterable[Edge], backend: Backend,
                       train: Dataset, max_rounds: int = 3,
                       transcript: list[Exchange] | None = None,
                       notes: list[str] | None = None) -> set[tuple[str, str]]:
    """Ask the model to break every elementary cycle; returns pruned edge keys.

    An answer that does not name an edge on the cycle (or cannot be parsed)
    falls back to pruning the cycle edge whose endpoints have the weakest
    empirical association in ``train``.
    """
    nodes = frozenset(nodes)
    edges = list(candidate_edges)
    pruned: set[tuple[str, str]] = set()
    for _ in range(max_rounds):
        live = [e for e in edges if e.key not in pruned]
        cycles = detect_cycles(nodes, live)
        if not cycles:
            return pruned
        for cycle in cycles:
            on_cycle = {(e.source.casefold(), e.target.casefold()): e.key for e in cycle.edges}
            try:
                answer = ask(backend, render_resolve_prompt(cycle), parse_resolve_response, transcript)
            except Unparseable:
                answer = None
            hit = on_cycle.get((answer[0].casefold(), answer[1].casefold())) if answer else None
            if hit is not None:
                pruned.add(hit)
            else:
                fallback = _weakest_edge(cycle, train)
                if notes is not None:
                    notes.append(f"resolve: answer {answer} not on cycle {cycle}; pruned weakest edge {fallback}")
                pruned.add(fallback.key)
    live = [e for e in edges if e.key not in pruned]
    if detect_cycles(nodes, live):
        raise ResolutionExhausted(f"cycles remain after {max_rounds} resolution rounds")
    return pruned


def _proposals_to_edges(subject: str, proposals, names: _Names, state: DiscoveryState) -> list[Edge]:
    edges: dict[str, Edge] = {}
    for p in proposals:
        target = names.get(p.successor)
        if target is None:
            state.note(f"generate({subject}): dropped unknown attribute {p.successor!r}")
            continue
        if target == subject:
            state.note(f"generate({subject}): dropped self-loop")
            continue
        if target in edges:
            continue
        edges[target] = Edge(subject, target, p.rationale or NO_RATIONALE, Origin.LLM)
    return list(edges.values())


def discover_structure(train: Dataset, backend: Backend, cfg: DiscoveryConfig = DiscoveryConfig()
                       ) -> DiscoveryResult:
    if len(train) == 0:
        raise ValueError("discovery needs a non-empty training set")
    few_shot = few_shot_sample(train, cfg.few_shot_k, cfg.seed)
    names = _Names(train.names)
    state = DiscoveryState(graph=DependencyGraph())

    sources = _initial_sources(train, few_shot, backend, state, names)
    state.graph = DependencyGraph(frozenset(sources))
    state.queue.extend(sources)

    while state.queue:
        subject = state.queue.popleft()
        if subject in state.visited:
            continue
        state.visited.add(subject)

        scores = association_vector(train, subject)
        prompt = render_generate_prompt(subject, state.graph, scores, few_shot, train.schema)
        state.generate_calls += 1
        try:
            proposals = ask(backend, prompt, parse_generate_response, state.transcript, cfg.generate_retry)
        except Unparseable:
            state.note(f"generate({subject}): no parseable answer, treating as no successors")
            proposals = []
        proposed = _proposals_to_edges(subject, proposals, names, state)
        new_nodes = [e.target for e in proposed if e.target not in state.graph.nodes]

        nodes = state.graph.nodes | frozenset(new_nodes)
        existing = {e.key for e in state.graph.edges}
        candidate = list(state.graph.edges) + [e for e in proposed if e.key not in existing]
        pruned = resolve_all_cycles(nodes, candidate, backend, train, cfg.max_resolution_rounds,
                                    state.transcript, state.notes)
        state.graph = commit(state.graph, new_nodes, proposed, pruned)
        for n in new_nodes:
            if n not in state.visited:
                state.queue.append(n)

    return DiscoveryResult(state.graph, state.transcript, state.notes, state.generate_calls)
