import json

import pytest

from structsynth.association import pair_score
from structsynth.depgraph import Edge, Origin, detect_cycles
from structsynth.discovery import DiscoveryConfig, discover_structure, resolve_all_cycles
from structsynth.errors import EmptySourceSet, ResolutionExhausted
from structsynth.llm import MockBackend

from scenarios import TRIANGLE_SCRIPT, abc_train, edge


def keys(g):
    return {e.key for e in g.edges}


def test_two_node_trace():
    m = MockBackend({
        "source": ['["A"]'],
        "generate:A": [json.dumps([edge("B", "rB")])],
        "generate:B": ["[]"],
    })
    r = discover_structure(abc_train(), m)
    assert r.graph.nodes == {"A", "B"}
    assert keys(r.graph) == {("A", "B")}
    assert r.graph.edge("A", "B").rationale == "rB"
    assert r.graph.edge("A", "B").origin is Origin.LLM
    assert [c.key for c in m.calls] == ["source:", "generate:A", "generate:B"]
    assert r.generate_calls == 2


def test_triangle_with_one_resolution():
    m = MockBackend(TRIANGLE_SCRIPT)
    r = discover_structure(abc_train(), m)
    assert keys(r.graph) == {("A", "B"), ("B", "C")}
    assert detect_cycles(r.graph.nodes, r.graph.edges) == []
    assert m.consumed["resolve"] == 1
    resolve_prompt = [c for c in m.calls if c.kind.value == "resolve"][0]
    assert "C feeds back into A" in resolve_prompt.text


def test_empty_source_set_after_retry():
    m = MockBackend({"source": ["[]", "[]"]})
    with pytest.raises(EmptySourceSet):
        discover_structure(abc_train(), m)
    assert m.consumed["source"] == 2


def test_unknown_source_names_are_dropped():
    m = MockBackend({"source": ['["Zed"]', '["a"]'], "generate:A": ["[]"]})
    r = discover_structure(abc_train(), m)
    assert r.graph.nodes == {"A"}


def test_unknown_successor_and_self_loop_dropped():
    m = MockBackend({
        "source": ['["A"]'],
        "generate:A": [json.dumps([edge("Nope", "x"), edge("A", "self"), edge("b", ""), edge("B", "dup")])],
        "generate:B": ["[]"],
    })
    r = discover_structure(abc_train(), m)
    assert keys(r.graph) == {("A", "B")}
    assert r.graph.edge("A", "B").rationale
    assert any("Nope" in n for n in r.notes)


def test_unparseable_generate_is_no_successors():
    m = MockBackend({"source": ['["A", "B"]'], "generate": ["garbage", "more garbage", "[]"]})
    r = discover_structure(abc_train(), m)
    assert r.graph.nodes == {"A", "B"} and r.graph.edges == ()


def test_each_node_expanded_once():
    # B is proposed by both A and C; it must be generated for only once
    m = MockBackend({
        "source": ['["A", "C"]'],
        "generate:A": [json.dumps([edge("B", "r")])],
        "generate:C": [json.dumps([edge("B", "r")])],
        "generate:B": ["[]"],
    })
    r = discover_structure(abc_train(), m)
    assert r.generate_calls == 3 <= len(abc_train().names)
    assert keys(r.graph) == {("A", "B"), ("C", "B")}


def test_replay_determinism():
    runs = [discover_structure(abc_train(), MockBackend(TRIANGLE_SCRIPT)) for _ in range(2)]
    assert runs[0].graph == runs[1].graph
    assert [e.to_json() for e in runs[0].transcript] == [e.to_json() for e in runs[1].transcript]


TRI = [Edge("A", "B", "r1"), Edge("B", "C", "r2"), Edge("C", "A", "r3")]


def test_resolve_no_cycles_makes_no_calls():
    m = MockBackend({})
    assert resolve_all_cycles("ABC", TRI[:2], m, abc_train()) == set()
    assert m.calls == []


def test_resolve_on_cycle_answer():
    m = MockBackend({"resolve": ['{"from": "B", "to": "C"}']})
    assert resolve_all_cycles("ABC", TRI, m, abc_train()) == {("B", "C")}


def test_resolve_off_cycle_answer_falls_back_to_weakest_association():
    train = abc_train()
    m = MockBackend({"resolve": ['{"from": "A", "to": "Q"}']})
    pruned = resolve_all_cycles("ABC", TRI, m, train)
    strength = {e.key: abs(pair_score(train, e.source, e.target).value) for e in TRI}
    assert pruned == {min(strength, key=strength.get)}
    # the fixture makes C-A the weakest pair
    assert pruned == {("C", "A")}


def test_resolution_exhausted():
    # two disjoint 2-cycles and a resolver that cannot help within zero rounds
    m = MockBackend({"resolve": ['{"from": "A", "to": "B"}']})
    with pytest.raises(ResolutionExhausted):
        resolve_all_cycles("AB", [Edge("A", "B", "x"), Edge("B", "A", "y")], m, abc_train(), max_rounds=0)


def test_discovered_graph_invariants():
    train = abc_train()
    m = MockBackend({
        "source": ['["A"]'],
        "generate:A": [json.dumps([edge("B", "1"), edge("C", "2")])],
        "generate:B": [json.dumps([edge("A", "3"), edge("C", "4")])],
        "generate:C": [json.dumps([edge("B", "5")])],
        "resolve": ['{"from": "B", "to": "A"}', '{"from": "C", "to": "B"}', '{"from": "x", "to": "y"}'],
    })
    r = discover_structure(train, m, DiscoveryConfig())
    assert detect_cycles(r.graph.nodes, r.graph.edges) == []
    assert r.graph.nodes <= set(train.names)
    assert all(e.rationale and e.origin is Origin.LLM for e in r.graph.edges)
    assert r.generate_calls <= len(train.names)
