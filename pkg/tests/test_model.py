import pytest
from hypothesis import given, settings, strategies as st

from macpp.errors import CycleError, GraphError
from macpp.model import ModelGraph, ParamVector, Role, biofilm_graph, check, topo_order, validate


def graph(spec):
    """Build from {name: role or (role, parent)}."""
    roles, parent_of = {}, {}
    for t, v in spec.items():
        if isinstance(v, tuple):
            roles[t], parent_of[t] = v
        else:
            roles[t] = v
    return ModelGraph(tuple(spec), roles, parent_of)


def test_biofilm_graph_valid_and_ordered():
    g = biofilm_graph()
    assert validate(g) == []
    order = topo_order(g)
    pos = {t: i for i, t in enumerate(order)}
    assert pos["Corynebacterium"] < pos["Streptococcus"] < pos["Pasteurellaceae"]
    assert pos["Corynebacterium"] < pos["Porphyromonas"]
    assert len(g.unrelated) == 5
    assert g.children_of("Corynebacterium") == ["Streptococcus", "Porphyromonas"]


def test_offspring_of_unrelated_rejected():
    g = graph({"U": "unrelated", "B": ("offspring", "U")})
    problems = validate(g)
    assert any("unrelated" in p for p in problems)
    with pytest.raises(GraphError):
        check(g)


def test_cycle_rejected():
    g = graph({"A": ("offspring", "B"), "B": ("offspring", "A")})
    assert any("cycle" in p for p in validate(g))
    with pytest.raises(CycleError):
        check(g)
    with pytest.raises(CycleError):
        topo_order(g)


def test_all_violations_reported():
    g = ModelGraph(("A", "B", "C"), {"A": "offspring", "B": "offspring", "C": "parent"},
                   {"B": "Q", "C": "A"})
    problems = validate(g)
    assert len(problems) >= 3  # A orphan, B unknown parent, C not offspring


def test_self_parent_rejected():
    assert validate(graph({"A": ("offspring", "A")}))


def test_orders():
    assert topo_order(graph({"C": ("offspring", "B"), "B": ("offspring", "A"), "A": "parent"})) == ["A", "B", "C"]
    g = graph({"X": "unrelated", "Y": "unrelated"})
    assert sorted(topo_order(g)) == ["X", "Y"]


def test_shared_parent_and_offspring_as_parent():
    g = graph({"A": "parent", "B": ("offspring", "A"), "C": ("offspring", "A"), "D": ("offspring", "B")})
    assert validate(g) == []


def test_graph_round_trip():
    g = biofilm_graph()
    assert ModelGraph.from_dict(g.to_dict()) == g


def test_param_vector_flat_round_trip():
    g = graph({"A": "parent", "B": ("offspring", "A"), "D": "unrelated"})
    pv = ParamVector({"B": 1.5}, {"B": 0.01}, {"A": 150.0}, {"D": 95.0}).check(g)
    flat = pv.flat(g)
    assert list(flat) == ["alpha[B]", "h[B]", "lambda[A]", "lambda[D]"]
    assert ParamVector.from_flat(g, flat) == pv
    assert ParamVector.from_dict(pv.to_dict()) == pv
    with pytest.raises(GraphError):
        ParamVector({"B": -1.0}, {"B": 0.01}, {"A": 150.0}, {"D": 95.0}).check(g)
    with pytest.raises(GraphError):
        ParamVector({"B": 1.0}, {}, {"A": 150.0}, {"D": 95.0}).check(g)


names = st.lists(st.text("abcdefgh", min_size=1, max_size=3), min_size=1, max_size=8, unique=True)


@settings(max_examples=200, deadline=None)
@given(names, st.data())
def test_valid_graphs_topo_sort(taxa, data):
    # random forest: each taxon may point at an earlier non-unrelated taxon
    roles, parent_of = {}, {}
    for i, t in enumerate(taxa):
        choices = [u for u in taxa[:i] if roles[u] != Role.UNRELATED]
        kind = data.draw(st.sampled_from(["parent", "unrelated"] + (["offspring"] if choices else [])))
        roles[t] = Role(kind)
        if kind == "offspring":
            parent_of[t] = data.draw(st.sampled_from(choices))
    g = ModelGraph(tuple(taxa), roles, parent_of)
    assert validate(g) == []
    order = topo_order(g)
    assert sorted(order) == sorted(taxa)
    pos = {t: i for i, t in enumerate(order)}
    assert all(pos[p] < pos[c] for c, p in parent_of.items())
    mapping = {t: t.upper() + "_" for t in taxa}
    assert validate(g.relabel(mapping)) == []
