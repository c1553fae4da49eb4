import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from xbarmap.errors import DegenerateGraph, InvalidParameter, ParseError, ValidationError
from xbarmap.network import (
    Edge,
    Network,
    dump_network,
    edge_density,
    from_edge_list,
    gini_coefficient,
    gini_sparsity,
    load_network,
    max_fan_in,
    network_metrics,
    parse_rational,
    round_metric,
)


def test_edges_sorted_and_adjacency():
    net = Network(4, [Edge(2, 0), Edge(0, 1), Edge(0, 2), Edge(3, 1)])
    assert [(e.pre, e.post) for e in net.edges] == [(0, 1), (0, 2), (2, 0), (3, 1)]
    assert net.predecessors == ((2,), (0, 3), (0,), ())
    assert net.successors == ((1, 2), (), (0,), (1,))
    assert net.fan_in(1) == 2
    assert net.sources() == [0, 2, 3]
    assert max_fan_in(net) == 2


def test_default_thresholds_are_one():
    assert Network(3).thresholds == (1, 1, 1)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"node_count": -1},
        {"node_count": 2, "edges": [Edge(0, 2)]},
        {"node_count": 2, "edges": [Edge(0, 1), Edge(0, 1, Fraction(2))]},
        {"node_count": 2, "edges": [Edge(0, 1, delay=-1)]},
        {"node_count": 2, "thresholds": (1,)},
        {"node_count": 2, "thresholds": (1, 0)},
        {"node_count": 2, "inputs": (0, 0)},
        {"node_count": 2, "outputs": (5,)},
    ],
)
def test_structural_errors(kwargs):
    with pytest.raises(ValidationError):
        Network(**kwargs)


def test_load_roundtrip():
    net = Network(3, [Edge(0, 1, Fraction(-1, 2), 2), Edge(1, 2)], thresholds=(1, Fraction(3, 2), 2), inputs=(0,), outputs=(2,))
    again = load_network(dump_network(net))
    assert again == net
    assert dump_network(again) == dump_network(net)


def test_load_accepts_file_objects_and_rational_strings(tmp_path):
    p = tmp_path / "n.json"
    p.write_text(json.dumps({"nodes": 2, "edges": [{"pre": 0, "post": 1, "weight": "3/4"}]}))
    with open(p, "rb") as fh:
        net = load_network(fh)
    assert net.edges[0].weight == Fraction(3, 4)


@pytest.mark.parametrize("text", ["{", "[1, 2]", b"\xff\xfe"])
def test_load_parse_errors(text):
    with pytest.raises(ParseError):
        load_network(text)


@pytest.mark.parametrize(
    "doc",
    [
        {"nodes": 2},
        {"nodes": 2, "edges": [], "colour": 1},
        {"nodes": 2, "edges": [{"pre": 0}]},
        {"nodes": 2, "edges": [{"pre": 0, "post": 1, "gain": 2}]},
        {"nodes": True, "edges": []},
        {"nodes": 2, "edges": [{"pre": 0, "post": 1, "weight": "x"}]},
        {"nodes": 2, "edges": [{"pre": 0, "post": 1, "weight": float("nan")}]},
    ],
)
def test_load_validation_errors(doc):
    with pytest.raises(ValidationError):
        load_network(json.dumps(doc))


def test_unknown_format():
    with pytest.raises(InvalidParameter):
        load_network("{}", format="xml")


def test_parse_rational_float_uses_decimal_repr():
    assert parse_rational(0.1) == Fraction(1, 10)
    with pytest.raises(ValidationError):
        parse_rational(True)


def test_density_conventions():
    net = from_edge_list(4, [(0, 1), (1, 2), (2, 3)])
    assert edge_density(net) == Fraction(3, 16)
    assert edge_density(net, "ordered_pairs") == Fraction(3, 12)
    with pytest.raises(InvalidParameter):
        edge_density(net, "other")
    with pytest.raises(DegenerateGraph):
        edge_density(Network(1))


def test_round_metric_modes():
    assert str(round_metric(Fraction(88, 10000) + Fraction(6, 10**6))) == "0.0088"
    assert str(round_metric(Fraction(7799, 10**6), mode="truncate")) == "0.0077"
    assert str(round_metric(Fraction(7799, 10**6), mode="round")) == "0.0078"
    with pytest.raises(InvalidParameter):
        round_metric(1, mode="ceil")


def _gini_pairs(values):
    """Mean-absolute-difference definition, independent of the sorted-rank formula."""
    n = len(values)
    total = sum(values)
    if total == 0:
        return Fraction(0)
    diff = sum(abs(a - b) for a in values for b in values)
    return Fraction(diff, 2 * n * total)


@given(st.lists(st.integers(0, 20), min_size=1, max_size=30))
def test_gini_matches_pairwise_definition(values):
    assert gini_coefficient(values) == _gini_pairs(values)


def test_gini_edges():
    assert gini_coefficient([]) == 0
    assert gini_coefficient([5, 5, 5]) == 0
    assert gini_coefficient([0, 0, 0, 4]) == Fraction(3, 4)
    star = from_edge_list(4, [(0, 3), (1, 3), (2, 3)])
    assert gini_sparsity(star, "incoming") == Fraction(3, 4)
    assert gini_sparsity(star, "outgoing") == Fraction(1, 4)
    with pytest.raises(InvalidParameter):
        gini_sparsity(star, "sideways")


def test_network_metrics_row():
    row = network_metrics(from_edge_list(4, [(0, 3), (1, 3)]))
    assert row["node_count"] == 4 and row["edge_count"] == 2 and row["max_fan_in"] == 2
    assert row["edge_density"] == 2 / 16
    assert network_metrics(Network(1))["edge_density"] is None
