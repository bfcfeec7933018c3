import math

import numpy as np
import pytest

from pedscale import (
    GraphError,
    MetricsTable,
    Multigraph,
    build_structure,
    decompose,
    infer_simple_geoms,
    remove_filler_nodes,
    structure_to_graph,
    to_dual,
)


def straight_edge_graph():
    g = Multigraph()
    g.add_node("a", 0, 0)
    g.add_node("b", 100, 0)
    g.add_edge("a", "b", geom=[(0, 0), (100, 0)])
    return g


def test_build_straight_edge_records():
    s = build_structure(straight_edge_graph())
    assert s.record_count == 2
    assert s.edge_length.tolist() == [100.0, 100.0]
    assert s.edge_angle.tolist() == [0.0, 0.0]
    fwd = {(int(s.edge_start[i]), int(s.edge_end[i])): i for i in range(2)}
    east = fwd[(0, 1)]
    west = fwd[(1, 0)]
    assert s.edge_in_bearing[east] == 90.0
    assert s.edge_out_bearing[east] == 90.0
    assert s.edge_in_bearing[west] == 270.0  # rotated 180
    assert s.edge_reverse[east] == west and s.edge_reverse[west] == east


def test_build_l_shape_angle_sum():
    g = Multigraph()
    g.add_node("a", 0, 0)
    g.add_node("b", 100, 100)
    g.add_edge("a", "b", geom=[(0, 0), (100, 0), (100, 100)])
    s = build_structure(g)
    assert s.edge_length[0] == pytest.approx(200.0)
    assert s.edge_angle[0] == pytest.approx(90.0)
    # both directed records carry the same curvature
    assert s.edge_angle[1] == pytest.approx(90.0)


def test_build_s_curve_sums_absolute_turns():
    # two 45-degree turns of opposite sign -> 90 cumulative
    c = 70.71067811865476
    g = Multigraph()
    g.add_node("a", 0, 0)
    g.add_node("b", 200 + c, c)
    g.add_edge("a", "b", geom=[(0, 0), (100, 0), (100 + c, c), (200 + c, c)])
    s = build_structure(g)
    assert s.edge_angle[0] == pytest.approx(90.0, abs=1e-9)


def test_build_rejects_zero_length_edge():
    g = Multigraph()
    g.add_node("a", 0, 0)
    g.add_edge("a", "a", geom=[(0, 0), (0, 0)])
    with pytest.raises(GraphError, match="zero length"):
        build_structure(g)


def test_adjacency_partitions_records(mock_structure):
    s = mock_structure
    assert s.indptr[0] == 0
    assert s.indptr[-1] == s.record_count
    for i in range(s.node_count):
        for rec in range(s.indptr[i], s.indptr[i + 1]):
            assert s.edge_start[rec] == i
    # every record's reverse swaps endpoints and keeps length/angle
    for rec in range(s.record_count):
        rev = s.edge_reverse[rec]
        assert s.edge_reverse[rev] == rec
        assert s.edge_start[rec] == s.edge_end[rev]
        assert s.edge_length[rec] == s.edge_length[rev]
        assert s.edge_angle[rec] == s.edge_angle[rev]


def test_structure_round_trip(mock_graph, mock_structure):
    g2 = structure_to_graph(mock_structure)
    assert list(g2.nodes) == list(mock_graph.nodes)
    assert sorted(g2.edge_keys()) == sorted(mock_graph.edge_keys())
    for ek in mock_graph.edge_keys():
        assert np.array_equal(g2.edge(ek).geom, mock_graph.edge(ek).geom)
    for nid in mock_graph.nodes:
        assert g2.nodes[nid].live == mock_graph.nodes[nid].live


def test_structure_to_graph_with_metrics(mock_structure):
    table = MetricsTable(node_ids=list(mock_structure.node_ids))
    table.add_node("cc_harmonic", 400, np.arange(len(mock_structure.node_ids), dtype=float))
    g = structure_to_graph(mock_structure, metrics=table)
    assert g.meta["node_metrics"][mock_structure.node_ids[3]]["cc_harmonic_400"] == 3.0


def test_structure_to_graph_rejects_unknown_metric_node(mock_structure):
    table = MetricsTable(node_ids=["nope"])
    table.add_node("cc_harmonic", 400, [1.0])
    with pytest.raises(GraphError, match="nope"):
        structure_to_graph(mock_structure, metrics=table)


def test_empty_structure_round_trip():
    s = build_structure(Multigraph())
    g = structure_to_graph(s)
    assert g.node_count == 0 and g.edge_count == 0


def test_decompose_even_split():
    out = decompose(straight_edge_graph(), 25.0)
    assert out.node_count == 5  # 2 + 3 interpolated
    assert out.edge_count == 4
    for e in out.edges():
        assert e.length == pytest.approx(25.0, rel=1e-12)


def test_decompose_ceil_equalises():
    g = Multigraph()
    g.add_node("a", 0, 0)
    g.add_node("b", 99, 0)
    g.add_edge("a", "b", geom=[(0, 0), (99, 0)])
    out = decompose(g, 25.0)
    lengths = sorted(e.length for e in out.edges())
    assert len(lengths) == 4
    assert lengths[0] == pytest.approx(24.75, rel=1e-12)
    assert lengths[-1] == pytest.approx(24.75, rel=1e-12)


def test_decompose_identity_when_short(square):
    out = decompose(square, 150.0)
    assert sorted(out.edge_keys()) == sorted(square.edge_keys())


def test_decompose_rejects_nonpositive():
    with pytest.raises(GraphError):
        decompose(straight_edge_graph(), 0.0)


def test_decompose_invariants(mock_graph):
    total = mock_graph.total_length()
    for max_len in (25.0, 50.0, 100.0):
        out = decompose(mock_graph, max_len)
        assert out.total_length() == pytest.approx(total, rel=1e-9)
        for e in out.edges():
            assert e.length <= max_len * (1 + 1e-9)
        # original nodes keep their degrees; added nodes are degree 2
        for nid in mock_graph.nodes:
            assert out.degree(nid) == mock_graph.degree(nid)
        for nid in out.nodes:
            if nid not in mock_graph.nodes:
                assert out.degree(nid) == 2


def test_decompose_then_filler_recovers_topology(mock_graph):
    out = remove_filler_nodes(decompose(mock_graph, 40.0))
    assert out.node_count == mock_graph.node_count
    assert out.edge_count == mock_graph.edge_count


def test_decompose_node_counts_normalise_by_length():
    # two equal 300 m routes; finer decomposition puts proportionally more
    # nodes along a route: count = length/step - 1
    g = Multigraph()
    g.add_node("a", 0, 0)
    g.add_node("b", 300, 0)
    g.add_edge("a", "b", geom=[(0, 0), (300, 0)])
    g.add_edge("a", "b", geom=[(0, 0), (150, 200), (300, 0)], key=1)
    fine = decompose(g, 25.0)
    nodes_straight = sum(1 for n in fine.nodes if "::0::" in n)
    nodes_curved = sum(1 for n in fine.nodes if "::1::" in n)
    assert nodes_straight == 300 // 25 - 1
    assert nodes_curved == math.ceil(500 / 25) - 1


def test_dual_collinear_pair():
    g = Multigraph()
    g.add_node("a", 0, 0)
    g.add_node("b", 100, 0)
    g.add_node("c", 200, 0)
    g.add_edge("a", "b", geom=[(0, 0), (100, 0)])
    g.add_edge("b", "c", geom=[(100, 0), (200, 0)])
    dual = to_dual(g)
    assert dual.node_count == 2
    assert dual.edge_count == 1
    (e,) = dual.edges()
    assert e.length == pytest.approx(100.0)
    s = build_structure(dual)
    assert s.edge_angle[0] == pytest.approx(0.0, abs=1e-9)
    # dual nodes sit at the street midpoints
    assert dual.nodes["a_b_0"].x == pytest.approx(50.0)
    assert dual.nodes["b_c_0"].x == pytest.approx(150.0)


def test_dual_perpendicular_pair_angle():
    g = Multigraph()
    g.add_node("a", 0, 0)
    g.add_node("b", 100, 0)
    g.add_node("c", 100, 100)
    g.add_edge("a", "b", geom=[(0, 0), (100, 0)])
    g.add_edge("b", "c", geom=[(100, 0), (100, 100)])
    dual = to_dual(g)
    s = build_structure(dual)
    assert s.edge_angle[0] == pytest.approx(90.0, abs=1e-9)


def test_dual_degree_four_junction_pairs():
    g = Multigraph()
    g.add_node("o", 0, 0)
    for i, (x, y) in enumerate([(100, 0), (-100, 0), (0, 100), (0, -100)]):
        g.add_node(f"n{i}", x, y)
        g.add_edge("o", f"n{i}")
    dual = to_dual(infer_simple_geoms(g))
    assert dual.node_count == 4
    assert dual.edge_count == 6  # C(4, 2)


def test_dual_total_edge_count_matches_junction_pairs(mock_graph):
    dual = to_dual(mock_graph)
    assert dual.node_count == mock_graph.edge_count
    expected_pairs = sum(
        g_deg * (g_deg - 1) // 2
        for g_deg in (mock_graph.degree(n) for n in mock_graph.nodes)
    )
    assert dual.edge_count == expected_pairs


def test_record_invariants_hold_on_mock(mock_structure):
    s = mock_structure
    assert np.all(s.edge_length > 0)
    assert np.all(s.edge_angle >= 0)
    for arr in (s.edge_in_bearing, s.edge_out_bearing):
        assert np.all((arr >= 0) & (arr < 360))
