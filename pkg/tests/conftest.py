from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pedscale import Multigraph, build_structure, infer_simple_geoms
from pedscale.mock import mock_network


def square_graph() -> Multigraph:
    """4-cycle on a 100 m square: (0,0)-(100,0)-(100,100)-(0,100)."""
    g = Multigraph(crs_tag="local-m")
    g.add_node("a", 0.0, 0.0)
    g.add_node("b", 100.0, 0.0)
    g.add_node("c", 100.0, 100.0)
    g.add_node("d", 0.0, 100.0)
    g.add_edge("a", "b")
    g.add_edge("b", "c")
    g.add_edge("c", "d")
    g.add_edge("a", "d")
    return infer_simple_geoms(g)


def path3_graph() -> Multigraph:
    """A - B - C path, two 100 m edges."""
    g = Multigraph(crs_tag="local-m")
    g.add_node("A", 0.0, 0.0)
    g.add_node("B", 100.0, 0.0)
    g.add_node("C", 200.0, 0.0)
    g.add_edge("A", "B")
    g.add_edge("B", "C")
    return infer_simple_geoms(g)


@pytest.fixture
def square():
    return square_graph()


@pytest.fixture
def path3():
    return path3_graph()


@pytest.fixture(scope="session")
def mock_graph():
    return mock_network()


@pytest.fixture(scope="session")
def mock_structure(mock_graph):
    return build_structure(mock_graph)
