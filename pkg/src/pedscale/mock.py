"""Deterministic mock networks and data points for tests and benchmarks."""

from __future__ import annotations

import math

import numpy as np

from .graph import Multigraph
from .layers import DataEntry

GRID_SPACING = 100.0


def mock_network() -> Multigraph:
    """Small hand-built street network in projected meters.

    A 5x5 grid with a couple of removed links, corner diagonals (so no node
    has degree 2), one curved street, one parallel-edge pair and a dead-end
    stub. Stable node ids make frozen expectations practical.
    """
    g = Multigraph(crs_tag="local-m")
    for i in range(5):
        for j in range(5):
            g.add_node(f"g{i}{j}", i * GRID_SPACING, j * GRID_SPACING)
    removed = {("g21", "g22"), ("g32", "g33")}
    for i in range(5):
        for j in range(5):
            if i < 4 and (f"g{i}{j}", f"g{i+1}{j}") not in removed:
                g.add_edge(f"g{i}{j}", f"g{i+1}{j}")
            if j < 4 and (f"g{i}{j}", f"g{i}{j+1}") not in removed:
                g.add_edge(f"g{i}{j}", f"g{i}{j+1}")
    # corner diagonals keep the grid free of degree-2 nodes
    g.add_edge("g00", "g11")
    g.add_edge("g40", "g31")
    g.add_edge("g04", "g13")
    g.add_edge("g44", "g33")
    # a curved street: same endpoints as a grid link, bulging arc geometry
    arc = _arc(200.0, 400.0, 300.0, 400.0, bulge=30.0)
    g.remove_edge(("g24", "g34", 0))
    g.add_edge("g24", "g34", geom=arc)
    # parallel pair: second, bulged edge between g43 and g44
    g.add_edge("g43", "g44", geom=_arc(400.0, 300.0, 400.0, 400.0, bulge=25.0), key=1)
    # dead-end stub off g02
    g.add_node("stub", -60.0, 200.0)
    g.add_edge("g02", "stub")
    from .clean import infer_simple_geoms

    return infer_simple_geoms(g)


def _arc(x0: float, y0: float, x1: float, y1: float, bulge: float, n: int = 9) -> np.ndarray:
    """Polyline arc from (x0, y0) to (x1, y1) bulging sideways by ``bulge``."""
    mx, my = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    dx, dy = x1 - x0, y1 - y0
    norm = math.hypot(dx, dy)
    nx, ny = -dy / norm, dx / norm
    pts = []
    for k in range(n):
        t = k / (n - 1)
        # quadratic bump, zero at the ends
        off = bulge * 4.0 * t * (1.0 - t)
        pts.append((x0 + dx * t + nx * off, y0 + dy * t + ny * off))
    return np.array(pts)


def synthetic_grid(n_x: int = 224, n_y: int = 224, spacing: float = 100.0,
                   jitter: float = 20.0, drop: float = 0.25, seed: int = 42) -> Multigraph:
    """Grid-with-noise network at city scale.

    Node positions are jittered, a fraction of links is dropped, and only the
    largest component is kept. Defaults give roughly 50k nodes / 75k edges.
    """
    rng = np.random.default_rng(seed)
    xs = np.arange(n_x)[:, None] * spacing + rng.uniform(-jitter, jitter, (n_x, n_y))
    ys = np.arange(n_y)[None, :] * spacing + rng.uniform(-jitter, jitter, (n_x, n_y))
    g = Multigraph(crs_tag="local-m")
    for i in range(n_x):
        for j in range(n_y):
            g.add_node(f"n{i}_{j}", float(xs[i, j]), float(ys[i, j]))
    links = []
    for i in range(n_x):
        for j in range(n_y):
            if i + 1 < n_x:
                links.append((f"n{i}_{j}", f"n{i+1}_{j}"))
            if j + 1 < n_y:
                links.append((f"n{i}_{j}", f"n{i}_{j+1}"))
    keep = rng.random(len(links)) >= drop
    for (a, b), k in zip(links, keep):
        if k:
            na, nb = g.nodes[a], g.nodes[b]
            g.add_edge(a, b, geom=[(na.x, na.y), (nb.x, nb.y)])
    comps = g.components()
    comps.sort(key=lambda c: -len(c))
    for comp in comps[1:]:
        for nid in comp:
            g.remove_node(nid)
    return g


def mock_data_points(g: Multigraph, n: int = 50, seed: int = 7,
                     categories: tuple[str, ...] = ("pub", "shop", "school"),
                     margin: float = 50.0) -> list[DataEntry]:
    """Random categorised, valued points scattered over the graph's bbox."""
    rng = np.random.default_rng(seed)
    xs = [node.x for node in g.nodes.values()]
    ys = [node.y for node in g.nodes.values()]
    x0, x1 = min(xs) - margin, max(xs) + margin
    y0, y1 = min(ys) - margin, max(ys) + margin
    entries = []
    for i in range(n):
        entries.append(DataEntry(
            id=f"p{i}",
            x=float(rng.uniform(x0, x1)),
            y=float(rng.uniform(y0, y1)),
            category=str(categories[int(rng.integers(len(categories)))]),
            value=float(np.round(rng.uniform(0.0, 100.0), 3)),
        ))
    return entries


def data_points_geojson(entries: list[DataEntry], category_field: str = "use",
                        value_field: str = "val") -> dict:
    """GeoJSON document for a set of data points (CLI fixture helper)."""
    features = []
    for e in entries:
        props = {"id": e.id}
        if e.category is not None:
            props[category_field] = e.category
        if e.value is not None:
            props[value_field] = e.value
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [e.x, e.y]},
            "properties": props,
        })
    return {"type": "FeatureCollection", "features": features}
