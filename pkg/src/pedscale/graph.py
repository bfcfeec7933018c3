"""Primal street-network multigraph: nodes with planar coordinates and keyed
parallel edges, each optionally carrying a polyline geometry decoupled from
the topology."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry

# Geometry endpoints must coincide with node coordinates within this slack;
# closer gets snapped exactly, farther is an error.
TAU_SNAP = 0.01

EdgeKey = tuple[str, str, int]


class GraphError(ValueError):
    """Raised for structural violations of the multigraph contracts."""


@dataclass
class Node:
    id: str
    x: float
    y: float
    live: bool = True


@dataclass
class Edge:
    start: str
    end: str
    key: int
    geom: np.ndarray | None = None

    @property
    def edge_key(self) -> EdgeKey:
        return (self.start, self.end, self.key)

    @property
    def length(self) -> float:
        if self.geom is None:
            raise GraphError(f"edge {self.edge_key} has no geometry")
        return geometry.length(self.geom)


def canonical_ends(a: str, b: str) -> tuple[str, str, bool]:
    """Return (start, end, flipped) with the lexicographically smaller id first."""
    if b < a:
        return b, a, True
    return a, b, False


class Multigraph:
    """Undirected multigraph with string node ids and keyed parallel edges.

    Value semantics: analysis code treats instances as immutable and the
    pipeline stages produce modified copies; mutation methods exist for
    construction and for the cleaning passes.
    """

    def __init__(self, crs_tag: str | None = None):
        self.nodes: dict[str, Node] = {}
        self._edges: dict[EdgeKey, Edge] = {}
        # node id -> incident edge keys; self-loops appear twice
        self._adj: dict[str, list[EdgeKey]] = {}
        self.crs_tag = crs_tag
        self.meta: dict = {}

    # -- construction ------------------------------------------------------

    def add_node(self, node_id: str, x: float, y: float, live: bool = True) -> Node:
        node_id = str(node_id)
        if node_id in self.nodes:
            raise GraphError(f"duplicate node id {node_id!r}")
        if not (math.isfinite(x) and math.isfinite(y)):
            raise GraphError(f"node {node_id!r} has non-finite coordinates")
        node = Node(node_id, float(x), float(y), bool(live))
        self.nodes[node_id] = node
        self._adj[node_id] = []
        return node

    def add_edge(
        self,
        a: str,
        b: str,
        geom: np.ndarray | list | None = None,
        key: int | None = None,
    ) -> Edge:
        a, b = str(a), str(b)
        for nid in (a, b):
            if nid not in self.nodes:
                raise GraphError(f"edge ({a!r}, {b!r}) references missing node {nid!r}")
        start, end, flipped = canonical_ends(a, b)
        if geom is not None:
            geom = geometry.as_coords(geom)
            if flipped:
                geom = geometry.reverse(geom)
            geom = self._snap_geom(start, end, geom)
        if key is None:
            key = 0
            while (start, end, key) in self._edges:
                key += 1
        else:
            key = int(key)
            if (start, end, key) in self._edges:
                raise GraphError(f"duplicate edge ({start!r}, {end!r}, {key})")
        edge = Edge(start, end, key, geom)
        self._edges[edge.edge_key] = edge
        self._adj[start].append(edge.edge_key)
        self._adj[end].append(edge.edge_key)
        return edge

    def _snap_geom(self, start: str, end: str, geom: np.ndarray) -> np.ndarray:
        ns, ne = self.nodes[start], self.nodes[end]
        d0 = math.hypot(geom[0, 0] - ns.x, geom[0, 1] - ns.y)
        d1 = math.hypot(geom[-1, 0] - ne.x, geom[-1, 1] - ne.y)
        if d0 > TAU_SNAP or d1 > TAU_SNAP:
            raise GraphError(
                f"geometry endpoints for edge ({start!r}, {end!r}) miss their nodes "
                f"by {max(d0, d1):.3f} m (> {TAU_SNAP} m)"
            )
        geom = geom.copy()
        geom[0] = (ns.x, ns.y)
        geom[-1] = (ne.x, ne.y)
        return geom

    def remove_edge(self, edge_key: EdgeKey) -> None:
        edge = self._edges.pop(edge_key)
        self._adj[edge.start].remove(edge_key)
        self._adj[edge.end].remove(edge_key)

    def remove_node(self, node_id: str) -> None:
        """Remove a node and every incident edge."""
        for ek in list(self._adj[node_id]):
            if ek in self._edges:
                self.remove_edge(ek)
        del self._adj[node_id]
        del self.nodes[node_id]

    # -- queries -----------------------------------------------------------

    def __contains__(self, node_id: str) -> bool:
        return node_id in self.nodes

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def edges(self) -> list[Edge]:
        return list(self._edges.values())

    def edge_keys(self) -> list[EdgeKey]:
        return list(self._edges.keys())

    def edge(self, edge_key: EdgeKey) -> Edge:
        return self._edges[edge_key]

    def has_edge(self, edge_key: EdgeKey) -> bool:
        return edge_key in self._edges

    def incident(self, node_id: str) -> list[EdgeKey]:
        """Incident edge keys; a self-loop appears twice."""
        return list(self._adj[node_id])

    def degree(self, node_id: str) -> int:
        return len(self._adj[node_id])

    def neighbors(self, node_id: str) -> list[str]:
        out = []
        for s, e, _k in self._adj[node_id]:
            out.append(e if s == node_id else s)
        return out

    def total_length(self) -> float:
        return sum(e.length for e in self._edges.values())

    def components(self) -> list[set[str]]:
        """Connected components as sets of node ids (deterministic order)."""
        seen: set[str] = set()
        comps = []
        for nid in self.nodes:
            if nid in seen:
                continue
            comp = {nid}
            stack = [nid]
            while stack:
                cur = stack.pop()
                for nb in self.neighbors(cur):
                    if nb not in comp:
                        comp.add(nb)
                        stack.append(nb)
            seen |= comp
            comps.append(comp)
        return comps

    def copy(self) -> "Multigraph":
        g = Multigraph(self.crs_tag)
        for n in self.nodes.values():
            g.add_node(n.id, n.x, n.y, n.live)
        for e in self._edges.values():
            geom = None if e.geom is None else e.geom.copy()
            g.add_edge(e.start, e.end, geom=geom, key=e.key)
        g.meta = dict(self.meta)
        return g


@dataclass
class ValidationReport:
    snap_violations: list[str] = field(default_factory=list)
    dangling_refs: list[str] = field(default_factory=list)
    duplicate_keys: list[str] = field(default_factory=list)
    other: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.snap_violations or self.dangling_refs or self.duplicate_keys or self.other)

    def lines(self) -> list[str]:
        return [*self.snap_violations, *self.dangling_refs, *self.duplicate_keys, *self.other]


def validate(g: Multigraph) -> ValidationReport:
    """Check the multigraph type invariants; report-only, never raises."""
    report = ValidationReport()
    seen_ids: set[str] = set()
    for nid, node in g.nodes.items():
        if not (math.isfinite(node.x) and math.isfinite(node.y)):
            report.other.append(f"node {nid!r} has non-finite coordinates")
        if nid in seen_ids:
            report.duplicate_keys.append(f"duplicate node id {nid!r}")
        seen_ids.add(nid)
    seen_edges: set[EdgeKey] = set()
    for edge in g.edges():
        ek = edge.edge_key
        if ek in seen_edges:
            report.duplicate_keys.append(f"duplicate edge key {ek}")
        seen_edges.add(ek)
        for nid in (edge.start, edge.end):
            if nid not in g.nodes:
                report.dangling_refs.append(f"edge {ek} references missing node {nid!r}")
        if edge.geom is None:
            continue
        for nid, idx in ((edge.start, 0), (edge.end, -1)):
            if nid not in g.nodes:
                continue
            n = g.nodes[nid]
            d = math.hypot(edge.geom[idx, 0] - n.x, edge.geom[idx, 1] - n.y)
            if d > TAU_SNAP:
                report.snap_violations.append(
                    f"edge {ek} geometry endpoint is {d:.3f} m from node {nid!r}"
                )
        chord = math.hypot(
            g.nodes[edge.end].x - g.nodes[edge.start].x,
            g.nodes[edge.end].y - g.nodes[edge.start].y,
        ) if edge.start in g.nodes and edge.end in g.nodes else 0.0
        if edge.length < chord - 1e-6:
            report.other.append(f"edge {ek} geometry shorter than its chord")
        if edge.start == edge.end and edge.length <= 0.0:
            report.other.append(f"edge {ek} is a zero-length self-loop")
    return report
