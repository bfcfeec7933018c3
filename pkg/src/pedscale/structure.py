"""Flat index-based traversal structure, network decomposition and the
primal-to-dual conversion.

The traversal structure stores two directed records per undirected edge in a
compressed adjacency layout so the search kernels can run over plain arrays.
Bearings are compass degrees (0 = North, clockwise); the angular cost of a
step between consecutive directed records is the absolute shortest angular
difference between the incoming record's out-bearing and the outgoing
record's in-bearing, plus the outgoing record's own cumulative curvature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .graph import EdgeKey, GraphError, Multigraph
from .metrics import MetricsTable


@dataclass
class NetworkStructure:
    """Arrays describing the directed-edge view of a Multigraph.

    Directed records are grouped per start node: records for node ``i`` live
    at ``indptr[i]:indptr[i+1]``. ``edge_reverse`` maps every record to its
    opposite-direction twin and ``edge_undirected`` to the undirected edge it
    belongs to. ``undirected_refs``/``undirected_geoms`` retain enough of the
    source graph to invert the conversion.
    """

    node_ids: list[str]
    node_x: np.ndarray
    node_y: np.ndarray
    node_live: np.ndarray
    indptr: np.ndarray
    edge_start: np.ndarray
    edge_end: np.ndarray
    edge_length: np.ndarray
    edge_angle: np.ndarray
    edge_in_bearing: np.ndarray
    edge_out_bearing: np.ndarray
    edge_undirected: np.ndarray
    edge_reverse: np.ndarray
    undirected_refs: list[EdgeKey]
    undirected_geoms: list[np.ndarray]
    undirected_live: list[bool]
    crs_tag: str | None = None
    id_to_index: dict[str, int] = field(default_factory=dict)

    @property
    def node_count(self) -> int:
        return len(self.node_ids)

    @property
    def record_count(self) -> int:
        return self.edge_start.shape[0]

    @property
    def undirected_count(self) -> int:
        return len(self.undirected_refs)

    def index_of(self, node_id: str) -> int:
        return self.id_to_index[node_id]


def build_structure(g: Multigraph) -> NetworkStructure:
    """Flatten a Multigraph into the traversal structure.

    Every edge needs a geometry (see clean.infer_simple_geoms); zero-length
    edges are rejected because they cannot carry bearings.
    """
    node_ids = list(g.nodes)
    idx = {nid: i for i, nid in enumerate(node_ids)}
    node_x = np.array([g.nodes[n].x for n in node_ids], dtype=np.float64)
    node_y = np.array([g.nodes[n].y for n in node_ids], dtype=np.float64)
    node_live = np.array([g.nodes[n].live for n in node_ids], dtype=np.bool_)

    undirected_refs: list[EdgeKey] = []
    undirected_geoms: list[np.ndarray] = []
    undirected_live: list[bool] = []
    # per node: list of (undirected idx, forward?) pairs in edge scan order
    per_node: list[list[tuple[int, bool]]] = [[] for _ in node_ids]
    lengths: list[float] = []
    angles: list[float] = []
    bearings: list[tuple[float, float]] = []
    for e in g.edges():
        if e.geom is None:
            raise GraphError(f"edge {e.edge_key} has no geometry; run infer_simple_geoms first")
        L = geometry.length(e.geom)
        if L <= 0.0:
            raise GraphError(f"edge {e.edge_key} has zero length")
        u = len(undirected_refs)
        undirected_refs.append(e.edge_key)
        undirected_geoms.append(e.geom.copy())
        undirected_live.append(bool(g.nodes[e.start].live and g.nodes[e.end].live))
        lengths.append(L)
        angles.append(geometry.cumulative_angle(e.geom))
        bearings.append(geometry.end_bearings(e.geom))
        per_node[idx[e.start]].append((u, True))
        per_node[idx[e.end]].append((u, False))

    m = 2 * len(undirected_refs)
    edge_start = np.empty(m, dtype=np.int32)
    edge_end = np.empty(m, dtype=np.int32)
    edge_length = np.empty(m, dtype=np.float64)
    edge_angle = np.empty(m, dtype=np.float64)
    edge_in = np.empty(m, dtype=np.float64)
    edge_out = np.empty(m, dtype=np.float64)
    edge_undirected = np.empty(m, dtype=np.int32)
    edge_reverse = np.empty(m, dtype=np.int32)
    indptr = np.zeros(len(node_ids) + 1, dtype=np.int64)

    # forward record position per undirected edge, then reverse, to wire twins
    placed: dict[tuple[int, bool], int] = {}
    pos = 0
    for i, recs in enumerate(per_node):
        indptr[i] = pos
        for u, forward in recs:
            s, t, _k = undirected_refs[u]
            in_b, out_b = bearings[u]
            if forward:
                edge_start[pos] = idx[s]
                edge_end[pos] = idx[t]
                edge_in[pos] = in_b
                edge_out[pos] = out_b
            else:
                edge_start[pos] = idx[t]
                edge_end[pos] = idx[s]
                edge_in[pos] = (out_b + 180.0) % 360.0
                edge_out[pos] = (in_b + 180.0) % 360.0
            edge_length[pos] = lengths[u]
            edge_angle[pos] = angles[u]
            edge_undirected[pos] = u
            placed[(u, forward)] = pos
            pos += 1
    indptr[len(node_ids)] = pos
    for u in range(len(undirected_refs)):
        f, r = placed[(u, True)], placed[(u, False)]
        edge_reverse[f] = r
        edge_reverse[r] = f

    return NetworkStructure(
        node_ids=node_ids,
        node_x=node_x,
        node_y=node_y,
        node_live=node_live,
        indptr=indptr,
        edge_start=edge_start,
        edge_end=edge_end,
        edge_length=edge_length,
        edge_angle=edge_angle,
        edge_in_bearing=edge_in,
        edge_out_bearing=edge_out,
        edge_undirected=edge_undirected,
        edge_reverse=edge_reverse,
        undirected_refs=undirected_refs,
        undirected_geoms=undirected_geoms,
        undirected_live=undirected_live,
        crs_tag=g.crs_tag,
        id_to_index=idx,
    )


def structure_to_graph(s: NetworkStructure, metrics: MetricsTable | None = None) -> Multigraph:
    """Invert build_structure; optionally attach metric columns for export."""
    g = Multigraph(crs_tag=s.crs_tag)
    for i, nid in enumerate(s.node_ids):
        g.add_node(nid, float(s.node_x[i]), float(s.node_y[i]), bool(s.node_live[i]))
    for (a, b, k), geom in zip(s.undirected_refs, s.undirected_geoms):
        g.add_edge(a, b, geom=geom.copy(), key=k)
    if metrics is not None:
        for nid in metrics.node_ids:
            if nid not in g.nodes:
                raise GraphError(f"metrics reference unknown node {nid!r}")
        node_metrics: dict[str, dict[str, float]] = {}
        for name, values in metrics.node_columns():
            for nid, v in zip(metrics.node_ids, values):
                node_metrics.setdefault(nid, {})[name] = float(v)
        g.meta["node_metrics"] = node_metrics
    return g


def decompose(g: Multigraph, max_len: float) -> Multigraph:
    """Split every edge longer than max_len into equal-length sub-edges.

    An edge of length L becomes ceil(L / max_len) pieces of length L/n, with
    interpolated degree-2 nodes along the polyline; total length is conserved
    and original node degrees are untouched.
    """
    if max_len <= 0.0:
        raise GraphError(f"max_len must be positive, got {max_len}")
    out = Multigraph(crs_tag=g.crs_tag)
    for n in g.nodes.values():
        out.add_node(n.id, n.x, n.y, n.live)
    for e in g.edges():
        if e.geom is None:
            raise GraphError(f"edge {e.edge_key} has no geometry; run infer_simple_geoms first")
        L = geometry.length(e.geom)
        n_pieces = max(1, int(math.ceil(L / max_len - 1e-12)))
        if n_pieces == 1:
            out.add_edge(e.start, e.end, geom=e.geom.copy(), key=e.key)
            continue
        pieces = geometry.split_at_equal(e.geom, n_pieces)
        live = g.nodes[e.start].live and g.nodes[e.end].live
        chain = [e.start]
        for i in range(1, n_pieces):
            nid = f"{e.start}::{e.end}::{e.key}::{i}"
            while nid in out.nodes:
                nid += "_"
            px, py = pieces[i][0]
            out.add_node(nid, float(px), float(py), live)
            chain.append(nid)
        chain.append(e.end)
        for i, piece in enumerate(pieces):
            out.add_edge(chain[i], chain[i + 1], geom=piece)
    out.meta = dict(g.meta)
    return out


def to_dual(g: Multigraph) -> Multigraph:
    """Convert a primal network to its dual.

    Each primal edge becomes a dual node at the length-midpoint of its
    polyline; each pair of primal edges incident to a shared primal node
    becomes a dual edge whose geometry welds the facing halves of the two
    polylines through the junction. Angular change across the junction (plus
    residual curvature of the halves) is then picked up by build_structure
    from the welded geometry.
    """
    dual = Multigraph(crs_tag=g.crs_tag)
    # half polylines keyed (edge, side): side 0 = start junction, 1 = end;
    # each oriented junction -> midpoint
    halves: dict[tuple[EdgeKey, int], np.ndarray] = {}
    slots_at: dict[str, list[tuple[EdgeKey, int]]] = {nid: [] for nid in g.nodes}
    for e in g.edges():
        if e.geom is None:
            raise GraphError(f"edge {e.edge_key} has no geometry; run infer_simple_geoms first")
        L = geometry.length(e.geom)
        if L <= 0.0:
            raise GraphError(f"edge {e.edge_key} has zero length")
        mx, my = geometry.interpolate(e.geom, L / 2.0)
        live = g.nodes[e.start].live and g.nodes[e.end].live
        dual.add_node(_dual_id(e.edge_key), mx, my, live)
        halves[(e.edge_key, 0)] = geometry.substring(e.geom, 0.0, L / 2.0)
        halves[(e.edge_key, 1)] = geometry.reverse(geometry.substring(e.geom, L / 2.0, L))
        slots_at[e.start].append((e.edge_key, 0))
        slots_at[e.end].append((e.edge_key, 1))

    for nid in g.nodes:
        slots = sorted(slots_at[nid])
        for i in range(len(slots)):
            for j in range(i + 1, len(slots)):
                ek_a, side_a = slots[i]
                ek_b, side_b = slots[j]
                geom = geometry.concat(
                    geometry.reverse(halves[(ek_a, side_a)]), halves[(ek_b, side_b)]
                )
                if geometry.length(geom) <= 0.0:
                    continue
                dual.add_edge(_dual_id(ek_a), _dual_id(ek_b), geom=geom)
    dual.meta = dict(g.meta)
    return dual


def _dual_id(ek: EdgeKey) -> str:
    return f"{ek[0]}_{ek[1]}_{ek[2]}"
