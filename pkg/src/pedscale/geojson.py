"""GeoJSON import/export for street networks.

A network file is a FeatureCollection of LineString features (edges) and,
optionally, Point features carrying an ``id`` property (explicit nodes).
Files written by :func:`export_network` re-import losslessly: node ids,
edge keys and geometries survive the round trip to coordinate precision
1e-6 m.
"""

from __future__ import annotations

import json
import logging
import math
from typing import IO, Any

import numpy as np

from .graph import TAU_SNAP, GraphError, Multigraph
from .metrics import MetricsTable

log = logging.getLogger(__name__)


class ParseError(ValueError):
    """Malformed GeoJSON input."""


def _round6(x: float) -> float:
    return round(float(x), 6)


class _NodeRegistry:
    """Matches line endpoints to nodes within a tolerance via a coarse grid."""

    def __init__(self, g: Multigraph, tolerance: float):
        self.g = g
        self.tolerance = tolerance
        self._cells: dict[tuple[int, int], list[str]] = {}
        self._n_generated = 0
        for node in g.nodes.values():
            self._insert(node.id, node.x, node.y)

    def _cell(self, x: float, y: float) -> tuple[int, int]:
        return (int(math.floor(x / self.tolerance)), int(math.floor(y / self.tolerance)))

    def _insert(self, node_id: str, x: float, y: float) -> None:
        self._cells.setdefault(self._cell(x, y), []).append(node_id)

    def resolve(self, x: float, y: float) -> str:
        cx, cy = self._cell(x, y)
        best = None
        best_d = self.tolerance
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for nid in self._cells.get((cx + dx, cy + dy), ()):
                    n = self.g.nodes[nid]
                    d = math.hypot(n.x - x, n.y - y)
                    if d < best_d or (d == best_d and best is not None and nid < best):
                        best, best_d = nid, d
        if best is not None:
            return best
        nid = f"n{self._n_generated}"
        while nid in self.g.nodes:
            self._n_generated += 1
            nid = f"n{self._n_generated}"
        self._n_generated += 1
        self.g.add_node(nid, x, y)
        self._insert(nid, x, y)
        return nid


# endpoint-matching slack equivalent to TAU_SNAP when coordinates are WGS84
# degrees instead of projected meters (0.01 m / ~111.32 km per degree)
WGS_ENDPOINT_TOLERANCE = TAU_SNAP / 111320.0


def import_network(source: str | bytes | IO | dict, format: str = "geojson",
                   endpoint_tolerance: float | None = None) -> Multigraph:
    """Read a Multigraph from a GeoJSON FeatureCollection.

    Point features with an ``id`` property declare nodes; LineString features
    become edges, their endpoints matched to declared nodes within
    ``endpoint_tolerance`` (default TAU_SNAP, i.e. coordinates in projected
    meters) or to auto-generated nodes. Pass WGS_ENDPOINT_TOLERANCE for
    longitude/latitude input, where the metric tolerance would otherwise
    span a kilometre. Features with other geometry are skipped and counted
    in ``result.meta["skipped_features"]``.
    """
    if format != "geojson":
        raise ValueError(f"unsupported format {format!r}")
    if endpoint_tolerance is None:
        endpoint_tolerance = TAU_SNAP
    if endpoint_tolerance <= 0:
        raise ValueError("endpoint_tolerance must be positive")
    data = _as_json(source)
    if not isinstance(data, dict) or data.get("type") != "FeatureCollection":
        raise ParseError("input is not a GeoJSON FeatureCollection")
    features = data.get("features")
    if not isinstance(features, list):
        raise ParseError("FeatureCollection has no features array")

    g = Multigraph(crs_tag=data.get("pedscale", {}).get("crs_tag"))
    skipped = 0
    lines: list[tuple[int, dict, np.ndarray]] = []
    for i, feat in enumerate(features):
        try:
            geom = feat["geometry"]
            gtype = geom["type"]
            coords = geom["coordinates"]
            props = feat.get("properties") or {}
        except (TypeError, KeyError) as exc:
            raise ParseError(f"feature {i}: missing geometry ({exc})") from exc
        if gtype == "Point":
            if "id" in props:
                nid = str(props["id"])
                if nid in g.nodes:
                    raise ParseError(f"feature {i}: duplicate node id {nid!r}")
                try:
                    g.add_node(nid, float(coords[0]), float(coords[1]),
                               live=bool(props.get("live", True)))
                except (TypeError, ValueError, IndexError) as exc:
                    raise ParseError(f"feature {i}: bad point coordinates") from exc
            else:
                skipped += 1
        elif gtype == "LineString":
            try:
                arr = np.asarray(coords, dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"feature {i}: bad line coordinates") from exc
            if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] < 2:
                raise ParseError(f"feature {i}: LineString needs >= 2 positions")
            lines.append((i, props, arr[:, :2]))
        else:
            skipped += 1

    registry = _NodeRegistry(g, endpoint_tolerance)
    for i, props, arr in lines:
        if "start" in props and "end" in props:
            a, b = str(props["start"]), str(props["end"])
            for nid in (a, b):
                if nid not in g.nodes:
                    raise ParseError(f"feature {i}: edge references undeclared node {nid!r}")
        else:
            a = registry.resolve(float(arr[0, 0]), float(arr[0, 1]))
            b = registry.resolve(float(arr[-1, 0]), float(arr[-1, 1]))
        key = props.get("key")
        try:
            g.add_edge(a, b, geom=arr, key=None if key is None else int(key))
        except GraphError as exc:
            raise ParseError(f"feature {i}: {exc}") from exc

    if skipped:
        log.warning("import skipped %d non-line feature(s)", skipped)
    g.meta["skipped_features"] = skipped
    return g


def _as_json(source: str | bytes | IO | dict) -> Any:
    if isinstance(source, dict):
        return source
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        try:
            return json.loads(source)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
    try:
        return json.load(source)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc


def export_network(
    g: Multigraph,
    metrics: MetricsTable | None = None,
    format: str = "geojson",
    metadata: dict | None = None,
) -> str:
    """Serialize a Multigraph (plus optional metric overlay) to GeoJSON text.

    Node features come first, sorted by id; edge features follow, sorted by
    (start, end, key). Coordinates are written with 6 decimal places so output
    is byte-stable. ``metadata`` (e.g. the resolved run config) is embedded
    under a top-level ``pedscale`` member.
    """
    if format != "geojson":
        raise ValueError(f"unsupported format {format!r}")
    node_props: dict[str, dict] = {}
    edge_props: dict[tuple, dict] = {}
    if metrics is not None:
        unknown = [nid for nid in metrics.node_ids if nid not in g.nodes]
        if unknown:
            raise GraphError(
                "metrics reference node ids absent from the graph: "
                + ", ".join(repr(u) for u in unknown[:10])
            )
        for name, values in metrics.node_columns():
            for nid, v in zip(metrics.node_ids, values):
                node_props.setdefault(nid, {})[name] = _json_value(v)
        if metrics.edge_values:
            unknown_e = [ek for ek in metrics.edge_refs if not g.has_edge(ek)]
            if unknown_e:
                raise GraphError(
                    "metrics reference edges absent from the graph: "
                    + ", ".join(map(str, unknown_e[:10]))
                )
            for name, values in metrics.edge_columns():
                for ek, v in zip(metrics.edge_refs, values):
                    edge_props.setdefault(ek, {})[name] = _json_value(v)

    features = []
    for nid in sorted(g.nodes):
        n = g.nodes[nid]
        props = {"id": n.id, "live": n.live}
        props.update(node_props.get(nid, {}))
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [_round6(n.x), _round6(n.y)]},
            "properties": props,
        })
    for ek in sorted(g.edge_keys()):
        e = g.edge(ek)
        if e.geom is not None:
            coords = [[_round6(x), _round6(y)] for x, y in e.geom]
        else:
            a, b = g.nodes[e.start], g.nodes[e.end]
            coords = [[_round6(a.x), _round6(a.y)], [_round6(b.x), _round6(b.y)]]
        props = {"start": e.start, "end": e.end, "key": e.key}
        props.update(edge_props.get(ek, {}))
        features.append({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": coords},
            "properties": props,
        })

    doc: dict[str, Any] = {"type": "FeatureCollection", "features": features}
    ped_meta: dict[str, Any] = {}
    if g.crs_tag:
        ped_meta["crs_tag"] = g.crs_tag
    if metadata:
        ped_meta.update(metadata)
    if ped_meta:
        doc["pedscale"] = ped_meta
    return json.dumps(doc, separators=(",", ":"), allow_nan=False)


def _json_value(v: float):
    f = float(v)
    return None if math.isnan(f) else f
