"""Network cleaning: geometry inference, stub and filler removal, and node
consolidation with parallel-roadway dedupe.

All passes are pure Multigraph -> Multigraph functions; the input is never
mutated. Typical order: infer_simple_geoms, remove_dangling_nodes,
remove_filler_nodes, then one or more consolidate_nodes passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import geometry
from .graph import EdgeKey, GraphError, Multigraph


@dataclass
class CleanConfig:
    despine_dist: float = 25.0
    consolidate_dist: float = 12.0
    keep_largest_component: bool = True
    merge_parallel_max_len: float = 100.0

    def __post_init__(self):
        for name in ("despine_dist", "consolidate_dist", "merge_parallel_max_len"):
            if getattr(self, name) < 0:
                raise GraphError(f"{name} must be >= 0")


def infer_simple_geoms(g: Multigraph) -> Multigraph:
    """Give every geometry-less edge a straight two-point polyline."""
    out = g.copy()
    for e in out.edges():
        if e.geom is None:
            a, b = out.nodes[e.start], out.nodes[e.end]
            e.geom = geometry.as_coords([(a.x, a.y), (b.x, b.y)])
    return out


def remove_dangling_nodes(g: Multigraph, cfg: CleanConfig) -> Multigraph:
    """Drop short dead-end chains and, optionally, minor components.

    A dangling chain is walked inward from a degree-1 tip through degree-2
    nodes; if its cumulative geometry length is <= despine_dist the whole
    chain is removed. Passes repeat until stable, so stubs exposed by earlier
    removals are despined with a fresh budget.
    """
    out = g.copy()
    if cfg.despine_dist > 0.0:
        changed = True
        while changed:
            changed = False
            for nid in sorted(out.nodes):
                if nid not in out.nodes or out.degree(nid) != 1:
                    continue
                chain = _trace_chain(out, nid, cfg.despine_dist)
                if chain is not None:
                    for cid in chain:
                        out.remove_node(cid)
                    changed = True
    if cfg.keep_largest_component:
        comps = out.components()
        if comps:
            totals = []
            for comp in comps:
                seen: set[EdgeKey] = set()
                total = 0.0
                for nid in comp:
                    for ek in out.incident(nid):
                        if ek not in seen:
                            seen.add(ek)
                            total += out.edge(ek).length
                totals.append((total, min(comp), comp))
            totals.sort(key=lambda t: (-t[0], t[1]))
            for _total, _mid, comp in totals[1:]:
                for nid in comp:
                    out.remove_node(nid)
    if out.node_count == 0:
        raise GraphError("nothing survived cleaning")
    return out


def _trace_chain(g: Multigraph, tip: str, budget: float) -> list[str] | None:
    """Nodes of the dangling chain starting at ``tip``, or None if over budget."""
    chain = [tip]
    total = 0.0
    cur = tip
    prev_edge: EdgeKey | None = None
    while True:
        cands = [ek for ek in g.incident(cur) if ek != prev_edge]
        if not cands:
            return chain
        ek = cands[0]
        total += g.edge(ek).length
        if total > budget:
            return None
        nxt = ek[1] if ek[0] == cur else ek[0]
        deg = g.degree(nxt)
        if deg == 1:
            chain.append(nxt)  # the component is a bare path; take it whole
            return chain
        if deg != 2:
            return chain
        chain.append(nxt)
        cur = nxt
        prev_edge = ek


def remove_filler_nodes(g: Multigraph) -> Multigraph:
    """Weld away degree-2 geometry nodes, conserving total length exactly.

    Pure rings collapse to one self-loop anchored at the smallest node id
    (candidates are processed in descending id order so that anchor survives).
    """
    out = g.copy()
    changed = True
    while changed:
        changed = False
        for nid in sorted(out.nodes, reverse=True):
            if nid not in out.nodes or out.degree(nid) != 2:
                continue
            slots = out.incident(nid)
            ek1, ek2 = slots[0], slots[1]
            if ek1 == ek2:
                continue  # self-loop anchor
            e1, e2 = out.edge(ek1), out.edge(ek2)
            if e1.start == e1.end or e2.start == e2.end:
                continue
            a = e1.end if e1.start == nid else e1.start
            b = e2.end if e2.start == nid else e2.start
            g1 = e1.geom if e1.end == nid else geometry.reverse(e1.geom)
            g2 = e2.geom if e2.start == nid else geometry.reverse(e2.geom)
            welded = geometry.concat(g1, g2)
            out.remove_node(nid)
            out.add_edge(a, b, geom=welded)
            changed = True
    return out


def consolidate_nodes(g: Multigraph, cfg: CleanConfig) -> Multigraph:
    """Merge node clusters within consolidate_dist and dedupe parallel edges.

    Single-linkage clusters collapse to their unweighted centroid (id = the
    smallest member id); incident geometries are re-anchored by replacing
    their terminal vertex. Self-edges created by a merge are dropped when
    shorter than consolidate_dist. Parallel edges no longer than
    merge_parallel_max_len are reduced to the one whose midpoint sits nearest
    the group's mean midpoint. The result is passed through
    remove_filler_nodes.
    """
    if cfg.consolidate_dist <= 0.0:
        return g.copy()
    cluster_of = _single_linkage(g, cfg.consolidate_dist)

    out = Multigraph(crs_tag=g.crs_tag)
    new_id: dict[str, str] = {}
    clusters: dict[str, list[str]] = {}
    for nid in g.nodes:
        rep = cluster_of[nid]
        clusters.setdefault(rep, []).append(nid)
    for rep, members in clusters.items():
        target = min(members)
        cx = sum(g.nodes[m].x for m in members) / len(members)
        cy = sum(g.nodes[m].y for m in members) / len(members)
        live = any(g.nodes[m].live for m in members)
        out.add_node(target, cx, cy, live)
        for m in members:
            new_id[m] = target

    for e in sorted(g.edges(), key=lambda e: e.edge_key):
        na, nb = new_id[e.start], new_id[e.end]
        geom = e.geom.copy()
        geom[0] = (out.nodes[na].x, out.nodes[na].y)
        geom[-1] = (out.nodes[nb].x, out.nodes[nb].y)
        if na == nb:
            if geometry.length(geom) < cfg.consolidate_dist:
                continue  # collapsed internal connection
        key = e.key if not out.has_edge(tuple(sorted((na, nb))) + (e.key,)) else None
        out.add_edge(na, nb, geom=geom, key=key)

    _dedupe_parallel(out, cfg.merge_parallel_max_len)
    return remove_filler_nodes(out)


def _single_linkage(g: Multigraph, dist: float) -> dict[str, str]:
    """Union-find clustering of nodes within ``dist`` (grid-accelerated)."""
    ids = list(g.nodes)
    parent = {nid: nid for nid in ids}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x: str, y: str) -> None:
        rx, ry = find(x), find(y)
        if rx != ry:
            # deterministic: smaller id becomes the root
            if ry < rx:
                rx, ry = ry, rx
            parent[ry] = rx

    cells: dict[tuple[int, int], list[str]] = {}
    for nid in ids:
        n = g.nodes[nid]
        cells.setdefault((int(math.floor(n.x / dist)), int(math.floor(n.y / dist))), []).append(nid)
    for (cx, cy), members in cells.items():
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                other = cells.get((cx + dx, cy + dy))
                if other is None:
                    continue
                for a in members:
                    na = g.nodes[a]
                    for b in other:
                        if b <= a:
                            continue
                        nb = g.nodes[b]
                        if math.hypot(na.x - nb.x, na.y - nb.y) <= dist:
                            union(a, b)
    return {nid: find(nid) for nid in ids}


def _dedupe_parallel(g: Multigraph, max_len: float) -> None:
    """Keep one representative of each short parallel-edge bundle, in place."""
    groups: dict[tuple[str, str], list[EdgeKey]] = {}
    for ek in g.edge_keys():
        s, e, _k = ek
        if s == e:
            continue
        groups.setdefault((s, e), []).append(ek)
    for (_s, _e), eks in sorted(groups.items()):
        short = [ek for ek in eks if g.edge(ek).length <= max_len]
        if len(short) < 2:
            continue
        mids = {}
        for ek in short:
            geom = g.edge(ek).geom
            mids[ek] = geometry.interpolate(geom, geometry.length(geom) / 2.0)
        mx = sum(p[0] for p in mids.values()) / len(mids)
        my = sum(p[1] for p in mids.values()) / len(mids)
        keep = min(short, key=lambda ek: (math.hypot(mids[ek][0] - mx, mids[ek][1] - my), ek[2]))
        for ek in short:
            if ek != keep:
                g.remove_edge(ek)
