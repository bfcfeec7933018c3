"""Data layers: assignment of point data to the network, distance-decay
aggregation, land-use accessibility, Hill-diversity mixed-use measures and
statistical aggregations.

Points are assigned bidirectionally to the two nodes flanking their closest
adjacent street edge; every aggregation then routes through whichever flank
is shorter from the current source, so the direction of approach decides the
distance.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import IO, Sequence

import numpy as np

from . import _kernels, geometry
from .centrality import AnalysisConfig, ShortestTree, _heap_cap, _resolve_workers, _run_ordered, _source_chunks
from .metrics import MetricsTable, fmt_num
from .structure import NetworkStructure

log = logging.getLogger(__name__)

DEFAULT_MAX_ASSIGN_DIST = 400.0

STAT_NAMES = ("count", "sum", "mean", "min", "max", "var", "sum_wt", "mean_wt", "var_wt")


class LayerError(ValueError):
    pass


# -- decay --------------------------------------------------------------------

def beta_from_distance(d_max: float) -> float:
    """Default decay strength for a walking threshold: beta = 4 / d_max."""
    if d_max <= 0:
        raise LayerError(f"d_max must be positive, got {d_max}")
    return 4.0 / d_max


def distance_from_beta(beta: float) -> float:
    """Inverse of beta_from_distance: d_max = 4 / beta."""
    if beta <= 0:
        raise LayerError(f"beta must be positive, got {beta}")
    return 4.0 / beta


@dataclass
class DecayParams:
    beta: float
    d_max: float

    def __post_init__(self):
        if self.beta <= 0 or self.d_max <= 0:
            raise LayerError("beta and d_max must be positive")

    @classmethod
    def from_distance(cls, d_max: float) -> "DecayParams":
        return cls(beta=beta_from_distance(d_max), d_max=float(d_max))


def decay_weight(d: float, p: DecayParams) -> float:
    """Negative-exponential walking-willingness weight w = exp(-beta * d)."""
    if d < 0 or d > p.d_max:
        raise LayerError(f"distance {d} outside [0, {p.d_max}]; clip before weighting")
    return math.exp(-p.beta * d)


# -- data entries ---------------------------------------------------------------

@dataclass
class DataEntry:
    """One spatial data point, optionally assigned to a street edge's nodes."""

    id: str
    x: float
    y: float
    category: str | None = None
    value: float | None = None
    nearest: tuple[int, float] | None = None
    next_nearest: tuple[int, float] | None = None


@dataclass
class AggregationConfig:
    categories: list[str] = field(default_factory=list)
    hill_orders: list[float] = field(default_factory=lambda: [0.0, 1.0, 2.0])
    stats_fields: list[str] = field(default_factory=list)

    def __post_init__(self):
        if any(not math.isfinite(q) or q < 0 for q in self.hill_orders):
            raise LayerError("hill orders must be finite and >= 0")


def load_data_points(source: str | bytes | IO | dict,
                     category_field: str | None = None,
                     value_field: str | None = None) -> list[DataEntry]:
    """Read Point features into DataEntry records.

    Non-point features are skipped with a warning count; a missing or
    non-numeric value field is an error naming the offending feature.
    """
    if isinstance(source, (str, bytes)):
        data = json.loads(source)
    elif isinstance(source, dict):
        data = source
    else:
        data = json.load(source)
    if data.get("type") != "FeatureCollection":
        raise LayerError("data points input is not a GeoJSON FeatureCollection")
    entries: list[DataEntry] = []
    skipped = 0
    for i, feat in enumerate(data.get("features", [])):
        geom = feat.get("geometry") or {}
        if geom.get("type") != "Point":
            skipped += 1
            continue
        props = feat.get("properties") or {}
        eid = str(props.get("id", f"p{i}"))
        x, y = float(geom["coordinates"][0]), float(geom["coordinates"][1])
        category = None
        if category_field is not None:
            if category_field not in props:
                raise LayerError(f"entry {eid!r} missing category field {category_field!r}")
            category = str(props[category_field])
        value = None
        if value_field is not None:
            raw = props.get(value_field)
            try:
                value = float(raw)
            except (TypeError, ValueError):
                raise LayerError(f"entry {eid!r} has non-numeric {value_field!r}: {raw!r}")
            if not math.isfinite(value):
                raise LayerError(f"entry {eid!r} has non-finite {value_field!r}")
        entries.append(DataEntry(id=eid, x=x, y=y, category=category, value=value))
    if skipped:
        log.warning("data load skipped %d non-point feature(s)", skipped)
    return entries


# -- assignment ------------------------------------------------------------------

class _NodeGrid:
    """Uniform spatial grid over node coordinates for candidate prefiltering."""

    def __init__(self, s: NetworkStructure, cell: float):
        self.cell = cell
        self.cells: dict[tuple[int, int], list[int]] = {}
        for i in range(s.node_count):
            key = (int(math.floor(s.node_x[i] / cell)), int(math.floor(s.node_y[i] / cell)))
            self.cells.setdefault(key, []).append(i)

    def nearest_node(self, s: NetworkStructure, px: float, py: float,
                     max_dist: float) -> int:
        cx = int(math.floor(px / self.cell))
        cy = int(math.floor(py / self.cell))
        best = -1
        best_d = max_dist
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for i in self.cells.get((cx + dx, cy + dy), ()):
                    d = math.hypot(s.node_x[i] - px, s.node_y[i] - py)
                    if d < best_d or (d == best_d and best >= 0 and i < best):
                        best, best_d = i, d
        return best


def _edge_chord_distance(s: NetworkStructure, rec: int, px: float, py: float) -> float:
    a, b = s.edge_start[rec], s.edge_end[rec]
    return geometry.point_segment_distance(
        px, py, s.node_x[a], s.node_y[a], s.node_x[b], s.node_y[b])


def _wind_closest_edge(s: NetworkStructure, px: float, py: float,
                       start_node: int, max_dist: float) -> int:
    """Walk around the point to find its closest adjacent edge.

    From the nearest node the walk repeatedly takes the edge whose far end
    lies at the smallest clockwise rotation (about the data point) from the
    current node's ray, tracking the closest edge chord seen. Dead ends
    backtrack naturally because directed records are visited at most once.
    If the travel budget runs out before the point is fully encircled, a
    second walk runs counter-clockwise. Returns the undirected edge index,
    or -1 when the start node has no usable edges.
    """
    best_u = -1
    best_d = math.inf

    def consider(rec: int):
        nonlocal best_u, best_d
        u = int(s.edge_undirected[rec])
        d = _edge_chord_distance(s, rec, px, py)
        if d < best_d or (d == best_d and u < best_u):
            best_u, best_d = u, d

    encircled = False
    for clockwise in (True, False):
        visited: set[int] = set()
        cur = start_node
        traveled = 0.0
        winding = 0.0
        ray = geometry.bearing(px, py, s.node_x[cur], s.node_y[cur])
        while True:
            chosen = -1
            chosen_rot = math.inf
            for rec in range(int(s.indptr[cur]), int(s.indptr[cur + 1])):
                consider(rec)
                if rec in visited:
                    continue
                w = int(s.edge_end[rec])
                if w == cur:
                    continue  # self-loop cannot advance the walk
                ray_w = geometry.bearing(px, py, s.node_x[w], s.node_y[w])
                rot = (ray_w - ray) % 360.0 if clockwise else (ray - ray_w) % 360.0
                if rot < chosen_rot:
                    chosen, chosen_rot = rec, rot
                elif rot == chosen_rot and chosen >= 0 and rec < chosen:
                    chosen = rec
            if chosen < 0:
                break  # exhausted every direction (including backtracks)
            visited.add(chosen)
            w = int(s.edge_end[chosen])
            ray_w = geometry.bearing(px, py, s.node_x[w], s.node_y[w])
            winding += geometry.angular_diff(ray, ray_w)  # signed net winding
            traveled += float(s.edge_length[chosen])
            cur, ray = w, ray_w
            if cur == start_node and abs(winding) >= 359.999:
                encircled = True
                break
            if traveled > max_dist:
                break
        if encircled:
            break
    return best_u


def assign_to_network(data: Sequence[DataEntry], s: NetworkStructure,
                      max_assign_dist: float = DEFAULT_MAX_ASSIGN_DIST) -> list[DataEntry]:
    """Assign each point to the two end nodes of its closest adjacent edge.

    The nearest endpoint becomes ``nearest``, the other ``next_nearest``,
    each with its straight-line distance from the point. Points with no
    network node within max_assign_dist stay unassigned (count logged).
    """
    if max_assign_dist <= 0:
        raise LayerError("max_assign_dist must be positive")
    if s.node_count == 0:
        return [replace(e, nearest=None, next_nearest=None) for e in data]
    grid = _NodeGrid(s, max_assign_dist)
    out: list[DataEntry] = []
    unassigned = 0
    for entry in data:
        node = grid.nearest_node(s, entry.x, entry.y, max_assign_dist)
        if node < 0:
            out.append(replace(entry, nearest=None, next_nearest=None))
            unassigned += 1
            continue
        u = _wind_closest_edge(s, entry.x, entry.y, node, max_assign_dist)
        if u < 0:
            # isolated node: fall back to the node itself, no flank partner
            d = math.hypot(s.node_x[node] - entry.x, s.node_y[node] - entry.y)
            out.append(replace(entry, nearest=(node, d), next_nearest=None))
            continue
        a, b, _k = s.undirected_refs[u]
        ia, ib = s.index_of(a), s.index_of(b)
        da = math.hypot(s.node_x[ia] - entry.x, s.node_y[ia] - entry.y)
        db = math.hypot(s.node_x[ib] - entry.x, s.node_y[ib] - entry.y)
        if (db, ib) < (da, ia):
            ia, ib, da, db = ib, ia, db, da
        out.append(replace(entry, nearest=(ia, da), next_nearest=(ib, db)))
    if unassigned:
        log.warning("%d data point(s) beyond %.0f m of any node left unassigned",
                    unassigned, max_assign_dist)
    return out


def aggregate_reachable(s: NetworkStructure, tree: ShortestTree,
                        data: Sequence[DataEntry]) -> list[tuple[DataEntry, float]]:
    """Entries reachable within the tree's window, with two-flank totals.

    total = min over the entry's assignments of (network distance to the
    assigned node + straight-line assignment distance); entries whose total
    exceeds the tree's d_max are dropped.
    """
    out = []
    for entry in data:
        total = math.inf
        for assignment in (entry.nearest, entry.next_nearest):
            if assignment is None:
                continue
            node, d_assign = assignment
            d_net = tree.dist[node]
            if math.isfinite(d_net):
                total = min(total, d_net + d_assign)
        if total <= tree.d_max:
            out.append((entry, total))
    return out


# -- Hill diversity -----------------------------------------------------------------

def hill_diversity(counts: Sequence[float], q: float) -> float:
    """Hill number of order q: the effective number of classes.

    q=0 gives richness, q->1 the exponential of Shannon entropy, q=2 the
    inverse Simpson index. Zero-count classes are excluded; an all-zero
    vector is defined as 0.
    """
    if q < 0 or not math.isfinite(q):
        raise LayerError(f"q must be finite and >= 0, got {q}")
    masses = [float(c) for c in counts if c > 0]
    if any(c < 0 for c in counts):
        raise LayerError("counts must be non-negative")
    total = sum(masses)
    if total <= 0:
        return 0.0
    probs = [c / total for c in masses]
    if q == 0.0:
        return float(len(probs))
    if q == 1.0:
        return math.exp(-sum(p * math.log(p) for p in probs))
    return sum(p ** q for p in probs) ** (1.0 / (1.0 - q))


def hill_branch_wt_diversity(reached: Sequence[tuple[DataEntry, float]], q: float,
                             p: DecayParams) -> float:
    """Hill diversity over distance-decayed class masses.

    Each class's mass is the sum of exp(-beta * total) over its reachable
    entries, so nearer representatives count for more.
    """
    masses: dict[str, float] = {}
    for entry, total in reached:
        if entry.category is None:
            continue
        w = math.exp(-p.beta * min(total, p.d_max))
        masses[entry.category] = masses.get(entry.category, 0.0) + w
    return hill_diversity(list(masses.values()), q)


# -- windowed aggregation drivers -----------------------------------------------------

def _entry_arrays(data: Sequence[DataEntry], classes: list[str] | None,
                  need_value: bool, n_nodes: int):
    """Flatten assigned entries into kernel arrays plus per-node CSR lists."""
    class_index = {c: i for i, c in enumerate(classes)} if classes is not None else {}
    assigned = [e for e in data if e.nearest is not None or e.next_nearest is not None]
    n = len(assigned)
    near_node = np.full(n, -1, np.int64)
    near_dist = np.zeros(n)
    next_node = np.full(n, -1, np.int64)
    next_dist = np.zeros(n)
    cls = np.full(n, -1, np.int64)
    val = np.zeros(n)
    near_lists: list[list[int]] = [[] for _ in range(n_nodes)]
    next_lists: list[list[int]] = [[] for _ in range(n_nodes)]
    for i, e in enumerate(assigned):
        if e.nearest is not None:
            near_node[i] = e.nearest[0]
            near_dist[i] = e.nearest[1]
            near_lists[e.nearest[0]].append(i)
        if e.next_nearest is not None:
            next_node[i] = e.next_nearest[0]
            next_dist[i] = e.next_nearest[1]
            next_lists[e.next_nearest[0]].append(i)
        if e.category is not None and e.category in class_index:
            cls[i] = class_index[e.category]
        if need_value:
            if e.value is None or not math.isfinite(e.value):
                raise LayerError(f"entry {e.id!r} has no numeric value")
            val[i] = e.value

    def csr(lists):
        indptr = np.zeros(n_nodes + 1, np.int64)
        for v, items in enumerate(lists):
            indptr[v + 1] = indptr[v] + len(items)
        flat = np.empty(int(indptr[-1]), np.int64)
        pos = 0
        for items in lists:
            for it in items:
                flat[pos] = it
                pos += 1
        return indptr, flat

    near_indptr, near_items = csr(near_lists)
    next_indptr, next_items = csr(next_lists)
    return (near_node, near_dist, next_node, next_dist, cls, val,
            near_indptr, near_items, next_indptr, next_items)


def _run_aggregation(s: NetworkStructure, data: Sequence[DataEntry],
                     classes: list[str] | None, need_value: bool,
                     ac: AnalysisConfig, workers: int | None):
    """Shared chunked kernel driver; returns (counts, masses, stats) arrays."""
    n = s.node_count
    n_t = len(ac.distances)
    n_c = len(classes) if classes else 0
    distances = np.asarray(ac.distances, dtype=np.float64)
    betas = np.asarray(ac.betas, dtype=np.float64)
    simplest = ac.heuristic == "simplest"
    heap_cap = _heap_cap(s)
    workers = _resolve_workers(workers)
    (near_node, near_dist, next_node, next_dist, cls, val,
     near_indptr, near_items, next_indptr, next_items) = _entry_arrays(
        data, classes, need_value, n)

    counts = np.zeros((n, max(n_c, 1), n_t)) if classes else None
    masses = np.zeros((n, max(n_c, 1), n_t)) if classes else None
    stats = np.full((n, n_t, 8), np.nan) if need_value else None

    def run_chunk(sources: np.ndarray):
        c_out = np.zeros((len(sources), max(n_c, 1), n_t))
        m_out = np.zeros((len(sources), max(n_c, 1), n_t))
        s_out = np.zeros((len(sources), n_t, 8))
        _kernels.layers_chunk(
            s.indptr, s.edge_start, s.edge_end, s.edge_length, s.edge_angle,
            s.edge_in_bearing, s.edge_out_bearing, s.edge_reverse,
            sources, distances, betas, simplest, heap_cap,
            near_indptr, near_items, next_indptr, next_items,
            near_node, near_dist, next_node, next_dist, cls, val,
            classes is not None, need_value,
            c_out, m_out, s_out)
        return sources, c_out, m_out, s_out

    for sources, c_out, m_out, s_out in _run_ordered(run_chunk, _source_chunks(s), workers):
        if counts is not None:
            counts[sources] = c_out
            masses[sources] = m_out
        if stats is not None:
            stats[sources] = s_out
    return counts, masses, stats


def compute_accessibilities(s: NetworkStructure, data: Sequence[DataEntry],
                            cfg: AggregationConfig, ac: AnalysisConfig,
                            workers: int | None = None) -> MetricsTable:
    """Per-node land-use accessibility: reachable count and decayed weight sum."""
    if not cfg.categories:
        raise LayerError("accessibility requires categories")
    if data:
        observed = {e.category for e in data if e.category is not None}
        missing = [c for c in cfg.categories if c not in observed]
        if missing:
            raise LayerError(f"unknown categor{'y' if len(missing) == 1 else 'ies'} "
                             f"in config: {', '.join(missing)}")
    counts, masses, _ = _run_aggregation(s, data, list(cfg.categories), False, ac, workers)
    table = MetricsTable(node_ids=list(s.node_ids))
    for ci, cat in enumerate(cfg.categories):
        for t, d in enumerate(ac.distances):
            table.add_node(f"ac_{cat}", d, counts[:, ci, t])
            table.add_node(f"ac_{cat}_wt", d, masses[:, ci, t])
    return table


def compute_mixed_uses(s: NetworkStructure, data: Sequence[DataEntry],
                       cfg: AggregationConfig, ac: AnalysisConfig,
                       workers: int | None = None) -> MetricsTable:
    """Per-node Hill and branch-weighted Hill diversity over reachable land uses."""
    classes = sorted({e.category for e in data if e.category is not None})
    if not classes:
        raise LayerError("mixed-use measures need categorised data entries")
    counts, masses, _ = _run_aggregation(s, data, classes, False, ac, workers)
    table = MetricsTable(node_ids=list(s.node_ids))
    n = s.node_count
    for q in cfg.hill_orders:
        q_label = fmt_num(q)
        for t, d in enumerate(ac.distances):
            hill = np.zeros(n)
            hill_wt = np.zeros(n)
            for i in range(n):
                hill[i] = hill_diversity(counts[i, :, t], q)
                hill_wt[i] = hill_diversity(masses[i, :, t], q)
            table.add_node(f"mu_hill_q{q_label}", d, hill)
            table.add_node(f"mu_hill_branch_wt_q{q_label}", d, hill_wt)
    return table


def compute_stats(s: NetworkStructure, data: Sequence[DataEntry], field_name: str,
                  ac: AnalysisConfig, workers: int | None = None) -> MetricsTable:
    """Per-node statistical aggregation of a numeric field.

    Emits count, sum, mean, min, max, population variance, and the decayed
    weighted sum/mean/variance. Empty windows report count 0 and null (NaN)
    aggregates.
    """
    _, _, stats = _run_aggregation(s, data, None, True, ac, workers)
    table = MetricsTable(node_ids=list(s.node_ids))
    count = stats[:, :, 0]
    total = stats[:, :, 1]
    sumsq = stats[:, :, 2]
    vmin = stats[:, :, 3]
    vmax = stats[:, :, 4]
    wsum = stats[:, :, 5]
    wvsum = stats[:, :, 6]
    wv2sum = stats[:, :, 7]
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(count > 0, total / count, np.nan)
        var = np.where(count > 0, np.maximum(sumsq / count - mean**2, 0.0), np.nan)
        mean_wt = np.where(count > 0, wvsum / wsum, np.nan)
        var_wt = np.where(count > 0, np.maximum(wv2sum / wsum - mean_wt**2, 0.0), np.nan)
    by_stat = {
        "count": count,
        "sum": np.where(count > 0, total, np.nan),
        "mean": mean,
        "min": np.where(count > 0, vmin, np.nan),
        "max": np.where(count > 0, vmax, np.nan),
        "var": var,
        "sum_wt": np.where(count > 0, wsum, np.nan),
        "mean_wt": mean_wt,
        "var_wt": var_wt,
    }
    for stat in STAT_NAMES:
        for t, d in enumerate(ac.distances):
            table.add_node(f"st_{field_name}_{stat}", d, by_stat[stat][:, t])
    return table
