"""Moving-window network centralities.

One search per live source at the largest threshold; smaller thresholds act
as filters during accumulation, so all distances are computed simultaneously.
Sources are processed in fixed-size index-ordered chunks; scatter measures
(betweenness) accumulate into per-chunk buffers that are reduced in chunk
order, making results bit-identical for any worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .metrics import MetricsTable
from .structure import NetworkStructure

NODE_MEASURES = ("density", "harmonic", "gravity", "betweenness", "betweenness_wt", "cycles")
SEGMENT_MEASURES = ("seg_density", "seg_harmonic", "seg_beta", "seg_betweenness")
HEURISTICS = ("shortest", "simplest")

CHUNK_SIZE = 512


class CentralityError(ValueError):
    pass


def default_betas(distances) -> list[float]:
    return [4.0 / d for d in distances]


@dataclass
class AnalysisConfig:
    """Distance thresholds, decay betas, path heuristic and measure selection."""

    distances: list[float]
    betas: list[float] | None = None
    heuristic: str = "shortest"
    measures: tuple[str, ...] = NODE_MEASURES

    def __post_init__(self):
        self.distances = [float(d) for d in self.distances]
        if not self.distances:
            raise CentralityError("at least one distance threshold is required")
        if any(d <= 0 for d in self.distances):
            raise CentralityError("distances must be positive")
        if any(b >= a for a, b in zip(self.distances[1:], self.distances)):
            raise CentralityError("distances must be strictly ascending")
        if self.betas is None:
            self.betas = default_betas(self.distances)
        else:
            self.betas = [float(b) for b in self.betas]
            if len(self.betas) != len(self.distances):
                raise CentralityError("betas must pair with distances")
            if any(b <= 0 for b in self.betas):
                raise CentralityError("betas must be positive")
        if self.heuristic not in HEURISTICS:
            raise CentralityError(f"heuristic must be one of {HEURISTICS}")
        self.measures = tuple(self.measures)

    @property
    def max_distance(self) -> float:
        return self.distances[-1]


@dataclass
class ShortestTree:
    """Single-source windowed search tree.

    dist is metric network distance (inf if unreached within d_max); for the
    simplest heuristic it is the metric length along the minimum-angle path
    and simplest_cost carries the angular cost. pred_edge holds the directed
    record arriving at each node (-1 at the source / unreached).
    """

    source: int
    d_max: float
    dist: np.ndarray
    pred_edge: np.ndarray
    visit_order: np.ndarray
    simplest_cost: np.ndarray | None = None
    state_cost: np.ndarray | None = None
    state_dist: np.ndarray | None = None
    state_pred: np.ndarray | None = None


def _heap_cap(s: NetworkStructure) -> int:
    deg = np.diff(s.indptr)
    return int(deg[s.edge_start].sum()) + s.record_count + 16


def shortest_tree(s: NetworkStructure, source: int, d_max: float) -> ShortestTree:
    """Windowed metric Dijkstra from one source node index."""
    if not 0 <= source < s.node_count:
        raise CentralityError(f"source index {source} out of range")
    if d_max <= 0:
        raise CentralityError("d_max must be positive")
    dist, pred, order, n = _kernels.tree_metric(
        s.indptr, s.edge_start, s.edge_end, s.edge_length, source, float(d_max))
    return ShortestTree(source=source, d_max=float(d_max), dist=dist,
                        pred_edge=pred, visit_order=order[:n])


def simplest_tree(s: NetworkStructure, source: int, d_max: float) -> ShortestTree:
    """Windowed minimum-angular-change search over directed-edge states.

    States are directed edges, so a path cannot re-enter a node via another
    edge to sidestep a sharp turn; the window cutoff stays metric.
    """
    if not 0 <= source < s.node_count:
        raise CentralityError(f"source index {source} out of range")
    if d_max <= 0:
        raise CentralityError("d_max must be positive")
    node_cost, node_dist, node_best, s_cost, s_dist, s_pred, order, n = _kernels.tree_angular(
        s.indptr, s.edge_start, s.edge_end, s.edge_length, s.edge_angle,
        s.edge_in_bearing, s.edge_out_bearing, s.edge_reverse,
        source, float(d_max), _heap_cap(s))
    return ShortestTree(source=source, d_max=float(d_max), dist=node_dist,
                        pred_edge=node_best, visit_order=order[:n],
                        simplest_cost=node_cost, state_cost=s_cost,
                        state_dist=s_dist, state_pred=s_pred)


def _tree_for(s: NetworkStructure, cfg: AnalysisConfig, source: int) -> ShortestTree:
    if cfg.heuristic == "simplest":
        return simplest_tree(s, source, cfg.max_distance)
    return shortest_tree(s, source, cfg.max_distance)


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = os.cpu_count() or 1
    return max(1, int(workers))


def _source_chunks(s: NetworkStructure) -> list[np.ndarray]:
    sources = np.flatnonzero(s.node_live).astype(np.int64)
    return [sources[i:i + CHUNK_SIZE] for i in range(0, len(sources), CHUNK_SIZE)]


def _run_ordered(fn, chunks, workers: int):
    """Yield fn(chunk) results in chunk order, fanning out to worker threads."""
    if workers <= 1 or len(chunks) <= 1:
        for chunk in chunks:
            yield fn(chunk)
        return
    with ThreadPoolExecutor(max_workers=workers) as ex:
        yield from ex.map(fn, chunks)


def node_centrality(s: NetworkStructure, cfg: AnalysisConfig,
                    workers: int | None = None) -> MetricsTable:
    """Windowed node centralities for every live node, all thresholds at once.

    Measures: density, harmonic, gravity, betweenness, betweenness_wt,
    cycles. Betweenness counts a single deterministic shortest (or simplest)
    path per node pair, each pair once (source index < target index).
    """
    unknown = [m for m in cfg.measures if m not in NODE_MEASURES]
    if unknown:
        raise CentralityError(f"unknown node measure(s): {', '.join(unknown)}")
    n = s.node_count
    n_t = len(cfg.distances)
    distances = np.asarray(cfg.distances, dtype=np.float64)
    betas = np.asarray(cfg.betas, dtype=np.float64)
    simplest = cfg.heuristic == "simplest"
    heap_cap = _heap_cap(s)
    want = {m: (m in cfg.measures) for m in NODE_MEASURES}
    workers = _resolve_workers(workers)

    local = {m: np.zeros((n, n_t)) for m in ("density", "harmonic", "gravity", "cycles") if want[m]}
    betw = np.zeros((n, n_t)) if want["betweenness"] else None
    betw_wt = np.zeros((n, n_t)) if want["betweenness_wt"] else None

    def run_chunk(sources: np.ndarray):
        local_out = np.zeros((4, len(sources), n_t))
        betw_out = np.zeros((n, n_t)) if want["betweenness"] else np.zeros((1, 1))
        betw_wt_out = np.zeros((n, n_t)) if want["betweenness_wt"] else np.zeros((1, 1))
        _kernels.node_centrality_chunk(
            s.indptr, s.edge_start, s.edge_end, s.edge_length, s.edge_angle,
            s.edge_in_bearing, s.edge_out_bearing, s.edge_reverse,
            sources, distances, betas, simplest, heap_cap,
            want["density"], want["harmonic"], want["gravity"],
            want["betweenness"], want["betweenness_wt"], want["cycles"],
            local_out, betw_out, betw_wt_out)
        return sources, local_out, betw_out, betw_wt_out

    for sources, local_out, betw_out, betw_wt_out in _run_ordered(
            run_chunk, _source_chunks(s), workers):
        for row, m in enumerate(("density", "harmonic", "gravity", "cycles")):
            if want[m]:
                local[m][sources] = local_out[row]
        if betw is not None:
            betw += betw_out
        if betw_wt is not None:
            betw_wt += betw_wt_out

    table = MetricsTable(node_ids=list(s.node_ids))
    for t, d in enumerate(cfg.distances):
        for m in cfg.measures:
            if m == "betweenness":
                table.add_node("cc_betweenness", d, betw[:, t])
            elif m == "betweenness_wt":
                table.add_node("cc_betweenness_wt", d, betw_wt[:, t])
            else:
                table.add_node(f"cc_{m}", d, local[m][:, t])
    return table


def segment_centrality(s: NetworkStructure, cfg: AnalysisConfig,
                       workers: int | None = None) -> MetricsTable:
    """Segmentised (continuous) centrality measures.

    seg_density/seg_harmonic/seg_beta integrate the coverage of reachable
    street sub-segments per source node and stay stable under decomposition;
    seg_betweenness accrues distance-weighted lengths onto edges strictly
    interior to each tree path.
    """
    unknown = [m for m in cfg.measures if m not in SEGMENT_MEASURES]
    if unknown:
        raise CentralityError(f"unknown segment measure(s): {', '.join(unknown)}")
    n = s.node_count
    n_e = s.undirected_count
    n_t = len(cfg.distances)
    distances = np.asarray(cfg.distances, dtype=np.float64)
    betas = np.asarray(cfg.betas, dtype=np.float64)
    simplest = cfg.heuristic == "simplest"
    heap_cap = _heap_cap(s)
    want = {m: (m in cfg.measures) for m in SEGMENT_MEASURES}
    workers = _resolve_workers(workers)

    local = {m: np.zeros((n, n_t))
             for m in ("seg_density", "seg_harmonic", "seg_beta") if want[m]}
    seg_betw = np.zeros((n_e, n_t)) if want["seg_betweenness"] else None

    def run_chunk(sources: np.ndarray):
        local_out = np.zeros((3, len(sources), n_t))
        seg_betw_out = np.zeros((n_e, n_t)) if want["seg_betweenness"] else np.zeros((1, 1))
        _kernels.segment_centrality_chunk(
            s.indptr, s.edge_start, s.edge_end, s.edge_length, s.edge_angle,
            s.edge_in_bearing, s.edge_out_bearing, s.edge_reverse, s.edge_undirected,
            sources, distances, betas, simplest, heap_cap,
            want["seg_density"], want["seg_harmonic"], want["seg_beta"],
            want["seg_betweenness"],
            local_out, seg_betw_out)
        return sources, local_out, seg_betw_out

    for sources, local_out, seg_betw_out in _run_ordered(
            run_chunk, _source_chunks(s), workers):
        for row, m in enumerate(("seg_density", "seg_harmonic", "seg_beta")):
            if want[m]:
                local[m][sources] = local_out[row]
        if seg_betw is not None:
            seg_betw += seg_betw_out

    table = MetricsTable(node_ids=list(s.node_ids), edge_refs=list(s.undirected_refs))
    for t, d in enumerate(cfg.distances):
        for m in cfg.measures:
            if m == "seg_betweenness":
                table.add_edge("cc_seg_betweenness", d, seg_betw[:, t])
            else:
                table.add_node(f"cc_{m}", d, local[m][:, t])
    return table
