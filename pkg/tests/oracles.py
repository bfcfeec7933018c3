"""Independent oracles the test suite checks the engine against.

Everything here is deliberately written from scratch against the textbook
formulations (exhaustive relaxation, exhaustive path enumeration, Snyder
projection series, Vincenty geodesics) rather than reusing any engine code
paths, so agreement is meaningful.
"""

from __future__ import annotations

import math
from math import atan, atan2, cos, radians, sin, sqrt, tan

import numpy as np

from pedscale.structure import NetworkStructure


# -- geodesy -------------------------------------------------------------------

def snyder_utm(lon: float, lat: float, zone: int) -> tuple[float, float]:
    """Transverse Mercator forward per Snyder (1987) truncated series."""
    a = 6378137.0
    f = 1 / 298.257223563
    e2 = f * (2 - f)
    ep2 = e2 / (1 - e2)
    k0 = 0.9996
    lam0 = radians(zone * 6 - 183)
    phi = radians(lat)
    lam = radians(lon)
    big_n = a / sqrt(1 - e2 * sin(phi) ** 2)
    big_t = tan(phi) ** 2
    big_c = ep2 * cos(phi) ** 2
    big_a = (lam - lam0) * cos(phi)
    big_m = a * (
        (1 - e2 / 4 - 3 * e2**2 / 64 - 5 * e2**3 / 256) * phi
        - (3 * e2 / 8 + 3 * e2**2 / 32 + 45 * e2**3 / 1024) * sin(2 * phi)
        + (15 * e2**2 / 256 + 45 * e2**3 / 1024) * sin(4 * phi)
        - (35 * e2**3 / 3072) * sin(6 * phi)
    )
    easting = 500000 + k0 * big_n * (
        big_a
        + (1 - big_t + big_c) * big_a**3 / 6
        + (5 - 18 * big_t + big_t**2 + 72 * big_c - 58 * ep2) * big_a**5 / 120
    )
    northing = k0 * (
        big_m
        + big_n * tan(phi) * (
            big_a**2 / 2
            + (5 - big_t + 9 * big_c + 4 * big_c**2) * big_a**4 / 24
            + (61 - 58 * big_t + big_t**2 + 600 * big_c - 330 * ep2) * big_a**6 / 720
        )
    )
    if lat < 0:
        northing += 10000000.0
    return easting, northing


def vincenty_inverse(lon1: float, lat1: float, lon2: float, lat2: float) -> float:
    """Geodesic distance on the WGS84 ellipsoid (Vincenty iteration), meters."""
    a = 6378137.0
    f = 1 / 298.257223563
    b = a * (1 - f)
    u1 = atan((1 - f) * tan(radians(lat1)))
    u2 = atan((1 - f) * tan(radians(lat2)))
    big_l = radians(lon2 - lon1)
    lam = big_l
    for _ in range(200):
        sin_sigma = sqrt(
            (cos(u2) * sin(lam)) ** 2
            + (cos(u1) * sin(u2) - sin(u1) * cos(u2) * cos(lam)) ** 2
        )
        if sin_sigma == 0.0:
            return 0.0
        cos_sigma = sin(u1) * sin(u2) + cos(u1) * cos(u2) * cos(lam)
        sigma = atan2(sin_sigma, cos_sigma)
        sin_alpha = cos(u1) * cos(u2) * sin(lam) / sin_sigma
        cos2_alpha = 1 - sin_alpha**2
        cos_2sm = cos_sigma - 2 * sin(u1) * sin(u2) / cos2_alpha if cos2_alpha else 0.0
        big_c = f / 16 * cos2_alpha * (4 + f * (4 - 3 * cos2_alpha))
        lam_prev = lam
        lam = big_l + (1 - big_c) * f * sin_alpha * (
            sigma + big_c * sin_sigma * (
                cos_2sm + big_c * cos_sigma * (-1 + 2 * cos_2sm**2)
            )
        )
        if abs(lam - lam_prev) < 1e-13:
            break
    u_sq = cos2_alpha * (a**2 - b**2) / b**2
    big_a = 1 + u_sq / 16384 * (4096 + u_sq * (-768 + u_sq * (320 - 175 * u_sq)))
    big_b = u_sq / 1024 * (256 + u_sq * (-128 + u_sq * (74 - 47 * u_sq)))
    d_sigma = big_b * sin_sigma * (
        cos_2sm + big_b / 4 * (
            cos_sigma * (-1 + 2 * cos_2sm**2)
            - big_b / 6 * cos_2sm * (-3 + 4 * sin_sigma**2) * (-3 + 4 * cos_2sm**2)
        )
    )
    return b * big_a * (sigma - d_sigma)


# -- exhaustive-relaxation shortest paths -----------------------------------------

def bellman_ford(s: NetworkStructure, src: int, d_max: float):
    """Exhaustive relaxation to fixpoint with the canonical tie rule.

    Returns (dist, pred) where pred[v] is the directed record arriving at v,
    ties resolved to the lexicographically smallest (predecessor node index,
    record index); distances above d_max are inf.
    """
    n = s.node_count
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, dtype=np.int64)
    dist[src] = 0.0
    for _ in range(n + 1):
        changed = False
        for rec in range(s.record_count):
            u = int(s.edge_start[rec])
            v = int(s.edge_end[rec])
            if not math.isfinite(dist[u]):
                continue
            nd = dist[u] + float(s.edge_length[rec])
            if nd > d_max:
                continue
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = rec
                changed = True
            elif nd == dist[v] and v != src:
                pu = int(s.edge_start[pred[v]])
                if (u, rec) < (pu, int(pred[v])):
                    pred[v] = rec
                    changed = True
        if not changed:
            break
    return dist, pred


def path_nodes_from_pred(s: NetworkStructure, pred: np.ndarray, src: int, j: int) -> list[int]:
    """Node sequence src..j following the canonical predecessor records."""
    out = [j]
    v = j
    while v != src:
        rec = int(pred[v])
        v = int(s.edge_start[rec])
        out.append(v)
    out.reverse()
    return out


def naive_node_measures(s: NetworkStructure, distances, betas):
    """Recompute density/harmonic/gravity/betweenness from the oracle trees."""
    n = s.node_count
    n_t = len(distances)
    d_big = max(distances)
    density = np.zeros((n, n_t))
    harmonic = np.zeros((n, n_t))
    gravity = np.zeros((n, n_t))
    betweenness = np.zeros((n, n_t))
    for src in range(n):
        if not s.node_live[src]:
            continue
        dist, pred = bellman_ford(s, src, d_big)
        for j in range(n):
            if j == src or not math.isfinite(dist[j]):
                continue
            for t, d_lim in enumerate(distances):
                if dist[j] <= d_lim:
                    density[src, t] += 1
                    harmonic[src, t] += 1.0 / dist[j]
                    gravity[src, t] += math.exp(-betas[t] * dist[j])
            if j > src:
                mids = path_nodes_from_pred(s, pred, src, j)[1:-1]
                for t, d_lim in enumerate(distances):
                    if dist[j] <= d_lim:
                        for k in mids:
                            betweenness[k, t] += 1
    return density, harmonic, gravity, betweenness


def bellman_ford_np(s: NetworkStructure, src: int, d_max: float):
    """Vectorised exhaustive relaxation (numpy), same contract as bellman_ford.

    Kept separate from the loop version so the acceptance run stays fast;
    both are independent of the engine's label-setting search.
    """
    n = s.node_count
    start = s.edge_start.astype(np.int64)
    end = s.edge_end.astype(np.int64)
    length = s.edge_length
    dist = np.full(n, np.inf)
    dist[src] = 0.0
    for _ in range(n + 1):
        nd = dist[start] + length
        ok = nd <= d_max
        proposal = dist.copy()
        np.minimum.at(proposal, end[ok], nd[ok])
        if np.array_equal(proposal, dist):
            break
        dist = proposal
    # canonical predecessors: smallest (pred node, record) among exact argmins
    pred = np.full(n, -1, dtype=np.int64)
    nd = dist[start] + length
    cand = (nd == dist[end]) & (nd <= d_max) & np.isfinite(nd) & (end != src)
    recs = np.flatnonzero(cand)
    order = np.lexsort((recs, start[recs]))
    for rec in recs[order][::-1]:
        pred[end[rec]] = rec
    return dist, pred


def naive_measures_np(s: NetworkStructure, distances, betas):
    """Naive recomputation of the four pairwise measures from the numpy oracle."""
    n = s.node_count
    n_t = len(distances)
    d_big = max(distances)
    density = np.zeros((n, n_t))
    harmonic = np.zeros((n, n_t))
    gravity = np.zeros((n, n_t))
    betweenness = np.zeros((n, n_t))
    start = s.edge_start.astype(np.int64)
    for src in range(n):
        if not s.node_live[src]:
            continue
        dist, pred = bellman_ford_np(s, src, d_big)
        reached = np.isfinite(dist) & (np.arange(n) != src)
        dd = dist[reached]
        for t, lim in enumerate(distances):
            inside = dd <= lim
            density[src, t] += inside.sum()
            harmonic[src, t] += (1.0 / dd[inside]).sum()
            gravity[src, t] += np.exp(-betas[t] * dd[inside]).sum()
        for j in np.flatnonzero(reached):
            if j <= src:
                continue
            inside = [t for t, lim in enumerate(distances) if dist[j] <= lim]
            if not inside:
                continue
            v = int(start[pred[j]])
            while v != src:
                for t in inside:
                    betweenness[v, t] += 1.0
                v = int(start[pred[v]])
    return density, harmonic, gravity, betweenness


# -- exhaustive simple-path angular enumeration --------------------------------------

def _abs_angdiff(a: float, b: float) -> float:
    d = (b - a) % 360.0
    return 360.0 - d if d > 180.0 else d


def enumerate_angular(s: NetworkStructure, src: int, d_max: float) -> np.ndarray:
    """Minimum cumulative angular cost per node over all simple paths.

    Exponential search; only for fixtures of a dozen nodes or fewer. The
    metric window d_max applies to path length.
    """
    n = s.node_count
    best = np.full(n, np.inf)
    best[src] = 0.0

    def extend(node: int, visited: set[int], last_rec: int, angle: float, metric: float):
        for rec in range(int(s.indptr[node]), int(s.indptr[node + 1])):
            w = int(s.edge_end[rec])
            if w in visited:
                continue
            step = float(s.edge_angle[rec])
            if last_rec >= 0:
                step += _abs_angdiff(float(s.edge_out_bearing[last_rec]),
                                     float(s.edge_in_bearing[rec]))
            nm = metric + float(s.edge_length[rec])
            if nm > d_max:
                continue
            na = angle + step
            if na < best[w]:
                best[w] = na
            extend(w, visited | {w}, rec, na, nm)

    extend(src, {src}, -1, 0.0, 0.0)
    return best


def node_state_angular(s: NetworkStructure, src: int, d_max: float) -> np.ndarray:
    """The unsafe node-label angular search kept as a counterexample.

    With node labels there is no room to remember *which* approach earned a
    node its cost, so this variant charges each junction the cheapest turn
    over every arrival bearing the node has - combining one route's cost
    with another route's geometry. That optimistic decoupling lower-bounds
    the true minimum and visibly undercuts it around sharp corners, which is
    why the engine searches over directed-edge states instead.
    """
    import heapq

    n = s.node_count
    bearing_sets: list[list[float]] = [[] for _ in range(n)]
    for rec in range(s.record_count):
        bearing_sets[int(s.edge_end[rec])].append(float(s.edge_out_bearing[rec]))
    cost = np.full(n, np.inf)
    metric = np.full(n, np.inf)
    settled = np.zeros(n, dtype=bool)
    cost[src] = 0.0
    metric[src] = 0.0
    heap = [(0.0, src)]
    while heap:
        c, v = heapq.heappop(heap)
        if settled[v]:
            continue
        settled[v] = True
        for rec in range(int(s.indptr[v]), int(s.indptr[v + 1])):
            w = int(s.edge_end[rec])
            if settled[w]:
                continue
            turn = 0.0
            if v != src and bearing_sets[v]:
                in_b = float(s.edge_in_bearing[rec])
                turn = min(_abs_angdiff(b, in_b) for b in bearing_sets[v])
            nc = c + turn + float(s.edge_angle[rec])
            nm = metric[v] + float(s.edge_length[rec])
            if nm > d_max:
                continue
            if nc < cost[w]:
                cost[w] = nc
                metric[w] = nm
                heapq.heappush(heap, (nc, w))
    return cost


# -- geometry scans ---------------------------------------------------------------

def nearest_edge_scan(s: NetworkStructure, px: float, py: float) -> tuple[int, float]:
    """Exhaustive nearest undirected edge by point-to-chord distance."""
    best_u, best_d = -1, math.inf
    for u in range(s.undirected_count):
        a, b, _k = s.undirected_refs[u]
        ia, ib = s.index_of(a), s.index_of(b)
        ax, ay = float(s.node_x[ia]), float(s.node_y[ia])
        bx, by = float(s.node_x[ib]), float(s.node_y[ib])
        dx, dy = bx - ax, by - ay
        den = dx * dx + dy * dy
        t = 0.0 if den == 0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / den))
        d = math.hypot(px - (ax + t * dx), py - (ay + t * dy))
        if d < best_d:
            best_u, best_d = u, d
    return best_u, best_d


# -- random graphs -------------------------------------------------------------------

def random_connected_graph(rng: np.random.Generator, n_nodes: int):
    """Random connected Multigraph with straight geometries (random lengths)."""
    from pedscale.graph import Multigraph

    g = Multigraph(crs_tag="local-m")
    xs = rng.uniform(0.0, 1000.0, n_nodes)
    ys = rng.uniform(0.0, 1000.0, n_nodes)
    for i in range(n_nodes):
        g.add_node(f"r{i}", float(xs[i]), float(ys[i]))
    order = rng.permutation(n_nodes)
    for i in range(1, n_nodes):
        a = f"r{order[i]}"
        b = f"r{order[int(rng.integers(0, i))]}"
        na, nb = g.nodes[a], g.nodes[b]
        g.add_edge(a, b, geom=[(na.x, na.y), (nb.x, nb.y)])
    extra = int(rng.integers(0, max(2, n_nodes // 2)))
    for _ in range(extra):
        i, j = int(rng.integers(0, n_nodes)), int(rng.integers(0, n_nodes))
        if i == j:
            continue
        a, b = f"r{i}", f"r{j}"
        na, nb = g.nodes[a], g.nodes[b]
        g.add_edge(a, b, geom=[(na.x, na.y), (nb.x, nb.y)])
    return g
