"""Numba-compiled search and accumulation kernels.

Everything here operates on the flat arrays of a NetworkStructure. The
kernels release the GIL so the centrality/layers drivers can parallelise
over fixed-size source chunks with ordered reduction, which keeps results
bit-identical for any worker count.

Determinism rules baked into the searches:
- heap order is (cost, index), so equal-cost settles are index-ordered;
- an equal-cost relaxation only replaces the predecessor when it lowers the
  predecessor index (node index for the metric search, record index for the
  angular search).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

INF = np.inf


# -- binary heap over (cost, index) -----------------------------------------

@njit(cache=True, nogil=True)
def _heap_push(hc, hi, size, cost, idx):
    hc[size] = cost
    hi[size] = idx
    i = size
    while i > 0:
        p = (i - 1) >> 1
        if hc[i] < hc[p] or (hc[i] == hc[p] and hi[i] < hi[p]):
            hc[i], hc[p] = hc[p], hc[i]
            hi[i], hi[p] = hi[p], hi[i]
            i = p
        else:
            break
    return size + 1


@njit(cache=True, nogil=True)
def _heap_pop(hc, hi, size):
    cost = hc[0]
    idx = hi[0]
    size -= 1
    hc[0] = hc[size]
    hi[0] = hi[size]
    i = 0
    while True:
        left = 2 * i + 1
        right = left + 1
        m = i
        if left < size and (hc[left] < hc[m] or (hc[left] == hc[m] and hi[left] < hi[m])):
            m = left
        if right < size and (hc[right] < hc[m] or (hc[right] == hc[m] and hi[right] < hi[m])):
            m = right
        if m == i:
            break
        hc[i], hc[m] = hc[m], hc[i]
        hi[i], hi[m] = hi[m], hi[i]
        i = m
    return cost, idx, size


@njit(cache=True, nogil=True, inline="always")
def _abs_angdiff(a, b):
    d = (b - a) % 360.0
    if d > 180.0:
        d = 360.0 - d
    return d


# -- windowed metric Dijkstra ------------------------------------------------

@njit(cache=True, nogil=True)
def _search_metric(indptr, edge_start, edge_end, edge_length, src, d_max,
                   dist, pred, settled, order, touched, hc, hi):
    """Label-setting search on edge length, pruned at metric d_max.

    dist/pred/settled must arrive in their virgin state (inf/-1/False); the
    caller resets the entries listed in touched[:n_touched] afterwards.
    Returns (n_reached, n_touched).
    """
    n_reached = 0
    n_touched = 0
    dist[src] = 0.0
    touched[n_touched] = src
    n_touched += 1
    size = _heap_push(hc, hi, 0, 0.0, src)
    while size > 0:
        cost, v, size = _heap_pop(hc, hi, size)
        if settled[v]:
            continue
        settled[v] = True
        order[n_reached] = v
        n_reached += 1
        for ei in range(indptr[v], indptr[v + 1]):
            w = edge_end[ei]
            if settled[w]:
                continue
            nd = cost + edge_length[ei]
            if nd > d_max:
                continue
            if nd < dist[w]:
                if dist[w] == INF:
                    touched[n_touched] = w
                    n_touched += 1
                dist[w] = nd
                pred[w] = ei
                size = _heap_push(hc, hi, size, nd, w)
            elif nd == dist[w]:
                pi = pred[w]
                if edge_start[ei] < edge_start[pi] or (
                    edge_start[ei] == edge_start[pi] and ei < pi
                ):
                    pred[w] = ei
    return n_reached, n_touched


# -- windowed angular (simplest-path) search over directed-edge states -------

@njit(cache=True, nogil=True)
def _search_angular(indptr, edge_start, edge_end, edge_length, edge_angle,
                    edge_in_b, edge_out_b, edge_reverse, src, d_max,
                    s_cost, s_dist, s_pred, s_settled, s_touched,
                    node_cost, node_dist, node_best, order, hc, hi):
    """Label-setting search where states are directed edge records.

    Cost is cumulative angular change (junction turn + curvature of the
    outgoing record); metric length accrues alongside and the window cutoff
    stays metric. Immediate reversal onto a record's twin is forbidden, so a
    path cannot re-enter a node through the same edge to shave a turn.

    Node-level results: node_cost/node_dist/node_best take the minimum-cost
    incoming state (ties by record index). Returns
    (n_nodes_reached, n_states_touched).
    """
    n_state_touched = 0
    size = 0
    for ei in range(indptr[src], indptr[src + 1]):
        if edge_length[ei] > d_max:
            continue
        c = edge_angle[ei]
        if c < s_cost[ei]:
            if s_cost[ei] == INF:
                s_touched[n_state_touched] = ei
                n_state_touched += 1
            s_cost[ei] = c
            s_dist[ei] = edge_length[ei]
            s_pred[ei] = -1
            size = _heap_push(hc, hi, size, c, ei)
    n_reached = 1
    node_cost[src] = 0.0
    node_dist[src] = 0.0
    node_best[src] = -1
    order[0] = src
    while size > 0:
        cost, e, size = _heap_pop(hc, hi, size)
        if s_settled[e]:
            continue
        s_settled[e] = True
        v = edge_end[e]
        if node_best[v] == -2:
            node_cost[v] = cost
            node_dist[v] = s_dist[e]
            node_best[v] = e
            order[n_reached] = v
            n_reached += 1
        for fi in range(indptr[v], indptr[v + 1]):
            if fi == edge_reverse[e] or s_settled[fi]:
                continue
            nc = cost + _abs_angdiff(edge_out_b[e], edge_in_b[fi]) + edge_angle[fi]
            nd = s_dist[e] + edge_length[fi]
            if nd > d_max:
                continue
            if nc < s_cost[fi]:
                if s_cost[fi] == INF:
                    s_touched[n_state_touched] = fi
                    n_state_touched += 1
                s_cost[fi] = nc
                s_dist[fi] = nd
                s_pred[fi] = e
                size = _heap_push(hc, hi, size, nc, fi)
            elif nc == s_cost[fi] and s_pred[fi] >= 0 and e < s_pred[fi]:
                s_pred[fi] = e
                s_dist[fi] = nd
    return n_reached, n_state_touched


# -- single-source wrappers (fresh allocations, used by tree functions) ------

@njit(cache=True, nogil=True)
def tree_metric(indptr, edge_start, edge_end, edge_length, src, d_max):
    n = indptr.shape[0] - 1
    m = edge_end.shape[0]
    dist = np.full(n, INF)
    pred = np.full(n, -1, np.int64)
    settled = np.zeros(n, np.bool_)
    order = np.empty(n, np.int64)
    touched = np.empty(n, np.int64)
    hc = np.empty(m + 2, np.float64)
    hi = np.empty(m + 2, np.int64)
    n_reached, _ = _search_metric(indptr, edge_start, edge_end, edge_length,
                                  src, d_max, dist, pred, settled, order, touched, hc, hi)
    return dist, pred, order, n_reached


@njit(cache=True, nogil=True)
def tree_angular(indptr, edge_start, edge_end, edge_length, edge_angle,
                 edge_in_b, edge_out_b, edge_reverse, src, d_max, heap_cap):
    n = indptr.shape[0] - 1
    m = edge_end.shape[0]
    s_cost = np.full(m, INF)
    s_dist = np.full(m, INF)
    s_pred = np.full(m, -1, np.int64)
    s_settled = np.zeros(m, np.bool_)
    s_touched = np.empty(m, np.int64)
    node_cost = np.full(n, INF)
    node_dist = np.full(n, INF)
    node_best = np.full(n, -2, np.int64)
    order = np.empty(n, np.int64)
    hc = np.empty(heap_cap, np.float64)
    hi = np.empty(heap_cap, np.int64)
    n_reached, _ = _search_angular(indptr, edge_start, edge_end, edge_length, edge_angle,
                                   edge_in_b, edge_out_b, edge_reverse, src, d_max,
                                   s_cost, s_dist, s_pred, s_settled, s_touched,
                                   node_cost, node_dist, node_best, order, hc, hi)
    return node_cost, node_dist, node_best, s_cost, s_dist, s_pred, order, n_reached


# -- threshold helper ---------------------------------------------------------

@njit(cache=True, nogil=True, inline="always")
def _first_threshold(distances, d):
    """Index of the smallest threshold >= d (len(distances) if none)."""
    t = 0
    n_t = distances.shape[0]
    while t < n_t and distances[t] < d:
        t += 1
    return t


# -- node centrality chunk ----------------------------------------------------

@njit(cache=True, nogil=True)
def node_centrality_chunk(indptr, edge_start, edge_end, edge_length, edge_angle,
                          edge_in_b, edge_out_b, edge_reverse,
                          sources, distances, betas, simplest, heap_cap,
                          want_density, want_harmonic, want_gravity,
                          want_betw, want_betw_wt, want_cycles,
                          local_out, betw_out, betw_wt_out):
    """Per-source windowed searches plus measure accumulation for one chunk.

    local_out has shape (4, len(sources), T) holding density/harmonic/
    gravity/cycles rows for the chunk's sources; betweenness contributions
    scatter into betw_out/betw_wt_out of shape (n_nodes, T).
    """
    n = indptr.shape[0] - 1
    m = edge_end.shape[0]
    n_t = distances.shape[0]
    d_max = distances[n_t - 1]

    dist = np.full(n, INF)
    pred = np.full(n, -1, np.int64)
    settled = np.zeros(n, np.bool_)
    order = np.empty(n, np.int64)
    touched = np.empty(n, np.int64)
    s_cost = np.full(m, INF)
    s_dist = np.full(m, INF)
    s_pred = np.full(m, -1, np.int64)
    s_settled = np.zeros(m, np.bool_)
    s_touched = np.empty(m, np.int64)
    node_best = np.full(n, -2, np.int64)
    node_cost = np.full(n, INF)
    hc = np.empty(heap_cap, np.float64)
    hi = np.empty(heap_cap, np.int64)
    wts = np.empty(n_t, np.float64)
    ncnt = np.empty(n_t, np.int64)
    ecnt = np.empty(n_t, np.int64)

    for ci in range(sources.shape[0]):
        src = sources[ci]
        if simplest:
            n_reached, n_state_touched = _search_angular(
                indptr, edge_start, edge_end, edge_length, edge_angle,
                edge_in_b, edge_out_b, edge_reverse, src, d_max,
                s_cost, s_dist, s_pred, s_settled, s_touched,
                node_cost, dist, node_best, order, hc, hi)
        else:
            n_reached, n_touched = _search_metric(
                indptr, edge_start, edge_end, edge_length, src, d_max,
                dist, pred, settled, order, touched, hc, hi)
            n_state_touched = 0

        # closeness-family measures at the source
        if want_density or want_harmonic or want_gravity or want_cycles:
            for t in range(n_t):
                ncnt[t] = 1
                ecnt[t] = 0
            for k in range(1, n_reached):
                j = order[k]
                d = dist[j]
                t0 = _first_threshold(distances, d)
                for t in range(t0, n_t):
                    if want_density:
                        local_out[0, ci, t] += 1.0
                    if want_harmonic:
                        local_out[1, ci, t] += 1.0 / d
                    if want_gravity:
                        local_out[2, ci, t] += math.exp(-betas[t] * d)
                    ncnt[t] += 1
            if want_cycles:
                for k in range(n_reached):
                    u = order[k]
                    du = dist[u]
                    for ei in range(indptr[u], indptr[u + 1]):
                        v = edge_end[ei]
                        dv = dist[v]
                        hi_d = du if du > dv else dv
                        if hi_d == INF:
                            continue
                        t0 = _first_threshold(distances, hi_d)
                        for t in range(t0, n_t):
                            ecnt[t] += 1
                for t in range(n_t):
                    local_out[3, ci, t] = ecnt[t] / 2.0 - (ncnt[t] - 1.0)

        # betweenness over the deterministic single-path tree
        if want_betw or want_betw_wt:
            for k in range(1, n_reached):
                j = order[k]
                if j <= src:
                    continue
                d = dist[j]
                t0 = _first_threshold(distances, d)
                if t0 == n_t:
                    continue
                if want_betw_wt:
                    for t in range(t0, n_t):
                        wts[t] = math.exp(-betas[t] * d)
                if simplest:
                    st = node_best[j]
                    while True:
                        prev = s_pred[st]
                        if prev == -1:
                            break
                        u = edge_start[st]
                        for t in range(t0, n_t):
                            if want_betw:
                                betw_out[u, t] += 1.0
                            if want_betw_wt:
                                betw_wt_out[u, t] += wts[t]
                        st = prev
                else:
                    u = edge_start[pred[j]]
                    while u != src:
                        for t in range(t0, n_t):
                            if want_betw:
                                betw_out[u, t] += 1.0
                            if want_betw_wt:
                                betw_wt_out[u, t] += wts[t]
                        u = edge_start[pred[u]]

        # sparse reset
        if simplest:
            for k in range(n_state_touched):
                e = s_touched[k]
                s_cost[e] = INF
                s_dist[e] = INF
                s_pred[e] = -1
                s_settled[e] = False
            for k in range(n_reached):
                v = order[k]
                dist[v] = INF
                node_cost[v] = INF
                node_best[v] = -2
        else:
            for k in range(n_touched):
                v = touched[k]
                dist[v] = INF
                pred[v] = -1
                settled[v] = False


# -- segment centrality chunk ---------------------------------------------------

@njit(cache=True, nogil=True)
def segment_centrality_chunk(indptr, edge_start, edge_end, edge_length, edge_angle,
                             edge_in_b, edge_out_b, edge_reverse, edge_undirected,
                             sources, distances, betas, simplest, heap_cap,
                             want_density, want_harmonic, want_beta, want_betw,
                             local_out, seg_betw_out):
    """Segmentised measures: continuous integrals over covered sub-segments.

    A segment reached from both ends is split where the two running distances
    meet; each flank integrates from its endpoint distance up to the split
    (clipped at each threshold). local_out has shape (3, len(sources), T);
    seg_betw_out has shape (n_undirected_edges, T).
    """
    n = indptr.shape[0] - 1
    m = edge_end.shape[0]
    n_t = distances.shape[0]
    d_max = distances[n_t - 1]
    eps = 1.0  # harmonic singularity floor, meters

    dist = np.full(n, INF)
    pred = np.full(n, -1, np.int64)
    settled = np.zeros(n, np.bool_)
    order = np.empty(n, np.int64)
    touched = np.empty(n, np.int64)
    s_cost = np.full(m, INF)
    s_dist = np.full(m, INF)
    s_pred = np.full(m, -1, np.int64)
    s_settled = np.zeros(m, np.bool_)
    s_touched = np.empty(m, np.int64)
    node_best = np.full(n, -2, np.int64)
    node_cost = np.full(n, INF)
    hc = np.empty(heap_cap, np.float64)
    hi = np.empty(heap_cap, np.int64)
    wts = np.empty(n_t, np.float64)

    for ci in range(sources.shape[0]):
        src = sources[ci]
        if simplest:
            n_reached, n_state_touched = _search_angular(
                indptr, edge_start, edge_end, edge_length, edge_angle,
                edge_in_b, edge_out_b, edge_reverse, src, d_max,
                s_cost, s_dist, s_pred, s_settled, s_touched,
                node_cost, dist, node_best, order, hc, hi)
        else:
            n_reached, n_touched = _search_metric(
                indptr, edge_start, edge_end, edge_length, src, d_max,
                dist, pred, settled, order, touched, hc, hi)
            n_state_touched = 0

        if want_density or want_harmonic or want_beta:
            for k in range(n_reached):
                u = order[k]
                du = dist[u]
                for ei in range(indptr[u], indptr[u + 1]):
                    v = edge_end[ei]
                    dv = dist[v]
                    if du > dv:
                        continue  # handled from the other flank
                    if du == dv and ei >= edge_reverse[ei]:
                        continue  # equal-distance tie: primary record only
                    length = edge_length[ei]
                    xstar = 0.5 * (dv + length - du)
                    if xstar > length:
                        xstar = length
                    peak_a = du + xstar
                    peak_b = dv + (length - xstar)
                    for t in range(n_t):
                        lim = distances[t]
                        hi_a = peak_a if peak_a < lim else lim
                        if hi_a > du:
                            if want_density:
                                local_out[0, ci, t] += hi_a - du
                            if want_harmonic:
                                lo = du if du > eps else eps
                                hi_c = hi_a if hi_a > eps else eps
                                local_out[1, ci, t] += math.log(hi_c) - math.log(lo)
                            if want_beta:
                                b = betas[t]
                                local_out[2, ci, t] += (
                                    math.exp(-b * du) - math.exp(-b * hi_a)) / b
                        if xstar < length:
                            hi_b = peak_b if peak_b < lim else lim
                            if hi_b > dv:
                                if want_density:
                                    local_out[0, ci, t] += hi_b - dv
                                if want_harmonic:
                                    lo = dv if dv > eps else eps
                                    hi_c = hi_b if hi_b > eps else eps
                                    local_out[1, ci, t] += math.log(hi_c) - math.log(lo)
                                if want_beta:
                                    b = betas[t]
                                    local_out[2, ci, t] += (
                                        math.exp(-b * dv) - math.exp(-b * hi_b)) / b

        if want_betw:
            for k in range(1, n_reached):
                j = order[k]
                if j <= src:
                    continue
                d = dist[j]
                t0 = _first_threshold(distances, d)
                if t0 == n_t:
                    continue
                for t in range(t0, n_t):
                    wts[t] = math.exp(-betas[t] * d)
                if simplest:
                    st = node_best[j]
                    while True:
                        prev = s_pred[st]
                        if prev == -1:
                            break
                        if s_pred[prev] != -1:  # prev edge is interior
                            ue = edge_undirected[prev]
                            for t in range(t0, n_t):
                                seg_betw_out[ue, t] += wts[t] * edge_length[prev]
                        st = prev
                else:
                    rec = pred[j]
                    u = edge_start[rec]
                    while u != src:
                        rec2 = pred[u]
                        if edge_start[rec2] != src:
                            ue = edge_undirected[rec2]
                            for t in range(t0, n_t):
                                seg_betw_out[ue, t] += wts[t] * edge_length[rec2]
                        u = edge_start[rec2]

        if simplest:
            for k in range(n_state_touched):
                e = s_touched[k]
                s_cost[e] = INF
                s_dist[e] = INF
                s_pred[e] = -1
                s_settled[e] = False
            for k in range(n_reached):
                v = order[k]
                dist[v] = INF
                node_cost[v] = INF
                node_best[v] = -2
        else:
            for k in range(n_touched):
                v = touched[k]
                dist[v] = INF
                pred[v] = -1
                settled[v] = False


# -- data-layer aggregation chunk ------------------------------------------------

@njit(cache=True, nogil=True)
def layers_chunk(indptr, edge_start, edge_end, edge_length, edge_angle,
                 edge_in_b, edge_out_b, edge_reverse,
                 sources, distances, betas, simplest, heap_cap,
                 near_indptr, near_items, next_indptr, next_items,
                 ent_near_node, ent_near_dist, ent_next_node, ent_next_dist,
                 ent_class, ent_value,
                 want_classes, want_stats,
                 counts_out, masses_out, stats_out):
    """Aggregate assigned data entries over each source's moving window.

    Every reachable entry contributes at its two-flank minimum total
    distance. counts_out/masses_out: (chunk, n_classes, T); stats_out:
    (chunk, T, 8) rows of count,sum,sumsq,min,max,wsum,wvsum,wv2sum.
    """
    n = indptr.shape[0] - 1
    m = edge_end.shape[0]
    n_t = distances.shape[0]
    d_max = distances[n_t - 1]

    dist = np.full(n, INF)
    pred = np.full(n, -1, np.int64)
    settled = np.zeros(n, np.bool_)
    order = np.empty(n, np.int64)
    touched = np.empty(n, np.int64)
    s_cost = np.full(m, INF)
    s_dist = np.full(m, INF)
    s_pred = np.full(m, -1, np.int64)
    s_settled = np.zeros(m, np.bool_)
    s_touched = np.empty(m, np.int64)
    node_best = np.full(n, -2, np.int64)
    node_cost = np.full(n, INF)
    hc = np.empty(heap_cap, np.float64)
    hi = np.empty(heap_cap, np.int64)

    if want_stats:
        for ci in range(sources.shape[0]):
            for t in range(n_t):
                stats_out[ci, t, 3] = INF
                stats_out[ci, t, 4] = -INF

    for ci in range(sources.shape[0]):
        src = sources[ci]
        if simplest:
            n_reached, n_state_touched = _search_angular(
                indptr, edge_start, edge_end, edge_length, edge_angle,
                edge_in_b, edge_out_b, edge_reverse, src, d_max,
                s_cost, s_dist, s_pred, s_settled, s_touched,
                node_cost, dist, node_best, order, hc, hi)
        else:
            n_reached, n_touched = _search_metric(
                indptr, edge_start, edge_end, edge_length, src, d_max,
                dist, pred, settled, order, touched, hc, hi)
            n_state_touched = 0

        for k in range(n_reached):
            v = order[k]
            for p in range(near_indptr[v], near_indptr[v + 1]):
                _aggregate_entry(near_items[p], dist, distances, betas, n_t,
                                 ent_near_node, ent_near_dist, ent_next_node, ent_next_dist,
                                 ent_class, ent_value, want_classes, want_stats,
                                 counts_out, masses_out, stats_out, ci)
            for p in range(next_indptr[v], next_indptr[v + 1]):
                ent = next_items[p]
                nn = ent_near_node[ent]
                if nn >= 0 and dist[nn] != INF:
                    continue  # already handled at the nearest-node flank
                _aggregate_entry(ent, dist, distances, betas, n_t,
                                 ent_near_node, ent_near_dist, ent_next_node, ent_next_dist,
                                 ent_class, ent_value, want_classes, want_stats,
                                 counts_out, masses_out, stats_out, ci)

        if simplest:
            for k in range(n_state_touched):
                e = s_touched[k]
                s_cost[e] = INF
                s_dist[e] = INF
                s_pred[e] = -1
                s_settled[e] = False
            for k in range(n_reached):
                v = order[k]
                dist[v] = INF
                node_cost[v] = INF
                node_best[v] = -2
        else:
            for k in range(n_touched):
                v = touched[k]
                dist[v] = INF
                pred[v] = -1
                settled[v] = False


@njit(cache=True, nogil=True, inline="always")
def _aggregate_entry(ent, dist, distances, betas, n_t,
                     ent_near_node, ent_near_dist, ent_next_node, ent_next_dist,
                     ent_class, ent_value, want_classes, want_stats,
                     counts_out, masses_out, stats_out, ci):
    total = INF
    nn = ent_near_node[ent]
    if nn >= 0 and dist[nn] != INF:
        total = dist[nn] + ent_near_dist[ent]
    xn = ent_next_node[ent]
    if xn >= 0 and dist[xn] != INF:
        alt = dist[xn] + ent_next_dist[ent]
        if alt < total:
            total = alt
    if total == INF:
        return
    t0 = _first_threshold(distances, total)
    if t0 == n_t:
        return
    cls = ent_class[ent]
    for t in range(t0, n_t):
        w = math.exp(-betas[t] * total)
        if want_classes and cls >= 0:
            counts_out[ci, cls, t] += 1.0
            masses_out[ci, cls, t] += w
        if want_stats:
            v = ent_value[ent]
            stats_out[ci, t, 0] += 1.0
            stats_out[ci, t, 1] += v
            stats_out[ci, t, 2] += v * v
            if v < stats_out[ci, t, 3]:
                stats_out[ci, t, 3] = v
            if v > stats_out[ci, t, 4]:
                stats_out[ci, t, 4] = v
            stats_out[ci, t, 5] += w
            stats_out[ci, t, 6] += w * v
            stats_out[ci, t, 7] += w * v * v
