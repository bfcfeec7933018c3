"""Low-level polyline helpers shared by the graph, cleaning and structure code.

All functions operate on (n, 2) float64 arrays of projected coordinates in
meters. Bearings use compass convention: 0 = North, clockwise positive,
range [0, 360).
"""

from __future__ import annotations

import math

import numpy as np

Coords = np.ndarray


def as_coords(points) -> Coords:
    """Coerce a point sequence to a validated (n, 2) float64 array."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise ValueError(f"polyline must be an (n>=2, 2) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("polyline contains non-finite coordinates")
    return arr


def seg_lengths(coords: Coords) -> np.ndarray:
    return np.hypot(np.diff(coords[:, 0]), np.diff(coords[:, 1]))


def length(coords: Coords) -> float:
    return float(seg_lengths(coords).sum())


def bearing(x0: float, y0: float, x1: float, y1: float) -> float:
    """Compass bearing of the step (x0, y0) -> (x1, y1) in degrees."""
    return math.degrees(math.atan2(x1 - x0, y1 - y0)) % 360.0


def angular_diff(a: float, b: float) -> float:
    """Shortest signed angular difference b - a, in (-180, 180]."""
    d = (b - a) % 360.0
    if d > 180.0:
        d -= 360.0
    return d


def seg_bearings(coords: Coords) -> np.ndarray:
    """Compass bearing of every segment of the polyline, degrees [0, 360)."""
    dx = np.diff(coords[:, 0])
    dy = np.diff(coords[:, 1])
    return np.degrees(np.arctan2(dx, dy)) % 360.0


def cumulative_angle(coords: Coords) -> float:
    """Sum of absolute bearing changes at interior vertices, in degrees.

    Zero-length segments are skipped so duplicate vertices cannot inject
    spurious turns.
    """
    brs = seg_bearings(coords)
    lens = seg_lengths(coords)
    brs = brs[lens > 0.0]
    if brs.shape[0] < 2:
        return 0.0
    total = 0.0
    for i in range(brs.shape[0] - 1):
        total += abs(angular_diff(brs[i], brs[i + 1]))
    return total


def end_bearings(coords: Coords) -> tuple[float, float]:
    """(in_bearing, out_bearing): bearings of the first and last nonzero step."""
    brs = seg_bearings(coords)
    lens = seg_lengths(coords)
    nz = np.nonzero(lens > 0.0)[0]
    if nz.shape[0] == 0:
        raise ValueError("polyline has zero length")
    return float(brs[nz[0]]), float(brs[nz[-1]])


def interpolate(coords: Coords, dist: float) -> tuple[float, float]:
    """Point at `dist` meters along the polyline (clamped to its ends)."""
    lens = seg_lengths(coords)
    cum = np.concatenate(([0.0], np.cumsum(lens)))
    total = cum[-1]
    if dist <= 0.0:
        return float(coords[0, 0]), float(coords[0, 1])
    if dist >= total:
        return float(coords[-1, 0]), float(coords[-1, 1])
    i = int(np.searchsorted(cum, dist, side="right")) - 1
    i = min(i, len(lens) - 1)
    seg = lens[i]
    t = 0.0 if seg == 0.0 else (dist - cum[i]) / seg
    x = coords[i, 0] + t * (coords[i + 1, 0] - coords[i, 0])
    y = coords[i, 1] + t * (coords[i + 1, 1] - coords[i, 1])
    return float(x), float(y)


def substring(coords: Coords, d0: float, d1: float) -> Coords:
    """Sub-polyline between path distances d0 < d1, endpoints interpolated."""
    if d1 <= d0:
        raise ValueError("substring requires d0 < d1")
    lens = seg_lengths(coords)
    cum = np.concatenate(([0.0], np.cumsum(lens)))
    total = cum[-1]
    d0 = max(0.0, min(d0, total))
    d1 = max(0.0, min(d1, total))
    p0 = interpolate(coords, d0)
    p1 = interpolate(coords, d1)
    interior = coords[(cum > d0) & (cum < d1)]
    pts = [p0, *map(tuple, interior), p1]
    # collapse consecutive duplicates from cuts landing on vertices
    out = [pts[0]]
    for p in pts[1:]:
        if p != out[-1]:
            out.append(p)
    if len(out) < 2:
        out.append(p1)
    return np.array(out, dtype=np.float64)


def split_at_equal(coords: Coords, n: int) -> list[Coords]:
    """Split the polyline into n pieces of equal path length."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return [coords.copy()]
    total = length(coords)
    cuts = [total * i / n for i in range(n + 1)]
    return [substring(coords, cuts[i], cuts[i + 1]) for i in range(n)]


def reverse(coords: Coords) -> Coords:
    return coords[::-1].copy()


def concat(first: Coords, second: Coords) -> Coords:
    """Join two polylines sharing first[-1] == second[0], deduplicating it."""
    if not np.allclose(first[-1], second[0], atol=1e-9):
        raise ValueError("polylines do not share a junction vertex")
    return np.concatenate([first, second[1:]], axis=0)


def point_segment_distance(
    px: float, py: float, ax: float, ay: float, bx: float, by: float
) -> float:
    """Euclidean distance from point p to segment a-b."""
    dx, dy = bx - ax, by - ay
    den = dx * dx + dy * dy
    if den == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / den
    t = max(0.0, min(1.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))
