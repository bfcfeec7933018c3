"""WGS84 longitude/latitude to UTM conversion.

Implemented directly (6th-order Krueger transverse Mercator series, WGS84
ellipsoid, scale 0.9996, false easting 500 000) to avoid a geodesy
dependency. Accuracy is sub-millimeter within a zone. Networks spanning two
zones are projected into the centroid's zone; note that transverse-Mercator
scale distortion grows toward the far zone's edge, so distances there can
deviate from geodesic distances by more than the within-zone 0.1%.
"""

from __future__ import annotations

import math

from .graph import GraphError, Multigraph

WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
K0 = 0.9996
FALSE_EASTING = 500000.0
FALSE_NORTHING_SOUTH = 10000000.0

_N = WGS84_F / (2.0 - WGS84_F)
_N2, _N3, _N4, _N5, _N6 = _N**2, _N**3, _N**4, _N**5, _N**6
_A_CAP = WGS84_A / (1.0 + _N) * (1.0 + _N2 / 4.0 + _N4 / 64.0 + _N6 / 256.0)
_ALPHA = (
    _N / 2.0 - 2.0 * _N2 / 3.0 + 5.0 * _N3 / 16.0 + 41.0 * _N4 / 180.0
    - 127.0 * _N5 / 288.0 + 7891.0 * _N6 / 37800.0,
    13.0 * _N2 / 48.0 - 3.0 * _N3 / 5.0 + 557.0 * _N4 / 1440.0
    + 281.0 * _N5 / 630.0 - 1983433.0 * _N6 / 1935360.0,
    61.0 * _N3 / 240.0 - 103.0 * _N4 / 140.0 + 15061.0 * _N5 / 26880.0
    + 167603.0 * _N6 / 181440.0,
    49561.0 * _N4 / 161280.0 - 179.0 * _N5 / 168.0 + 6601661.0 * _N6 / 7257600.0,
    34729.0 * _N5 / 80640.0 - 3418889.0 * _N6 / 1995840.0,
    212378941.0 * _N6 / 319334400.0,
)


class ProjectionError(GraphError):
    pass


def utm_zone(lon: float, lat: float) -> int:
    """UTM longitudinal zone number (1..60) for a WGS84 coordinate."""
    zone = int(math.floor((lon + 180.0) / 6.0)) + 1
    return min(max(zone, 1), 60)


def lonlat_to_utm(lon: float, lat: float, zone: int | None = None) -> tuple[float, float, int]:
    """Project one WGS84 coordinate to UTM meters: (easting, northing, zone)."""
    if not (-180.0 <= lon <= 180.0) or not (-90.0 <= lat <= 90.0):
        raise ProjectionError(f"coordinate ({lon}, {lat}) outside WGS84 degree ranges")
    if zone is None:
        zone = utm_zone(lon, lat)
    lon0 = math.radians(zone * 6.0 - 183.0)
    lam = math.radians(lon) - lon0
    phi = math.radians(lat)

    two_sqrt_n = 2.0 * math.sqrt(_N) / (1.0 + _N)
    t = math.sinh(math.atanh(math.sin(phi)) - two_sqrt_n * math.atanh(two_sqrt_n * math.sin(phi)))
    xi = math.atan2(t, math.cos(lam))
    eta = math.atanh(math.sin(lam) / math.hypot(1.0, t))
    x = eta
    y = xi
    for j, alpha in enumerate(_ALPHA, start=1):
        x += alpha * math.cos(2.0 * j * xi) * math.sinh(2.0 * j * eta)
        y += alpha * math.sin(2.0 * j * xi) * math.cosh(2.0 * j * eta)
    easting = FALSE_EASTING + K0 * _A_CAP * x
    northing = K0 * _A_CAP * y
    if lat < 0.0:
        northing += FALSE_NORTHING_SOUTH
    return easting, northing, zone


def _zone_tag(zone: int, lat: float) -> str:
    # Latitude band letters C..X (no I, O), 8-degree bands from -80.
    bands = "CDEFGHJKLMNPQRSTUVWX"
    idx = min(max(int(math.floor((lat + 80.0) / 8.0)), 0), len(bands) - 1)
    return f"UTM {zone}{bands[idx]}"


def project_wgs_to_utm(g: Multigraph) -> Multigraph:
    """Project all node and geometry coordinates from WGS84 degrees to UTM meters.

    The zone is chosen from the network centroid; the network may span at
    most two zones. Raises if the graph already carries a crs_tag.
    """
    if g.crs_tag:
        raise ProjectionError(f"graph already projected (crs_tag={g.crs_tag!r})")
    if not g.nodes:
        raise ProjectionError("cannot project an empty graph")
    lons = [n.x for n in g.nodes.values()]
    lats = [n.y for n in g.nodes.values()]
    for lon, lat in zip(lons, lats):
        if not (-180.0 <= lon <= 180.0) or not (-90.0 <= lat <= 90.0):
            raise ProjectionError(f"coordinate ({lon}, {lat}) outside WGS84 degree ranges")
    zmin, zmax = utm_zone(min(lons), 0.0), utm_zone(max(lons), 0.0)
    if zmax - zmin > 1:
        raise ProjectionError(
            f"network spans {zmax - zmin + 1} UTM zones ({zmin}..{zmax}); "
            "split the input before projecting"
        )
    c_lon = sum(lons) / len(lons)
    c_lat = sum(lats) / len(lats)
    zone = utm_zone(c_lon, c_lat)

    out = Multigraph(crs_tag=_zone_tag(zone, c_lat))
    for n in g.nodes.values():
        e, nn, _ = lonlat_to_utm(n.x, n.y, zone)
        out.add_node(n.id, e, nn, n.live)
    for edge in g.edges():
        geom = None
        if edge.geom is not None:
            pts = [lonlat_to_utm(x, y, zone)[:2] for x, y in edge.geom]
            geom = pts
        out.add_edge(edge.start, edge.end, geom=geom, key=edge.key)
    out.meta = dict(g.meta)
    return out
