"""Geodesy and path-following kinematics on the WGS84 mean sphere.

Crossing scenarios span a few kilometres, so spherical formulas with a
fixed mean radius are used throughout; altitude is carried but ignored by
distance and bearing. All types are immutable and all functions are pure.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

from .exceptions import RailwarnError

EARTH_RADIUS_M = 6_371_008.8

TANGENT_PLANE_LIMIT_M = 100_000.0


class GeoError(RailwarnError):
    """Invalid or degenerate geometry."""


@dataclass(frozen=True)
class GeoPoint:
    """WGS84 latitude/longitude position, altitude in metres (default 0)."""

    lat: float
    lon: float
    alt: float = 0.0

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat <= 90.0):
            raise GeoError(f"latitude {self.lat} outside [-90, 90]")
        if not (-180.0 <= self.lon <= 180.0):
            raise GeoError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class EnuVector:
    """Local East-North-Up offset in metres relative to some origin."""

    east: float
    north: float
    up: float = 0.0

    def horizontal_norm(self) -> float:
        return math.hypot(self.east, self.north)


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in metres (altitude ignored)."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def bearing(a: GeoPoint, b: GeoPoint) -> float:
    """Initial great-circle bearing a->b, degrees in [0, 360) clockwise from north."""
    if a.lat == b.lat and a.lon == b.lon:
        raise GeoError("undefined bearing: coincident points")
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dlam = math.radians(b.lon - a.lon)
    y = math.sin(dlam) * math.cos(phi2)
    x = math.cos(phi1) * math.sin(phi2) - math.sin(phi1) * math.cos(phi2) * math.cos(dlam)
    return (math.degrees(math.atan2(y, x)) + 360.0) % 360.0


def destination_point(origin: GeoPoint, bearing_deg: float, distance_m: float) -> GeoPoint:
    """Point reached by travelling ``distance_m`` along the great circle
    leaving ``origin`` with the given initial bearing. Altitude is preserved."""
    delta = distance_m / EARTH_RADIUS_M
    theta = math.radians(bearing_deg)
    phi1 = math.radians(origin.lat)
    lam1 = math.radians(origin.lon)
    sin_phi2 = math.sin(phi1) * math.cos(delta) + math.cos(phi1) * math.sin(delta) * math.cos(theta)
    sin_phi2 = max(-1.0, min(1.0, sin_phi2))
    phi2 = math.asin(sin_phi2)
    lam2 = lam1 + math.atan2(
        math.sin(theta) * math.sin(delta) * math.cos(phi1),
        math.cos(delta) - math.sin(phi1) * sin_phi2,
    )
    lon = math.degrees(lam2)
    lon = (lon + 180.0) % 360.0 - 180.0
    return GeoPoint(math.degrees(phi2), lon, origin.alt)


def to_enu(origin: GeoPoint, p: GeoPoint) -> EnuVector:
    """Project ``p`` onto the local tangent plane at ``origin``.

    Uses the azimuthal-equidistant mapping (distance + bearing), so the
    horizontal norm equals the great-circle distance exactly and the
    round trip through :func:`from_enu` is lossless.
    """
    d = haversine_distance(origin, p)
    if d > TANGENT_PLANE_LIMIT_M:
        raise GeoError(f"out of tangent-plane range: {d:.0f} m > {TANGENT_PLANE_LIMIT_M:.0f} m")
    if d == 0.0:
        return EnuVector(0.0, 0.0, p.alt - origin.alt)
    theta = math.radians(bearing(origin, p))
    return EnuVector(d * math.sin(theta), d * math.cos(theta), p.alt - origin.alt)


def from_enu(origin: GeoPoint, v: EnuVector) -> GeoPoint:
    """Inverse of :func:`to_enu`."""
    d = v.horizontal_norm()
    if d == 0.0:
        return GeoPoint(origin.lat, origin.lon, origin.alt + v.up)
    theta = math.degrees(math.atan2(v.east, v.north))
    dest = destination_point(origin, theta, d)
    return GeoPoint(dest.lat, dest.lon, origin.alt + v.up)


@dataclass(frozen=True)
class Polyline:
    """Ordered vertices with cumulative arclength per vertex.

    Consecutive duplicate vertices are collapsed at construction, so the
    cumulative lengths are strictly increasing.
    """

    vertices: tuple[GeoPoint, ...]
    cumulative_m: tuple[float, ...] = field(default=(), compare=False)

    def __init__(self, vertices):
        pts: list[GeoPoint] = []
        for v in vertices:
            if pts and v.lat == pts[-1].lat and v.lon == pts[-1].lon:
                continue
            pts.append(v)
        if len(pts) < 2:
            raise GeoError("polyline needs at least 2 distinct vertices")
        cum = [0.0]
        for a, b in zip(pts, pts[1:]):
            cum.append(cum[-1] + haversine_distance(a, b))
        object.__setattr__(self, "vertices", tuple(pts))
        object.__setattr__(self, "cumulative_m", tuple(cum))

    @property
    def total_length_m(self) -> float:
        return self.cumulative_m[-1]


def point_at_arclength(path: Polyline, s: float) -> tuple[GeoPoint, float]:
    """Position and heading at arclength ``s`` along ``path``.

    Heading is the initial bearing of the containing segment; at an
    interior vertex the outgoing segment wins.
    """
    total = path.total_length_m
    if s < 0.0 or s > total + 1e-9:
        raise GeoError(f"arclength out of bounds: {s} not in [0, {total}]")
    s = min(s, total)
    # index of the segment whose start vertex precedes s; ties at a vertex
    # pick the outgoing segment.
    i = bisect.bisect_right(path.cumulative_m, s) - 1
    i = min(i, len(path.vertices) - 2)
    a = path.vertices[i]
    b = path.vertices[i + 1]
    heading = bearing(a, b)
    along = s - path.cumulative_m[i]
    if along == 0.0:
        return a, heading
    return destination_point(a, heading, along), heading
