"""Geometry primitives and distance kernels.

Two coordinate modes exist project-wide: ``planar`` (x/y in meters) and
``geodesic`` (x = longitude, y = latitude in degrees, distances on a sphere
of radius 6,371,000 m). Mixing modes is a caller error; every consumer takes
the mode explicitly. All types are immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import DomainError

EARTH_RADIUS_M = 6_371_000.0

PLANAR = "planar"
GEODESIC = "geodesic"
MODES = (PLANAR, GEODESIC)


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"point coordinates must be finite, got ({self.x}, {self.y})")


def _check_geodesic_range(p: Point) -> None:
    if not (-180.0 <= p.x <= 180.0 and -90.0 <= p.y <= 90.0):
        raise DomainError(
            f"geodesic coordinates out of range: lon={p.x}, lat={p.y} "
            "(expected lon in [-180, 180], lat in [-90, 90])"
        )


def planar_distance(a: Point, b: Point) -> float:
    """Euclidean distance in meters between two planar points."""
    dx = a.x - b.x
    dy = a.y - b.y
    return math.sqrt(dx * dx + dy * dy)


def geodesic_distance(a: Point, b: Point) -> float:
    """Haversine great-circle distance in meters between two lon/lat points."""
    _check_geodesic_range(a)
    _check_geodesic_range(b)
    lat1 = math.radians(a.y)
    lat2 = math.radians(b.y)
    dlat = math.radians(b.y - a.y)
    dlon = math.radians(b.x - a.x)
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def distance(a: Point, b: Point, mode: str = PLANAR) -> float:
    """Distance under the active coordinate mode."""
    if mode == PLANAR:
        return planar_distance(a, b)
    if mode == GEODESIC:
        return geodesic_distance(a, b)
    raise DomainError(f"unknown coordinate mode: {mode!r}")


def _orient(a: Point, b: Point, c: Point) -> float:
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)


def _on_segment(a: Point, b: Point, p: Point) -> bool:
    """True iff p lies on the closed segment [a, b]."""
    cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
    if cross != 0.0:
        return False
    return (
        min(a.x, b.x) <= p.x <= max(a.x, b.x)
        and min(a.y, b.y) <= p.y <= max(a.y, b.y)
    )


def _segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool:
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0) and d1 != 0 and d2 != 0) and (
        (d3 > 0) != (d4 > 0) and d3 != 0 and d4 != 0
    ):
        return True
    if d1 == 0 and _on_segment(q1, q2, p1):
        return True
    if d2 == 0 and _on_segment(q1, q2, p2):
        return True
    if d3 == 0 and _on_segment(p1, p2, q1):
        return True
    if d4 == 0 and _on_segment(p1, p2, q2):
        return True
    return False


def _normalize_ring(vertices: Sequence[Point]) -> tuple[Point, ...]:
    """Drop a duplicated closing vertex and validate the ring is usable."""
    pts = list(vertices)
    if len(pts) >= 2 and pts[0] == pts[-1]:
        pts = pts[:-1]
    if len(pts) < 3:
        raise DomainError("polygon ring needs at least 3 distinct vertices")
    if len(set((p.x, p.y) for p in pts)) != len(pts):
        raise DomainError("polygon ring has repeated vertices")
    return tuple(pts)


def _ring_area(ring: Sequence[Point]) -> float:
    """Signed shoelace area of a ring given without the closing vertex."""
    s = 0.0
    n = len(ring)
    for i in range(n):
        a = ring[i]
        b = ring[(i + 1) % n]
        s += a.x * b.y - b.x * a.y
    return 0.5 * s


def _ring_self_intersects(ring: Sequence[Point]) -> bool:
    n = len(ring)
    for i in range(n):
        a1, a2 = ring[i], ring[(i + 1) % n]
        for j in range(i + 1, n):
            # skip the segment itself and segments sharing an endpoint
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = ring[j], ring[(j + 1) % n]
            if _segments_intersect(a1, a2, b1, b2):
                return True
    return False


@dataclass(frozen=True)
class Polygon:
    """Simple polygon: one exterior ring plus optional hole rings.

    Rings are stored without the duplicated closing vertex; input rings may
    be given open or closed. The exterior must be non-self-intersecting with
    strictly positive area.
    """

    exterior: tuple[Point, ...]
    holes: tuple[tuple[Point, ...], ...] = field(default=())

    def __post_init__(self):
        ext = _normalize_ring(self.exterior)
        holes = tuple(_normalize_ring(h) for h in self.holes)
        object.__setattr__(self, "exterior", ext)
        object.__setattr__(self, "holes", holes)
        if abs(_ring_area(ext)) <= 0.0:
            raise DomainError("polygon area must be strictly positive")
        for ring in (ext,) + holes:
            if _ring_self_intersects(ring):
                raise DomainError("polygon ring is self-intersecting")

    @classmethod
    def from_coords(cls, exterior: Iterable[tuple[float, float]],
                    holes: Iterable[Iterable[tuple[float, float]]] = ()) -> "Polygon":
        ext = tuple(Point(float(x), float(y)) for x, y in exterior)
        hs = tuple(tuple(Point(float(x), float(y)) for x, y in ring) for ring in holes)
        return cls(ext, hs)

    @property
    def area(self) -> float:
        a = abs(_ring_area(self.exterior))
        for hole in self.holes:
            a -= abs(_ring_area(hole))
        return a

    @property
    def centroid(self) -> Point:
        """Arithmetic mean of the exterior's distinct vertices."""
        n = len(self.exterior)
        return Point(
            sum(p.x for p in self.exterior) / n,
            sum(p.y for p in self.exterior) / n,
        )

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        xs = [p.x for p in self.exterior]
        ys = [p.y for p in self.exterior]
        return min(xs), min(ys), max(xs), max(ys)


def _ray_crossings_odd(p: Point, ring: Sequence[Point]) -> bool:
    """Odd/even crossing count of an eastward ray from p."""
    inside = False
    n = len(ring)
    for i in range(n):
        a = ring[i]
        b = ring[(i + 1) % n]
        if (a.y > p.y) != (b.y > p.y):
            x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y)
            if p.x < x_at:
                inside = not inside
    return inside


def _on_ring(p: Point, ring: Sequence[Point]) -> bool:
    n = len(ring)
    for i in range(n):
        if _on_segment(ring[i], ring[(i + 1) % n], p):
            return True
    return False


def point_in_polygon(p: Point, poly: Polygon) -> bool:
    """Ray-crossing containment test; boundary points count as inside."""
    if _on_ring(p, poly.exterior):
        return True
    for hole in poly.holes:
        if _on_ring(p, hole):
            return True
    if not _ray_crossings_odd(p, poly.exterior):
        return False
    return not any(_ray_crossings_odd(p, hole) for hole in poly.holes)


class SpatialIndex:
    """Uniform bucket grid over points for nearest-feature queries.

    Correctness is the contract: results equal an exhaustive scan exactly.
    In geodesic mode the query falls back to a linear scan, since bucket
    geometry in degrees does not bound great-circle distances.
    """

    def __init__(self, points: Iterable[Point], cell_size: float = 3000.0,
                 mode: str = PLANAR):
        if cell_size <= 0:
            raise DomainError("spatial index cell_size must be positive")
        if mode not in MODES:
            raise DomainError(f"unknown coordinate mode: {mode!r}")
        self.cell_size = float(cell_size)
        self.mode = mode
        self.points: tuple[Point, ...] = tuple(points)
        if mode == GEODESIC:
            for p in self.points:
                _check_geodesic_range(p)
        self._buckets: dict[tuple[int, int], list[Point]] = {}
        for p in self.points:
            self._buckets.setdefault(self._key(p), []).append(p)

    def _key(self, p: Point) -> tuple[int, int]:
        return (math.floor(p.x / self.cell_size), math.floor(p.y / self.cell_size))

    def __len__(self) -> int:
        return len(self.points)

    def nearest_distance(self, q: Point) -> float:
        """Distance from q to the nearest indexed point."""
        if not self.points:
            raise DomainError("empty feature layer")
        if self.mode == GEODESIC:
            return min(geodesic_distance(q, p) for p in self.points)

        qi, qj = self._key(q)
        best = math.inf
        seen = 0
        ring = 0
        while True:
            cells = self._ring_cells(qi, qj, ring)
            for key in cells:
                pts = self._buckets.get(key)
                if not pts:
                    continue
                seen += len(pts)
                for p in pts:
                    d = planar_distance(q, p)
                    if d < best:
                        best = d
            # any point in an unscanned bucket lies farther than ring*cell_size
            if best <= ring * self.cell_size or seen == len(self.points):
                return best
            ring += 1

    @staticmethod
    def _ring_cells(qi: int, qj: int, r: int) -> list[tuple[int, int]]:
        if r == 0:
            return [(qi, qj)]
        cells = []
        for i in range(qi - r, qi + r + 1):
            cells.append((i, qj - r))
            cells.append((i, qj + r))
        for j in range(qj - r + 1, qj + r):
            cells.append((qi - r, j))
            cells.append((qi + r, j))
        return cells


def nearest_distance(index: SpatialIndex, q: Point) -> float:
    """Distance from q to the nearest point held by the index."""
    return index.nearest_distance(q)
