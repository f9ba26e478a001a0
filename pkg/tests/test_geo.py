import math
import random

import pytest

from branchsite.errors import DomainError
from branchsite.geo import (
    EARTH_RADIUS_M,
    Point,
    Polygon,
    SpatialIndex,
    geodesic_distance,
    nearest_distance,
    planar_distance,
    point_in_polygon,
)


def reference_haversine(lon1, lat1, lon2, lat2):
    """Independent haversine evaluation used as the test oracle."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = math.radians(lat2 - lat1)
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.atan2(math.sqrt(a), math.sqrt(1 - a))


def winding_number_inside(p, ring):
    """Winding-number containment oracle (nonzero rule) for simple rings."""
    wn = 0
    n = len(ring)
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        if a.y <= p.y:
            if b.y > p.y and _is_left(a, b, p) > 0:
                wn += 1
        elif b.y <= p.y and _is_left(a, b, p) < 0:
            wn -= 1
    return wn != 0


def _is_left(a, b, p):
    return (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)


class TestPlanarDistance:
    def test_identity(self):
        assert planar_distance(Point(0, 0), Point(0, 0)) == 0.0

    def test_pythagorean_triple(self):
        assert planar_distance(Point(0, 0), Point(3, 4)) == 5.0

    def test_high_precision_reference(self):
        # sqrt(16.3^2 + 17.0^2) evaluated with 50-digit decimal arithmetic
        d = planar_distance(Point(12.3, -7.1), Point(-4.0, 9.9))
        assert d == pytest.approx(23.551857676200406, abs=1e-12)

    def test_symmetry_and_triangle_inequality(self):
        rng = random.Random(7)
        for _ in range(500):
            a = Point(rng.uniform(-1e4, 1e4), rng.uniform(-1e4, 1e4))
            b = Point(rng.uniform(-1e4, 1e4), rng.uniform(-1e4, 1e4))
            c = Point(rng.uniform(-1e4, 1e4), rng.uniform(-1e4, 1e4))
            ab = planar_distance(a, b)
            assert ab == planar_distance(b, a)
            assert ab >= 0.0
            assert ab <= planar_distance(a, c) + planar_distance(c, b) + 1e-9


class TestGeodesicDistance:
    def test_identity(self):
        p = Point(51.67, 32.65)
        assert geodesic_distance(p, p) == 0.0

    def test_antipodal_on_equator(self):
        d = geodesic_distance(Point(0, 0), Point(180, 0))
        assert d == pytest.approx(math.pi * EARTH_RADIUS_M, rel=1e-12)

    def test_against_reference_haversine(self):
        a = Point(51.67, 32.65)
        b = Point(51.68, 32.65)
        want = reference_haversine(a.x, a.y, b.x, b.y)
        assert geodesic_distance(a, b) == pytest.approx(want, rel=1e-6)
        assert geodesic_distance(a, b) == pytest.approx(936.2411669269036, rel=1e-6)

    def test_out_of_range_rejected(self):
        with pytest.raises(DomainError):
            geodesic_distance(Point(181.0, 0.0), Point(0.0, 0.0))
        with pytest.raises(DomainError):
            geodesic_distance(Point(0.0, 0.0), Point(0.0, 91.0))

    def test_kernel_properties_random(self):
        rng = random.Random(11)
        for _ in range(300):
            a = Point(rng.uniform(-180, 180), rng.uniform(-89, 89))
            b = Point(rng.uniform(-180, 180), rng.uniform(-89, 89))
            c = Point(rng.uniform(-180, 180), rng.uniform(-89, 89))
            ab = geodesic_distance(a, b)
            ba = geodesic_distance(b, a)
            assert ab == pytest.approx(ba, rel=1e-9)
            assert ab >= 0.0
            ac = geodesic_distance(a, c)
            cb = geodesic_distance(c, b)
            assert ab <= ac + cb + 1e-9 * max(1.0, ab)


class TestPoint:
    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            Point(float("nan"), 0.0)
        with pytest.raises(DomainError):
            Point(0.0, float("inf"))


class TestPolygon:
    def test_closure_normalization(self):
        poly = Polygon.from_coords([(0, 0), (4, 0), (4, 4), (0, 4), (0, 0)])
        assert len(poly.exterior) == 4
        assert poly.area == pytest.approx(16.0)
        assert poly.centroid == Point(2.0, 2.0)

    def test_degenerate_rejected(self):
        with pytest.raises(DomainError):
            Polygon.from_coords([(0, 0), (1, 1)])
        with pytest.raises(DomainError):
            Polygon.from_coords([(0, 0), (1, 0), (2, 0)])  # zero area

    def test_self_intersecting_rejected(self):
        with pytest.raises(DomainError):
            Polygon.from_coords([(0, 0), (4, 4), (4, 0), (0, 4)])  # bow-tie


class TestPointInPolygon:
    def test_centroid_of_convex_inside(self):
        poly = Polygon.from_coords([(0, 0), (10, 0), (12, 6), (5, 11), (-2, 5)])
        assert point_in_polygon(poly.centroid, poly)

    def test_outside_bounding_box(self):
        poly = Polygon.from_coords([(0, 0), (10, 0), (10, 10), (0, 10)])
        assert not point_in_polygon(Point(20, 20), poly)

    def test_boundary_counts_as_inside(self):
        poly = Polygon.from_coords([(0, 0), (10, 0), (10, 10), (0, 10)])
        assert point_in_polygon(Point(5, 0), poly)   # on edge
        assert point_in_polygon(Point(10, 10), poly)  # on vertex
        assert point_in_polygon(Point(0, 5), poly)

    def test_hole_excluded_but_hole_boundary_inside(self):
        poly = Polygon.from_coords(
            [(0, 0), (10, 0), (10, 10), (0, 10)],
            holes=[[(4, 4), (6, 4), (6, 6), (4, 6)]],
        )
        assert not point_in_polygon(Point(5, 5), poly)
        assert point_in_polygon(Point(4, 5), poly)  # on hole ring
        assert point_in_polygon(Point(2, 2), poly)

    def test_matches_winding_number_oracle_on_convex(self):
        rng = random.Random(3)
        for _ in range(20):
            # convex polygon: points on an ellipse, in angular order
            cx, cy = rng.uniform(-5, 5), rng.uniform(-5, 5)
            rx, ry = rng.uniform(2, 8), rng.uniform(2, 8)
            k = rng.randint(5, 12)
            angles = sorted(rng.uniform(0, 2 * math.pi) for _ in range(k))
            ring = [(cx + rx * math.cos(t), cy + ry * math.sin(t)) for t in angles]
            try:
                poly = Polygon.from_coords(ring)
            except DomainError:
                continue  # nearly-collinear sample
            for _ in range(50):
                p = Point(rng.uniform(cx - 10, cx + 10), rng.uniform(cy - 10, cy + 10))
                assert point_in_polygon(p, poly) == winding_number_inside(p, poly.exterior)

    def test_matches_winding_number_oracle_on_star_shaped(self):
        rng = random.Random(5)
        for _ in range(20):
            k = rng.randint(6, 14)
            radii = [rng.uniform(1.0, 8.0) for _ in range(k)]
            ring = [
                (r * math.cos(2 * math.pi * i / k), r * math.sin(2 * math.pi * i / k))
                for i, r in enumerate(radii)
            ]
            poly = Polygon.from_coords(ring)
            for _ in range(50):
                p = Point(rng.uniform(-9, 9), rng.uniform(-9, 9))
                assert point_in_polygon(p, poly) == winding_number_inside(p, poly.exterior)


class TestSpatialIndex:
    def test_query_point_itself_indexed(self):
        idx = SpatialIndex([Point(1, 2), Point(5, 5)])
        assert nearest_distance(idx, Point(5, 5)) == 0.0

    def test_single_point(self):
        idx = SpatialIndex([Point(3, 4)])
        assert nearest_distance(idx, Point(0, 0)) == 5.0

    def test_empty_index_rejected(self):
        idx = SpatialIndex([])
        with pytest.raises(DomainError, match="empty feature layer"):
            nearest_distance(idx, Point(0, 0))

    def test_matches_linear_scan_exactly(self):
        rng = random.Random(17)
        pts = [Point(rng.uniform(0, 10000), rng.uniform(0, 10000)) for _ in range(500)]
        idx = SpatialIndex(pts, cell_size=700.0)
        for _ in range(100):
            q = Point(rng.uniform(-2000, 12000), rng.uniform(-2000, 12000))
            want = min(planar_distance(q, p) for p in pts)
            assert nearest_distance(idx, q) == want

    def test_small_cell_size_still_exact(self):
        rng = random.Random(23)
        pts = [Point(rng.uniform(0, 100), rng.uniform(0, 100)) for _ in range(40)]
        idx = SpatialIndex(pts, cell_size=3.0)
        for _ in range(50):
            q = Point(rng.uniform(-50, 150), rng.uniform(-50, 150))
            want = min(planar_distance(q, p) for p in pts)
            assert nearest_distance(idx, q) == want

    def test_geodesic_mode_matches_scan(self):
        rng = random.Random(29)
        pts = [Point(rng.uniform(50, 53), rng.uniform(31, 34)) for _ in range(60)]
        idx = SpatialIndex(pts, mode="geodesic")
        for _ in range(30):
            q = Point(rng.uniform(50, 53), rng.uniform(31, 34))
            want = min(geodesic_distance(q, p) for p in pts)
            assert nearest_distance(idx, q) == want
