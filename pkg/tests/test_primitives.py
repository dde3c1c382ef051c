"""Tests for src/geometry/primitives.py."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.errors import GeometryError
from src.geometry.primitives import (
    FaceSet,
    Plane3,
    Polygon3,
    mirror_point,
    segment_hits_polygon,
    segment_occluded,
)

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)


def square(z: float = 0.0, size: float = 1.0) -> Polygon3:
    """Horizontal square facing up (+z)."""
    return Polygon3(np.array([[0, 0, z], [size, 0, z], [size, size, z], [0, size, z]], dtype=float))


# ---------------------------------------------------------------------------
# Plane and mirror
# ---------------------------------------------------------------------------


class TestPlane:

    def test_from_normal_normalises(self):
        plane = Plane3.from_normal([0, 0, 0], [0, 0, 5])
        np.testing.assert_allclose(plane.unit_normal, [0, 0, 1])

    def test_non_unit_normal_rejected(self):
        with pytest.raises(GeometryError, match="unit length"):
            Plane3(np.zeros(3), np.array([0.0, 0.0, 2.0]))

    def test_zero_normal_rejected(self):
        with pytest.raises(GeometryError, match="zero length"):
            Plane3.from_normal([0, 0, 0], [0, 0, 0])

    def test_signed_distance(self):
        plane = Plane3.from_normal([0, 0, 1], [0, 0, 1])
        assert abs(plane.signed_distance([3, 4, 5]) - 4.0) < 1e-12


class TestMirror:

    def test_mirror_across_wall(self):
        plane = Plane3.from_normal([2, 0, 0], [1, 0, 0])
        np.testing.assert_allclose(mirror_point([5, 1, 7], plane), [-1, 1, 7])

    def test_point_on_plane_is_fixed(self):
        plane = Plane3.from_normal([0, 0, 0], [1, 1, 0])
        np.testing.assert_allclose(mirror_point([1, -1, 3], plane), [1, -1, 3], atol=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(
        st.tuples(finite, finite, finite),
        st.tuples(finite, finite, finite),
        st.tuples(finite, finite, finite).filter(lambda n: np.linalg.norm(n) > 1e-3),
    )
    def test_involution(self, p, q, n):
        """Mirroring twice returns the original point."""
        plane = Plane3.from_normal(q, n)
        twice = mirror_point(mirror_point(p, plane), plane)
        np.testing.assert_allclose(twice, p, atol=1e-9)


# ---------------------------------------------------------------------------
# Polygon
# ---------------------------------------------------------------------------


class TestPolygon3:

    def test_normal_follows_winding(self):
        np.testing.assert_allclose(square().normal, [0, 0, 1])
        flipped = Polygon3(square().vertices[::-1])
        np.testing.assert_allclose(flipped.normal, [0, 0, -1])

    def test_area_and_centroid(self):
        sq = square(size=2.0)
        assert abs(sq.area - 4.0) < 1e-12
        np.testing.assert_allclose(sq.centroid, [1, 1, 0])

    def test_too_few_vertices(self):
        with pytest.raises(GeometryError, match=">= 3 vertices"):
            Polygon3(np.array([[0, 0, 0], [1, 0, 0]], dtype=float))

    def test_non_planar_rejected(self):
        v = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0.1], [0, 1, 0]], dtype=float)
        with pytest.raises(GeometryError, match="not planar"):
            Polygon3(v)

    def test_non_convex_rejected(self):
        v = np.array([[0, 0, 0], [2, 0, 0], [1, 0.5, 0], [2, 2, 0], [0, 2, 0]], dtype=float)
        with pytest.raises(GeometryError, match="convex"):
            Polygon3(v)

    def test_degenerate_rejected(self):
        v = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float)
        with pytest.raises(GeometryError, match="degenerate"):
            Polygon3(v)

    def test_star_rejected(self):
        angles = np.arange(5) * 4 * np.pi / 5
        v = np.column_stack([np.cos(angles), np.sin(angles), np.zeros(5)])
        with pytest.raises(GeometryError):
            Polygon3(v)


# ---------------------------------------------------------------------------
# Segment tests
# ---------------------------------------------------------------------------


class TestSegmentHitsPolygon:

    def test_crossing_through_interior(self):
        hit = segment_hits_polygon([0.5, 0.5, -1], [0.5, 0.5, 1], square())
        np.testing.assert_allclose(hit, [0.5, 0.5, 0])

    def test_miss_outside(self):
        assert segment_hits_polygon([2, 2, -1], [2, 2, 1], square()) is None

    def test_edge_counts_as_hit(self):
        assert segment_hits_polygon([1.0, 0.5, -1], [1.0, 0.5, 1], square()) is not None

    def test_endpoint_on_polygon_is_not_a_hit(self):
        assert segment_hits_polygon([0.5, 0.5, 0], [0.5, 0.5, 1], square()) is None

    def test_segment_stopping_short(self):
        assert segment_hits_polygon([0.5, 0.5, -2], [0.5, 0.5, -1], square()) is None

    def test_parallel_never_hits(self):
        assert segment_hits_polygon([-1, 0.5, 0], [2, 0.5, 0], square()) is None
        assert segment_hits_polygon([-1, 0.5, 1], [2, 0.5, 1], square()) is None

    def test_coincident_endpoints_raise(self):
        with pytest.raises(GeometryError, match="coincide"):
            segment_hits_polygon([0, 0, 0], [0, 0, 0], square())


class TestFaceSet:

    def test_hits_matrix_matches_scalar(self):
        polys = [square(0.0), square(2.0, size=0.5), Polygon3(np.array([[0, 0, 5], [1, 0, 5], [0, 1, 5]], dtype=float))]
        faces = FaceSet(polys, ids=["a", "b", "c"])
        rng = np.random.default_rng(7)
        a = rng.uniform(-0.5, 1.5, (200, 3)) + np.array([0, 0, -2])
        b = rng.uniform(-0.5, 1.5, (200, 3)) + np.array([0, 0, 6])
        mask = faces.hits(a, b)
        expected = np.array(
            [[segment_hits_polygon(a[i], b[i], p) is not None for p in polys] for i in range(len(a))]
        )
        np.testing.assert_array_equal(mask, expected)

    def test_triangle_padding_is_ignored(self):
        tri = Polygon3(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float))
        faces = FaceSet([square(3.0), tri])
        assert not faces.hits([0.8, 0.8, -1], [0.8, 0.8, 1])[0, 1]
        assert faces.hits([0.2, 0.2, -1], [0.2, 0.2, 1])[0, 1]

    def test_crossings_nan_for_misses(self):
        faces = FaceSet([square(0.0), square(1.0)], ids=["low", "high"])
        pts = faces.crossings([0.5, 0.5, -1], [0.5, 0.5, 0.5])
        np.testing.assert_allclose(pts[0], [0.5, 0.5, 0.0])
        assert np.isnan(pts[1]).all()
        assert faces.crossings([5, 5, -1], [5, 5, 1]) is None

    def test_occluded_with_exclusion(self):
        faces = FaceSet([square(0.0)], ids=["floor"])
        assert segment_occluded([0.5, 0.5, -1], [0.5, 0.5, 1], faces)
        assert not segment_occluded([0.5, 0.5, -1], [0.5, 0.5, 1], faces, exclude=["floor"])

    def test_accepts_plain_polygon_list(self):
        assert segment_occluded([0.5, 0.5, -1], [0.5, 0.5, 1], [square()])

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError, match="unique"):
            FaceSet([square(), square(1.0)], ids=["x", "x"])

    def test_empty_face_set(self):
        faces = FaceSet([])
        assert faces.hits([0, 0, 0], [1, 1, 1]).shape == (1, 0)
        assert not segment_occluded([0, 0, 0], [1, 1, 1], faces)
