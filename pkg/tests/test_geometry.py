"""
Geometry primitive tests.
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.core.geometry import (
    angular_difference,
    bresenham,
    contains_points,
    nearest_point,
    point_in_polygon,
    rasterize_area,
    rasterize_polyline,
    rasterize_ring,
)
from src.models.annotation import Point2, SafetyMargin, Trajectory
from src.models.geometry import PixelMask, PixelSet

UNIT_SQUARE = SafetyMargin(vertices=[[0, 0], [1, 0], [1, 1], [0, 1]])


def _brute_force_mask(ring: SafetyMargin, width: int, height: int) -> np.ndarray:
    bits = np.zeros((height, width), dtype=bool)
    for row in range(height):
        for col in range(width):
            bits[row, col] = point_in_polygon(Point2(x=col + 0.5, y=row + 0.5), ring)
    return bits


class TestPointInPolygon:

    def test_inside(self):
        assert point_in_polygon(Point2(x=0.5, y=0.5), UNIT_SQUARE)

    def test_outside(self):
        assert not point_in_polygon(Point2(x=2, y=0.5), UNIT_SQUARE)

    @pytest.mark.parametrize("x, y", [(1.0, 0.5), (0.0, 0.0), (0.5, 1.0), (1.0, 1.0)])
    def test_boundary_counts_as_inside(self, x, y):
        assert point_in_polygon(Point2(x=x, y=y), UNIT_SQUARE)

    def test_even_odd_on_self_intersecting_ring(self):
        # Bow tie: both lobes are inside
        bow_tie = SafetyMargin(vertices=[[0, 0], [4, 4], [4, 1], [0, 4]])
        assert point_in_polygon(Point2(x=0.5, y=2), bow_tie)
        assert point_in_polygon(Point2(x=3.5, y=2), bow_tie)
        assert not point_in_polygon(Point2(x=2, y=0.5), bow_tie)

    def test_vectorized_matches_scalar(self):
        ring = SafetyMargin(vertices=[[1, 1], [9, 2], [7, 8], [2, 6]])
        rng = np.random.default_rng(3)
        xs, ys = rng.uniform(0, 10, 200), rng.uniform(0, 10, 200)
        flags = contains_points(xs, ys, ring)
        assert flags.tolist() == [point_in_polygon(Point2(x=x, y=y), ring) for x, y in zip(xs, ys)]


class TestRasterizeArea:

    def test_square_uses_pixel_centres(self):
        mask = rasterize_area(SafetyMargin(vertices=[[0, 0], [4, 0], [4, 4], [0, 4]]), 8, 8)
        assert mask.count() == 16
        assert mask.bits[:4, :4].all()
        assert not mask.bits[4:, :].any() and not mask.bits[:, 4:].any()

    def test_thin_triangle_is_empty(self):
        mask = rasterize_area(SafetyMargin(vertices=[[0.1, 0.1], [7.9, 0.2], [0.1, 0.3]]), 8, 8)
        assert mask.is_empty()

    def test_centres_on_edges_are_inside(self):
        # Edges pass exactly through pixel centres
        mask = rasterize_area(SafetyMargin(vertices=[[0.5, 0.5], [3.5, 0.5], [3.5, 3.5], [0.5, 3.5]]), 6, 6)
        assert mask.count() == 16
        assert mask.bits[0:4, 0:4].all()

    def test_random_polygons_match_brute_force(self):
        rng = np.random.default_rng(5)
        for trial in range(20):
            k = int(rng.integers(3, 9))
            angles = np.sort(rng.uniform(0, 2 * np.pi, k))
            radii = rng.uniform(4, 15, k)
            # Half-integer vertices put some edges through pixel centres
            vertices = np.round(
                np.column_stack([16 + radii * np.cos(angles), 16 + radii * np.sin(angles)]) * 2
            ) / 2
            try:
                ring = SafetyMargin(vertices=vertices.tolist())
            except ValidationError:
                continue
            mask = rasterize_area(ring, 32, 32)
            np.testing.assert_array_equal(mask.bits, _brute_force_mask(ring, 32, 32), err_msg=f"trial {trial}")

    def test_invalid_grid(self):
        with pytest.raises(ValueError):
            rasterize_area(UNIT_SQUARE, 0, 4)


class TestLineRasterization:

    def test_horizontal_edge(self):
        pixels = rasterize_ring(SafetyMargin(vertices=[[0, 0], [3, 0], [3, 2]]), 8, 8)
        assert pixels.to_list()[:4] == [(0, 0), (1, 0), (2, 0), (3, 0)]

    def test_diagonal_edge(self):
        pixels = rasterize_polyline(Trajectory.from_array([[0, 0], [3, 3]]), 8, 8)
        assert pixels.to_list() == [(0, 0), (1, 1), (2, 2), (3, 3)]

    def test_ring_is_closed_and_deduplicated(self):
        pixels = rasterize_ring(SafetyMargin(vertices=[[0, 0], [3, 3], [0, 3]]), 8, 8)
        assert pixels.to_list() == [
            (0, 0), (1, 1), (2, 2), (3, 3),  # first edge
            (2, 3), (1, 3), (0, 3),          # second edge
            (0, 2), (0, 1),                  # closing edge
        ]

    def test_short_edge(self):
        pixels = rasterize_polyline(Trajectory.from_array([[0.2, 0.2], [1.2, 0.2]]), 4, 4)
        assert 1 <= len(pixels) <= 2

    def test_sub_pixel_segment(self):
        pixels = rasterize_polyline(Trajectory.from_array([[2.1, 2.1], [2.6, 2.4]]), 4, 4)
        assert pixels.to_list() == [(2, 2)]

    def test_clipped_to_grid(self):
        pixels = rasterize_polyline(Trajectory.from_array([[-2, 1], [5, 1]]), 4, 4)
        assert pixels.to_list() == [(0, 1), (1, 1), (2, 1), (3, 1)]

    def test_entirely_outside_grid(self):
        assert len(rasterize_polyline(Trajectory.from_array([[10, 10], [20, 12]]), 4, 4)) == 0

    def test_bresenham_properties(self):
        rng = np.random.default_rng(9)
        for _ in range(200):
            c0, r0, c1, r1 = (int(v) for v in rng.integers(-20, 20, 4))
            line = list(bresenham(c0, r0, c1, r1))
            assert line[0] == (c0, r0) and line[-1] == (c1, r1)
            assert len(line) == max(abs(c1 - c0), abs(r1 - r0)) + 1
            for (a, b), (c, d) in zip(line[:-1], line[1:]):
                assert max(abs(c - a), abs(d - b)) == 1
            # Every pixel stays within half a pixel of the ideal line along the minor axis
            length = math.hypot(c1 - c0, r1 - r0)
            if length:
                major = max(abs(c1 - c0), abs(r1 - r0))
                for c, r in line:
                    offset = abs((c1 - c0) * (r - r0) - (r1 - r0) * (c - c0)) / major
                    assert offset <= 0.5 + 1e-12


class TestNearestPoint:

    def test_example(self):
        pixels = PixelSet(width=10, height=10, points=[[3, 4], [6, 8]])
        point, distance = nearest_point(Point2(x=0, y=0), pixels)
        assert point.as_tuple() == (3.0, 4.0)
        assert distance == 5.0

    def test_ties_follow_set_order(self):
        first = PixelSet(width=10, height=10, points=[[3, 4], [4, 3]])
        second = PixelSet(width=10, height=10, points=[[4, 3], [3, 4]])
        assert nearest_point(Point2(x=0, y=0), first)[0].as_tuple() == (3.0, 4.0)
        assert nearest_point(Point2(x=0, y=0), second)[0].as_tuple() == (4.0, 3.0)

    def test_empty_set(self):
        with pytest.raises(ValueError):
            nearest_point(Point2(x=0, y=0), PixelSet(width=4, height=4, points=np.empty((0, 2))))

    def test_exhaustive_minimum(self):
        rng = np.random.default_rng(2)
        pixels = PixelSet(width=50, height=50, points=np.unique(rng.integers(0, 50, (60, 2)), axis=0))
        for _ in range(50):
            p = Point2(x=float(rng.uniform(0, 50)), y=float(rng.uniform(0, 50)))
            _, distance = nearest_point(p, pixels)
            assert all(distance <= math.hypot(c - p.x, r - p.y) + 1e-12 for c, r in pixels.to_list())


class TestAngularDifference:

    @pytest.mark.parametrize("u, v, expected", [
        ((1, 0), (0, 1), math.pi / 2),
        ((1, 0), (1, 0), 0.0),
        ((1, 0), (-1, 1), 3 * math.pi / 4),
        ((1, 0), (-1, 0), math.pi),
    ])
    def test_examples(self, u, v, expected):
        assert angular_difference(u, v) == pytest.approx(expected, abs=1e-15)

    def test_symmetric_and_scale_invariant(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            u, v = rng.normal(size=2), rng.normal(size=2)
            angle = angular_difference(u, v)
            assert angular_difference(v, u) == pytest.approx(angle, abs=1e-12)
            assert angular_difference(3.5 * u, 0.25 * v) == pytest.approx(angle, abs=1e-12)
            assert 0.0 <= angle <= math.pi

    def test_accepts_points(self):
        assert angular_difference(Point2(x=0, y=2), Point2(x=3, y=0)) == pytest.approx(math.pi / 2)

    def test_zero_vector(self):
        with pytest.raises(ValueError):
            angular_difference((0, 0), (1, 0))


class TestPixelContainers:

    def test_mask_shape_must_match(self):
        with pytest.raises(ValidationError):
            PixelMask(width=3, height=2, bits=np.zeros((3, 2), dtype=bool))

    def test_set_rejects_duplicates(self):
        with pytest.raises(ValidationError):
            PixelSet(width=4, height=4, points=[[1, 1], [1, 1]])

    def test_set_rejects_out_of_grid(self):
        with pytest.raises(ValidationError):
            PixelSet(width=4, height=4, points=[[4, 0]])

    def test_set_to_mask(self):
        mask = PixelSet(width=3, height=2, points=[[0, 0], [2, 1]]).to_mask()
        assert mask.tolist() == [[True, False, False], [False, False, True]]
