"""
Confmap Geometry

Point-in-polygon, area and line rasterization, nearest-point queries and
angular differences. Pixels are addressed as integer (col, row); a pixel's
centre is (col + 0.5, row + 0.5) and a real coordinate (x, y) falls in pixel
(floor(x), floor(y)).
"""

import math
from typing import Iterator, List, Sequence, Tuple, Union

import numpy as np

from src.models.annotation import Point2, SafetyMargin, Trajectory
from src.models.geometry import PixelMask, PixelSet

Vector = Union[Point2, Sequence[float], np.ndarray]


def _ring_edges(ring: SafetyMargin) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    vertices = ring.as_array()
    following = np.roll(vertices, -1, axis=0)
    return vertices[:, 0], vertices[:, 1], following[:, 0], following[:, 1]


def contains_points(xs: np.ndarray, ys: np.ndarray, ring: SafetyMargin) -> np.ndarray:
    """Even-odd containment for many points; points on an edge count as inside.

    Args:
        xs: Point x coordinates
        ys: Point y coordinates
        ring: Polygon ring

    Returns:
        Boolean array, True where the point is inside or on the boundary
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    inside = np.zeros(xs.shape, dtype=bool)
    on_edge = np.zeros(xs.shape, dtype=bool)

    for x1, y1, x2, y2 in zip(*_ring_edges(ring)):
        crosses = (y1 > ys) != (y2 > ys)
        if crosses.any():
            x_int = x1 + (ys[crosses] - y1) * (x2 - x1) / (y2 - y1)
            hit = np.zeros(xs.shape, dtype=bool)
            hit[crosses] = xs[crosses] < x_int
            inside ^= hit

        cross = (x2 - x1) * (ys - y1) - (y2 - y1) * (xs - x1)
        on_edge |= (
            (cross == 0)
            & (xs >= min(x1, x2)) & (xs <= max(x1, x2))
            & (ys >= min(y1, y2)) & (ys <= max(y1, y2))
        )

    return inside | on_edge


def point_in_polygon(p: Point2, ring: SafetyMargin) -> bool:
    """Even-odd rule; boundary points report inside."""
    return bool(contains_points(np.array([p.x]), np.array([p.y]), ring)[0])


def rasterize_area(ring: SafetyMargin, width: int, height: int) -> PixelMask:
    """Mark every pixel whose centre passes point_in_polygon.

    Scanline form of contains_points: crossing abscissae are computed with the
    same expression per row, so the mask matches a per-pixel sweep exactly.
    """
    if width <= 0 or height <= 0:
        raise ValueError("grid dimensions must be positive")

    x1, y1, x2, y2 = _ring_edges(ring)
    centres_x = np.arange(width, dtype=np.float64) + 0.5
    bits = np.zeros((height, width), dtype=bool)

    for row in range(height):
        py = row + 0.5
        crosses = (y1 > py) != (y2 > py)
        if not crosses.any():
            continue
        ex1, ey1, ex2, ey2 = x1[crosses], y1[crosses], x2[crosses], y2[crosses]
        x_int = np.sort(ex1 + (py - ey1) * (ex2 - ex1) / (ey2 - ey1))
        # Crossings strictly right of each centre
        right = len(x_int) - np.searchsorted(x_int, centres_x, side="right")
        bits[row] = (right % 2) == 1

    # Centres lying exactly on an edge
    for ex1, ey1, ex2, ey2 in zip(x1, y1, x2, y2):
        c0 = max(0, math.ceil(min(ex1, ex2) - 0.5))
        c1 = min(width - 1, math.floor(max(ex1, ex2) - 0.5))
        r0 = max(0, math.ceil(min(ey1, ey2) - 0.5))
        r1 = min(height - 1, math.floor(max(ey1, ey2) - 0.5))
        if c0 > c1 or r0 > r1:
            continue
        px = np.arange(c0, c1 + 1, dtype=np.float64)[None, :] + 0.5
        py = np.arange(r0, r1 + 1, dtype=np.float64)[:, None] + 0.5
        cross = (ex2 - ex1) * (py - ey1) - (ey2 - ey1) * (px - ex1)
        bits[r0:r1 + 1, c0:c1 + 1] |= cross == 0

    return PixelMask(width=width, height=height, bits=bits)


def bresenham(c0: int, r0: int, c1: int, r1: int) -> Iterator[Tuple[int, int]]:
    """8-connected pixels from (c0, r0) to (c1, r1), both ends included."""
    dc = abs(c1 - c0)
    dr = -abs(r1 - r0)
    step_c = 1 if c0 < c1 else -1
    step_r = 1 if r0 < r1 else -1
    err = dc + dr
    while True:
        yield c0, r0
        if c0 == c1 and r0 == r1:
            return
        e2 = 2 * err
        if e2 >= dr:
            err += dr
            c0 += step_c
        if e2 <= dc:
            err += dc
            r0 += step_r


def _pixel_of(x: float, y: float) -> Tuple[int, int]:
    return int(math.floor(x)), int(math.floor(y))


def _rasterize_path(vertices: np.ndarray, closed: bool, width: int, height: int) -> PixelSet:
    if width <= 0 or height <= 0:
        raise ValueError("grid dimensions must be positive")
    pixels = [_pixel_of(x, y) for x, y in vertices]
    if closed:
        pixels.append(pixels[0])

    # dict keeps first-seen order: edge order, then along-edge order
    seen = {}
    for (c0, r0), (c1, r1) in zip(pixels[:-1], pixels[1:]):
        for c, r in bresenham(c0, r0, c1, r1):
            if 0 <= c < width and 0 <= r < height:
                seen.setdefault((c, r), None)
    if len(pixels) == 1:
        c, r = pixels[0]
        if 0 <= c < width and 0 <= r < height:
            seen.setdefault((c, r), None)

    points = np.array(list(seen), dtype=np.int64).reshape(-1, 2)
    return PixelSet(width=width, height=height, points=points)


def rasterize_ring(ring: SafetyMargin, width: int, height: int) -> PixelSet:
    """Bresenham pixels of every ring edge including the closing one."""
    return _rasterize_path(ring.as_array(), closed=True, width=width, height=height)


def rasterize_polyline(trajectory: Trajectory, width: int, height: int) -> PixelSet:
    """Bresenham pixels of an open polyline."""
    return _rasterize_path(trajectory.as_array(), closed=False, width=width, height=height)


def nearest_point(p: Point2, pixels: PixelSet) -> Tuple[Point2, float]:
    """Closest member of a pixel set; ties go to the earliest member.

    Members are compared in pixel-index coordinates.

    Raises:
        ValueError: If the set is empty
    """
    if len(pixels) == 0:
        raise ValueError("nearest_point needs a non-empty pixel set")
    dx = pixels.cols.astype(np.float64) - p.x
    dy = pixels.rows.astype(np.float64) - p.y
    d2 = dx * dx + dy * dy
    index = int(np.argmin(d2))
    col, row = pixels.points[index]
    return Point2(x=float(col), y=float(row)), math.sqrt(float(d2[index]))


def _as_vector(v: Vector) -> Tuple[float, float]:
    if isinstance(v, Point2):
        return v.x, v.y
    vx, vy = (float(c) for c in np.asarray(v, dtype=np.float64).reshape(2))
    return vx, vy


def angular_difference(ref_dir: Vector, v: Vector) -> float:
    """Unsigned angle in [0, pi] between two direction vectors.

    Raises:
        ValueError: If either vector is zero
    """
    ux, uy = _as_vector(ref_dir)
    vx, vy = _as_vector(v)
    if (ux == 0 and uy == 0) or (vx == 0 and vy == 0):
        raise ValueError("angular_difference needs non-zero vectors")
    cross = ux * vy - uy * vx
    dot = ux * vx + uy * vy
    return math.atan2(abs(cross), dot)


__all__: List[str] = [
    "angular_difference",
    "bresenham",
    "contains_points",
    "nearest_point",
    "point_in_polygon",
    "rasterize_area",
    "rasterize_polyline",
    "rasterize_ring",
]
