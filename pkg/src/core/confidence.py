"""
Confmap Confidence Generator

This module turns an annotation record into a ground-truth confidence map:
1 on the dissection trajectory, 0 on and outside the safety margin, and for
every other pixel of the dissection area the ratio of its distance to a
margin pixel over the calibration-point distance to that margin pixel.

The margin pixel is the one best aligned with the ray cast from the
calibration point (nearest trajectory pixel) through the area pixel,
restricted to a search radius. Alignment is ranked by the key
(u . v) |u . v| / |v|^2, with u the calibration-to-area ray and v the
area-to-margin ray; for a fixed u this key decreases strictly with the angle
between u and v, so the argmax is the minimum angular difference. Pixel
coordinates are small integers, so the dot product, its square and |v|^2 are
exact in float64 and the key costs a single rounded division. This keeps the
compiled kernel and the exhaustive oracle in exact agreement.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple, Optional

import numpy as np
from numba import njit

from src.core.exceptions import GenerationError
from src.core.geometry import nearest_point, rasterize_area, rasterize_polyline, rasterize_ring
from src.core.logger import logger
from src.models.annotation import AnnotationRecord, Point2
from src.models.confidence import ConfidenceFormula, ConfidenceMap, GenerationParams, ThresholdMode
from src.models.geometry import PixelSet

# Below this many area pixels the kernel runs on the calling thread
MIN_PIXELS_PER_WORKER = 4096


def squared_radius(d2_tq: float, tau2: float, relative: bool) -> float:
    """Squared margin search radius for one area pixel."""
    if relative:
        return tau2 * d2_tq
    return tau2


def confidence_ratio(d2_qe: float, d2_te: float, d2_tq: float, printed: bool) -> float:
    """Confidence from squared distances, clamped to [0, 1].

    Args:
        d2_qe: Squared distance area pixel -> margin pixel
        d2_te: Squared distance calibration pixel -> margin pixel
        d2_tq: Squared distance calibration pixel -> area pixel
        printed: Use dist(q, e) / dist(t, q) instead of dist(q, e) / dist(t, e)
    """
    denominator = d2_tq if printed else d2_te
    if denominator == 0.0:
        return 1.0
    value = math.sqrt(d2_qe) / math.sqrt(denominator)
    if value > 1.0:
        return 1.0
    return value


_squared_radius = njit(cache=True, nogil=True)(squared_radius)
_confidence_ratio = njit(cache=True, nogil=True)(confidence_ratio)


@njit(cache=True, nogil=True)
def _confidence_kernel(q_cols, q_rows, t_cols, t_rows, m_cols, m_rows, tau2, relative, naive, printed, out):
    # Coordinates are float64 holding exact integers
    t_d2 = np.empty(t_cols.shape[0])
    m_d2 = np.empty(m_cols.shape[0])
    keys = np.empty(m_cols.shape[0])
    for i in range(q_cols.shape[0]):
        qc = q_cols[i]
        qr = q_rows[i]

        # Calibration point: first nearest trajectory pixel
        for k in range(t_cols.shape[0]):
            dc = t_cols[k] - qc
            dr = t_rows[k] - qr
            t_d2[k] = dc * dc + dr * dr
        best_t = np.argmin(t_d2)
        tc = t_cols[best_t]
        tr = t_rows[best_t]
        d2_tq = t_d2[best_t]
        uc = qc - tc
        ur = qr - tr
        radius2 = _squared_radius(d2_tq, tau2, relative)

        # Branch-free so the loop vectorizes; out-of-radius pixels get -inf
        for k in range(m_cols.shape[0]):
            vc = m_cols[k] - qc
            vr = m_rows[k] - qr
            d2 = vc * vc + vr * vr
            dot = uc * vc + ur * vr
            m_d2[k] = d2
            keys[k] = dot * abs(dot) / d2 if d2 <= radius2 else -np.inf

        e = -1
        if not naive:
            e = np.argmax(keys)
            if keys[e] == -np.inf:
                e = -1
        if e < 0:
            e = np.argmin(m_d2)

        ec = m_cols[e]
        er = m_rows[e]
        d2_qe = m_d2[e]
        d2_te = (ec - tc) * (ec - tc) + (er - tr) * (er - tr)
        out[i] = _confidence_ratio(d2_qe, d2_te, d2_tq, printed)


class _Scene(NamedTuple):
    """Rasterized annotation ready for per-pixel search."""
    trajectory: PixelSet
    ring: PixelSet
    values: np.ndarray    # 1 on trajectory pixels, 0 elsewhere
    area_cols: np.ndarray  # pixels needing the search, row-major
    area_rows: np.ndarray


def _prepare(record: AnnotationRecord) -> _Scene:
    width, height = record.width, record.height
    trajectory = rasterize_polyline(record.trajectory, width, height)
    if len(trajectory) == 0:
        raise GenerationError(f"frame '{record.frame_id}': trajectory rasterizes to no pixels")
    area = rasterize_area(record.margin, width, height)
    if area.is_empty():
        raise GenerationError(f"frame '{record.frame_id}': dissection area contains no pixel centres")
    ring = rasterize_ring(record.margin, width, height)

    on_trajectory = trajectory.to_mask()
    values = np.zeros((height, width), dtype=np.float64)
    values[on_trajectory] = 1.0
    # Trajectory rule first, then margin ring and exterior stay 0
    interior = area.bits & ~on_trajectory & ~ring.to_mask()
    area_rows, area_cols = np.nonzero(interior)

    return _Scene(
        trajectory=trajectory,
        ring=ring,
        values=values,
        area_cols=area_cols.astype(np.int64),
        area_rows=area_rows.astype(np.int64),
    )


def _run(record: AnnotationRecord, params: GenerationParams, naive: bool, workers: Optional[int]) -> ConfidenceMap:
    scene = _prepare(record)
    n = len(scene.area_cols)
    out = np.empty(n, dtype=np.float64)

    t_cols = np.ascontiguousarray(scene.trajectory.cols, dtype=np.float64)
    t_rows = np.ascontiguousarray(scene.trajectory.rows, dtype=np.float64)
    m_cols = np.ascontiguousarray(scene.ring.cols, dtype=np.float64)
    m_rows = np.ascontiguousarray(scene.ring.rows, dtype=np.float64)
    q_cols = scene.area_cols.astype(np.float64)
    q_rows = scene.area_rows.astype(np.float64)
    tau2 = float(params.distance_threshold) * float(params.distance_threshold)
    relative = params.threshold_mode == ThresholdMode.RELATIVE
    printed = params.formula == ConfidenceFormula.PRINTED

    def run_slice(bounds):
        start, stop = bounds
        _confidence_kernel(
            q_cols[start:stop], q_rows[start:stop],
            t_cols, t_rows, m_cols, m_rows,
            tau2, relative, naive, printed,
            out[start:stop],
        )

    workers = max(1, workers or 1)
    if workers == 1 or n < MIN_PIXELS_PER_WORKER * 2:
        run_slice((0, n))
    else:
        edges = np.linspace(0, n, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as executor:
            list(executor.map(run_slice, zip(edges[:-1], edges[1:])))

    values = scene.values
    values[scene.area_rows, scene.area_cols] = out
    logger.debug(
        f"Generated frame '{record.frame_id}': {n} area pixels, "
        f"{len(scene.trajectory)} trajectory pixels, {len(scene.ring)} margin pixels"
    )
    return ConfidenceMap(values=values)


def generate(record: AnnotationRecord, params: Optional[GenerationParams] = None, workers: Optional[int] = None) -> ConfidenceMap:
    """Generate a confidence map with the angular-difference margin search.

    Args:
        record: Validated annotation record
        params: Generation parameters (defaults: relative threshold 3, corrected ratio)
        workers: Threads splitting the area pixels; output does not depend on it

    Returns:
        ConfidenceMap at annotation resolution

    Raises:
        GenerationError: If the trajectory or the dissection area rasterize to nothing
    """
    return _run(record, params or GenerationParams(), naive=False, workers=workers)


def generate_naive(record: AnnotationRecord, params: Optional[GenerationParams] = None, workers: Optional[int] = None) -> ConfidenceMap:
    """Generate a confidence map using the Euclidean-nearest margin pixel.

    Kept to show the opposite-side failure of a plain distance search. Only
    ``params.formula`` is used.
    """
    return _run(record, params or GenerationParams(), naive=True, workers=workers)


def oracle_generate(record: AnnotationRecord, params: Optional[GenerationParams] = None) -> ConfidenceMap:
    """Exhaustive reference implementation of generate.

    Scans every margin pixel for every area pixel without pruning or
    compilation. generate must match it bit for bit.
    """
    params = params or GenerationParams()
    scene = _prepare(record)
    values = scene.values.copy()

    m_cols = scene.ring.cols.astype(np.int64)
    m_rows = scene.ring.rows.astype(np.int64)
    tau2 = float(params.distance_threshold) * float(params.distance_threshold)
    relative = params.threshold_mode == ThresholdMode.RELATIVE
    printed = params.formula == ConfidenceFormula.PRINTED

    for q_col, q_row in zip(scene.area_cols.tolist(), scene.area_rows.tolist()):
        calibration, _ = nearest_point(Point2(x=q_col, y=q_row), scene.trajectory)
        t_col, t_row = int(calibration.x), int(calibration.y)
        u_col, u_row = q_col - t_col, q_row - t_row
        d2_tq = u_col * u_col + u_row * u_row

        v_cols = m_cols - q_col
        v_rows = m_rows - q_row
        d2 = (v_cols * v_cols + v_rows * v_rows).astype(np.float64)
        radius2 = squared_radius(float(d2_tq), tau2, relative)

        candidates = np.flatnonzero(d2 <= radius2)
        if candidates.size:
            dots = (u_col * v_cols[candidates] + u_row * v_rows[candidates]).astype(np.float64)
            keys = dots * np.abs(dots) / d2[candidates]
            e = int(candidates[np.argmax(keys)])
        else:
            e = int(np.argmin(d2))

        e_col, e_row = int(m_cols[e]), int(m_rows[e])
        d2_qe = (e_col - q_col) ** 2 + (e_row - q_row) ** 2
        d2_te = (e_col - t_col) ** 2 + (e_row - t_row) ** 2
        values[q_row, q_col] = confidence_ratio(float(d2_qe), float(d2_te), float(d2_tq), printed)

    return ConfidenceMap(values=values)


__all__ = [
    "confidence_ratio",
    "generate",
    "generate_naive",
    "oracle_generate",
    "squared_radius",
]
