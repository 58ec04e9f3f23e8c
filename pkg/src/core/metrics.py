"""
Confmap Metrics Module

Map regression scores (MAE, MSE and the outside-weighted MSE) on the 0-255
scale, trajectory displacement scores (ADE, FDE, discrete Frechet distance)
and the aggregations reported by the batch commands.
"""

import math
from collections import defaultdict
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from numba import njit
from scipy.spatial.distance import cdist

from src.core.annotations import resample_trajectory
from src.models.annotation import Trajectory
from src.models.confidence import ConfidenceMap
from src.models.corruption import CorruptionKind
from src.models.scores import MapScore, RobustnessSummary, TrajScore

SCALE = 255.0
DEFAULT_W_OUT = 10.0

TrajectoryLike = Union[Trajectory, Sequence[Sequence[float]], np.ndarray]


def _check_same_shape(pred: ConfidenceMap, gt: ConfidenceMap) -> None:
    if pred.values.shape != gt.values.shape:
        raise ValueError(
            f"map dimensions differ: prediction {pred.width}x{pred.height}, ground truth {gt.width}x{gt.height}"
        )


def difference_map(pred: ConfidenceMap, gt: ConfidenceMap) -> np.ndarray:
    """Signed per-pixel difference pred - gt on the [0, 1] scale."""
    _check_same_shape(pred, gt)
    return pred.values - gt.values


def score_map(pred: ConfidenceMap, gt: ConfidenceMap, w_out: float = DEFAULT_W_OUT) -> MapScore:
    """Score a predicted confidence map against ground truth.

    Pixels whose ground-truth confidence is 0 (on or outside the safety
    margin) are weighted by ``w_out`` in the weighted MSE; all others by 1.

    Args:
        pred: Predicted map
        gt: Ground-truth map
        w_out: Weight of zero-confidence ground-truth pixels

    Returns:
        MapScore on the 0-255 scale

    Raises:
        ValueError: If dimensions differ or w_out is not positive
    """
    _check_same_shape(pred, gt)
    if not w_out > 0:
        raise ValueError(f"w_out must be positive, got {w_out}")

    diff = (pred.values - gt.values) * SCALE
    squared = diff * diff
    weights = np.where(gt.values == 0.0, float(w_out), 1.0)
    return MapScore(
        mae=float(np.abs(diff).mean()),
        mse=float(squared.mean()),
        weighted_mse=float((weights * squared).mean()),
        pixels=int(diff.size),
    )


def _as_points(trajectory: TrajectoryLike) -> np.ndarray:
    if isinstance(trajectory, Trajectory):
        return trajectory.as_array()
    return np.asarray(trajectory, dtype=np.float64).reshape(-1, 2)


def ade(pred: TrajectoryLike, gt: TrajectoryLike) -> float:
    """Mean pointwise Euclidean distance.

    Raises:
        ValueError: If the point counts differ
    """
    p, g = _as_points(pred), _as_points(gt)
    if len(p) != len(g):
        raise ValueError(f"ADE needs equal point counts, got {len(p)} and {len(g)}; resample first")
    if len(p) == 0:
        raise ValueError("ADE needs non-empty trajectories")
    return float(np.hypot(*(p - g).T).mean())


def fde(pred: TrajectoryLike, gt: TrajectoryLike) -> float:
    """Euclidean distance between the final points."""
    p, g = _as_points(pred), _as_points(gt)
    if len(p) == 0 or len(g) == 0:
        raise ValueError("FDE needs non-empty trajectories")
    return float(math.hypot(*(p[-1] - g[-1])))


@njit(cache=True)
def _coupling_table(dist):
    p, q = dist.shape
    table = np.empty((p, q), dtype=np.float64)
    table[0, 0] = dist[0, 0]
    for i in range(1, p):
        table[i, 0] = max(table[i - 1, 0], dist[i, 0])
    for j in range(1, q):
        table[0, j] = max(table[0, j - 1], dist[0, j])
    for i in range(1, p):
        for j in range(1, q):
            table[i, j] = max(min(table[i - 1, j], table[i, j - 1], table[i - 1, j - 1]), dist[i, j])
    return table


def frechet(pred: TrajectoryLike, gt: TrajectoryLike) -> float:
    """Discrete Frechet distance between two point sequences.

    Raises:
        ValueError: If either sequence is empty
    """
    p, g = _as_points(pred), _as_points(gt)
    if len(p) == 0 or len(g) == 0:
        raise ValueError("Frechet distance needs non-empty trajectories")
    return float(_coupling_table(cdist(p, g))[-1, -1])


def score_trajectory(pred: Trajectory, gt: Trajectory, resample_n: Optional[int] = None) -> TrajScore:
    """ADE, FDE and Frechet distance, optionally after resampling both sides to resample_n points."""
    if resample_n is not None:
        pred = resample_trajectory(pred, resample_n)
        gt = resample_trajectory(gt, resample_n)
    return TrajScore(ade=ade(pred, gt), fde=fde(pred, gt), fd=frechet(pred, gt))


def aggregate_map_scores(scores: Iterable[MapScore]) -> Dict[str, Any]:
    """Pooled (every pixel weighted equally) and per-image-mean map scores.

    Frames are summed in the order given; callers pass them sorted by
    frame_id so reports are reproducible.
    """
    scores = list(scores)
    if not scores:
        return {"frames": 0, "pooled": None, "per_image_mean": None}

    total = sum(score.pixels for score in scores)
    pooled = {
        name: math.fsum(getattr(score, name) * score.pixels for score in scores) / total
        for name in ("mae", "mse", "weighted_mse")
    }
    pooled["pixels"] = total
    per_image = {
        name: math.fsum(getattr(score, name) for score in scores) / len(scores)
        for name in ("mae", "mse", "weighted_mse")
    }
    return {"frames": len(scores), "pooled": pooled, "per_image_mean": per_image}


def aggregate_traj_scores(scores: Iterable[TrajScore]) -> Dict[str, Any]:
    """Mean trajectory scores over frames.

    Every frame carries the same number of points after resampling, so the
    pooled and the per-image means coincide; both keys are emitted so map
    and trajectory reports share one layout.
    """
    scores = list(scores)
    if not scores:
        return {"frames": 0, "pooled": None, "per_image_mean": None}
    mean = {
        name: math.fsum(getattr(score, name) for score in scores) / len(scores)
        for name in ("ade", "fde", "fd")
    }
    return {"frames": len(scores), "pooled": dict(mean), "per_image_mean": mean}


def summarize_robustness(table: Mapping[Tuple[Union[CorruptionKind, str], int], float]) -> RobustnessSummary:
    """Mean MAE per corruption kind, per category and over every cell.

    Args:
        table: MAE keyed by (kind, severity)

    Raises:
        ValueError: If the table is empty or names an unknown kind
    """
    if not table:
        raise ValueError("robustness table is empty")

    by_kind: Dict[CorruptionKind, List[float]] = defaultdict(list)
    # fsum is exactly rounded, so insertion order does not change the means
    for (kind, _severity), mae in table.items():
        by_kind[_kind_of(kind)].append(float(mae))

    by_category: Dict[str, List[float]] = defaultdict(list)
    per_kind: Dict[str, float] = {}
    for kind in CorruptionKind:
        if kind not in by_kind:
            continue
        values = by_kind[kind]
        per_kind[kind.value] = math.fsum(values) / len(values)
        by_category[kind.category.value].extend(values)

    everything = [value for values in by_kind.values() for value in values]
    return RobustnessSummary(
        per_kind=per_kind,
        per_category={name: math.fsum(values) / len(values) for name, values in by_category.items()},
        overall=math.fsum(everything) / len(everything),
    )


def _kind_of(kind: Union[CorruptionKind, str]) -> CorruptionKind:
    return kind if isinstance(kind, CorruptionKind) else CorruptionKind.parse(kind)


__all__ = [
    "ade",
    "aggregate_map_scores",
    "aggregate_traj_scores",
    "difference_map",
    "fde",
    "frechet",
    "score_map",
    "score_trajectory",
    "summarize_robustness",
]
