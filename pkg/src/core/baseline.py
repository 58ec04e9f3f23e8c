"""
Confmap Baseline Predictors

Non-learned predictors that let the scoring pipeline run end to end: a
distance band around a trajectory for maps, and constant-direction
extrapolation for trajectories.
"""

from typing import Sequence, Union

import numpy as np
from scipy.ndimage import distance_transform_edt

from src.core.exceptions import GenerationError
from src.core.geometry import rasterize_polyline
from src.models.annotation import Trajectory
from src.models.confidence import BandPredictorParams, ConfidenceMap


def predict_map_from_trajectory(
    trajectory: Trajectory,
    width: int,
    height: int,
    params: BandPredictorParams,
) -> ConfidenceMap:
    """Confidence 1 - d / half_width, floored at 0, where d is the distance to the nearest trajectory pixel.

    Raises:
        ValueError: If the grid dimensions are not positive
        GenerationError: If the trajectory has no pixel on the grid
    """
    pixels = rasterize_polyline(trajectory, width, height)
    if len(pixels) == 0:
        raise GenerationError("trajectory rasterizes to no pixels")

    distance = distance_transform_edt(~pixels.to_mask())
    values = np.maximum(0.0, 1.0 - distance / float(params.half_width))
    return ConfidenceMap(values=values)


def extrapolate_trajectory(history: Union[Trajectory, Sequence[Sequence[float]]], n: int) -> Trajectory:
    """Continue the last direction of a history for n points at its mean step length.

    Args:
        history: Observed points, oldest first
        n: Number of points to produce

    Returns:
        Trajectory of the n future points, excluding the last observed one

    Raises:
        ValueError: If the history has fewer than 2 points, n < 2 or the last step has zero length
    """
    points = history.as_array() if isinstance(history, Trajectory) else np.asarray(history, dtype=np.float64).reshape(-1, 2)
    if len(points) < 2:
        raise ValueError(f"extrapolation needs at least 2 history points, got {len(points)}")
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError(f"extrapolation count must be an integer >= 2, got {n!r}")

    last_step = points[-1] - points[-2]
    last_length = float(np.hypot(*last_step))
    if last_length == 0.0:
        raise ValueError("last history step has zero length; direction is undefined")

    mean_step = float(np.hypot(*np.diff(points, axis=0).T).mean())
    direction = last_step / last_length
    offsets = np.arange(1, int(n) + 1, dtype=np.float64)[:, None] * mean_step
    return Trajectory.from_array(points[-1] + offsets * direction)


__all__ = ["extrapolate_trajectory", "predict_map_from_trajectory"]
