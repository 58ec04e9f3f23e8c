"""
Confmap Annotation Models

This module defines Pydantic models for annotated frames: the dissection
trajectory polyline, the safety-margin ring and the record tying them to an
image size. Records validate every invariant on construction and are frozen.
"""

import math
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def _as_coordinate(value: Any, axis: str) -> float:
    # bool is an int subclass but never a coordinate
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{axis} must be a number, got {type(value).__name__}")
    return float(value)


class Point2(BaseModel):
    """A 2-D position in pixel coordinates."""
    model_config = ConfigDict(frozen=True)

    x: float = Field(..., description="Horizontal pixel coordinate")
    y: float = Field(..., description="Vertical pixel coordinate")

    @model_validator(mode="before")
    @classmethod
    def accept_pair(cls, data: Any) -> Any:
        """Accept [x, y] pairs as written in annotation files."""
        if isinstance(data, (list, tuple)):
            if len(data) != 2:
                raise ValueError(f"point must have 2 coordinates, got {len(data)}")
            return {"x": _as_coordinate(data[0], "x"), "y": _as_coordinate(data[1], "y")}
        if isinstance(data, dict):
            return {
                "x": _as_coordinate(data.get("x"), "x"),
                "y": _as_coordinate(data.get("y"), "y"),
            }
        return data

    @field_validator("x", "y")
    @classmethod
    def must_be_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("coordinates must be finite")
        return v

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x, self.y)


def _points_array(points: Sequence[Point2]) -> np.ndarray:
    return np.array([(p.x, p.y) for p in points], dtype=np.float64).reshape(-1, 2)


class Trajectory(BaseModel):
    """Ordered dissection-trajectory polyline."""
    model_config = ConfigDict(frozen=True)

    points: Tuple[Point2, ...] = Field(..., description="Polyline vertices in traversal order")

    @model_validator(mode="before")
    @classmethod
    def accept_sequence(cls, data: Any) -> Any:
        """Accept a bare sequence of points."""
        if isinstance(data, (list, tuple, np.ndarray)):
            return {"points": [list(p) if isinstance(p, np.ndarray) else p for p in data]}
        return data

    @field_validator("points")
    @classmethod
    def check_polyline(cls, v: Tuple[Point2, ...]) -> Tuple[Point2, ...]:
        if len(v) < 2:
            raise ValueError("trajectory length ≥ 2")
        for index in range(1, len(v)):
            if v[index] == v[index - 1]:
                raise ValueError(f"consecutive trajectory points {index - 1} and {index} coincide")
        return v

    @classmethod
    def from_array(cls, array: Any) -> "Trajectory":
        """Build a trajectory from an (N, 2) array-like."""
        data = np.asarray(array, dtype=np.float64).reshape(-1, 2)
        return cls(points=tuple(Point2(x=float(x), y=float(y)) for x, y in data))

    def as_array(self) -> np.ndarray:
        """Vertices as an (N, 2) float64 array."""
        return _points_array(self.points)

    def arc_length(self) -> float:
        """Total polyline length."""
        segments = np.diff(self.as_array(), axis=0)
        return float(np.hypot(segments[:, 0], segments[:, 1]).sum())

    def to_list(self) -> List[List[float]]:
        return [[p.x, p.y] for p in self.points]

    def __len__(self) -> int:
        return len(self.points)


class SafetyMargin(BaseModel):
    """Closed ring bounding the dissection area; the last vertex joins the first."""
    model_config = ConfigDict(frozen=True)

    vertices: Tuple[Point2, ...] = Field(..., description="Ring vertices without repeating the first")

    @model_validator(mode="before")
    @classmethod
    def accept_sequence(cls, data: Any) -> Any:
        """Accept a bare sequence of vertices."""
        if isinstance(data, (list, tuple, np.ndarray)):
            return {"vertices": [list(p) if isinstance(p, np.ndarray) else p for p in data]}
        return data

    @field_validator("vertices")
    @classmethod
    def check_ring(cls, v: Tuple[Point2, ...]) -> Tuple[Point2, ...]:
        if len(v) < 3:
            raise ValueError("safety margin length ≥ 3")
        ring = _points_array(v)
        x, y = ring[:, 0], ring[:, 1]
        # Shoelace; self-touching rings are fine as long as something is enclosed
        area = 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
        if area == 0.0:
            raise ValueError("safety margin must enclose a non-zero area")
        return v

    def as_array(self) -> np.ndarray:
        """Vertices as an (N, 2) float64 array."""
        return _points_array(self.vertices)

    def to_list(self) -> List[List[float]]:
        return [[p.x, p.y] for p in self.vertices]

    def __len__(self) -> int:
        return len(self.vertices)


class AnnotationRecord(BaseModel):
    """One annotated frame: trajectory, safety margin and image size."""
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    frame_id: str = Field(..., description="Frame identifier, also used as output file stem")
    width: int = Field(..., gt=0, description="Image width in pixels")
    height: int = Field(..., gt=0, description="Image height in pixels")
    trajectory: Trajectory = Field(..., description="Dissection trajectory")
    margin: SafetyMargin = Field(..., alias="safety_margin", description="Safety-margin ring")

    @field_validator("frame_id", mode="before")
    @classmethod
    def check_frame_id(cls, v: Any) -> Any:
        if not isinstance(v, str):
            raise ValueError("frame_id must be a string")
        if not v.strip():
            raise ValueError("frame_id must not be empty")
        if any(sep in v for sep in ("/", "\\")) or v in (".", ".."):
            raise ValueError("frame_id must not contain path separators")
        return v

    @field_validator("width", "height", mode="before")
    @classmethod
    def check_integer(cls, v: Any) -> Any:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError("image dimensions must be integers")
        return v

    @model_validator(mode="after")
    def check_geometry(self) -> "AnnotationRecord":
        """Check grid bounds and that the trajectory stays within the margin."""
        from src.core.geometry import contains_points

        for name, coords in (("trajectory", self.trajectory.as_array()), ("safety_margin", self.margin.as_array())):
            xs, ys = coords[:, 0], coords[:, 1]
            outside = (xs < 0) | (xs >= self.width) | (ys < 0) | (ys >= self.height)
            if outside.any():
                index = int(np.flatnonzero(outside)[0])
                raise ValueError(
                    f"{name} point {index} ({xs[index]}, {ys[index]}) lies outside "
                    f"the {self.width}x{self.height} image"
                )

        traj = self.trajectory.as_array()
        inside = contains_points(traj[:, 0], traj[:, 1], self.margin)
        if not inside.all():
            index = int(np.flatnonzero(~inside)[0])
            raise ValueError(
                f"trajectory point {index} ({traj[index, 0]}, {traj[index, 1]}) "
                "lies outside the safety margin"
            )
        return self

    def to_json_dict(self) -> Dict[str, Any]:
        """Convert the record to the on-disk annotation schema."""
        return {
            "frame_id": self.frame_id,
            "width": self.width,
            "height": self.height,
            "trajectory": self.trajectory.to_list(),
            "safety_margin": self.margin.to_list(),
        }
