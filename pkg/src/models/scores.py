"""
Confmap Score Models

This module defines Pydantic models for map and trajectory scores and for the
JSON run report written by the batch commands.
"""

import math
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

TOOL_VERSION = "1.0.0"
REPORT_VERSION = 1


class MapScore(BaseModel):
    """Map regression errors on the 0-255 scale."""
    model_config = ConfigDict(frozen=True)

    mae: float = Field(..., ge=0, description="Mean absolute error")
    mse: float = Field(..., ge=0, description="Mean squared error")
    weighted_mse: float = Field(..., ge=0, description="MSE weighted by w_out outside the safety margin")
    pixels: int = Field(..., ge=0, description="Number of pixels scored")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mae": self.mae,
            "mse": self.mse,
            "weighted_mse": self.weighted_mse,
            "pixels": self.pixels,
        }


class TrajScore(BaseModel):
    """Trajectory displacement errors in pixels."""
    model_config = ConfigDict(frozen=True)

    ade: float = Field(..., ge=0, description="Average displacement error")
    fde: float = Field(..., ge=0, description="Final displacement error")
    fd: float = Field(..., ge=0, description="Discrete Frechet distance")

    def to_dict(self) -> Dict[str, Any]:
        return {"ade": self.ade, "fde": self.fde, "fd": self.fd}


class RobustnessSummary(BaseModel):
    """Mean MAE per corruption kind, per category and overall."""
    model_config = ConfigDict(frozen=True)

    per_kind: Dict[str, float] = Field(default_factory=dict)
    per_category: Dict[str, float] = Field(default_factory=dict)
    overall: float = Field(..., ge=0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "per_kind": dict(self.per_kind),
            "per_category": dict(self.per_category),
            "overall": self.overall,
        }


class FrameEntry(BaseModel):
    """Scores for one frame of a run."""
    frame_id: str
    scores: Dict[str, Any] = Field(default_factory=dict)


class RunReport(BaseModel):
    """Machine-readable result of a batch command.

    Carries no timestamps so identical runs serialize to identical bytes.
    """
    report_version: int = Field(REPORT_VERSION)
    tool_version: str = Field(TOOL_VERSION)
    command: str = Field(..., description="Subcommand that produced the report")
    config: Dict[str, Any] = Field(default_factory=dict, description="Echo of every parameter used")
    per_frame: List[FrameEntry] = Field(default_factory=list)
    aggregate: Dict[str, Any] = Field(default_factory=dict)
    missing: Optional[List[str]] = Field(None, description="Frames without a counterpart")
    passed: Optional[bool] = Field(None, description="Verdict of pass/fail commands")

    @model_validator(mode="after")
    def sort_frames(self) -> "RunReport":
        self.per_frame = sorted(self.per_frame, key=lambda entry: entry.frame_id)
        if self.missing is not None:
            self.missing = sorted(self.missing)
        return self

    def to_dict(self) -> Dict[str, Any]:
        """Convert the report to plain JSON types; infinities become strings."""
        data: Dict[str, Any] = {
            "report_version": self.report_version,
            "tool_version": self.tool_version,
            "command": self.command,
            "config": self.config,
            "per_frame": [{"frame_id": e.frame_id, "scores": e.scores} for e in self.per_frame],
            "aggregate": self.aggregate,
        }
        if self.missing is not None:
            data["missing"] = self.missing
        if self.passed is not None:
            data["passed"] = self.passed
        return _json_safe(data)


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value
