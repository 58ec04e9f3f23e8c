"""
Confmap Confidence Models

This module defines the confidence map container and the parameters that
control ground-truth generation.
"""

from enum import Enum
from typing import Any, Dict

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class ThresholdMode(str, Enum):
    """How the margin-distance threshold is interpreted."""
    RELATIVE = "relative"  # tau times the calibration-to-area distance
    ABSOLUTE = "absolute"  # tau pixels


class ConfidenceFormula(str, Enum):
    """Ratio used to turn distances into confidence."""
    CORRECTED = "corrected"  # dist(area, margin) / dist(calibration, margin)
    PRINTED = "printed"      # dist(area, margin) / dist(calibration, area)


class GenerationParams(BaseModel):
    """Parameters of the angular-difference generator."""
    model_config = ConfigDict(frozen=True)

    distance_threshold: float = Field(3.0, gt=0, description="Margin search radius tau")
    threshold_mode: ThresholdMode = Field(ThresholdMode.RELATIVE, description="Interpretation of tau")
    formula: ConfidenceFormula = Field(ConfidenceFormula.CORRECTED, description="Confidence ratio")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "distance_threshold": self.distance_threshold,
            "threshold_mode": self.threshold_mode.value,
            "formula": self.formula.value,
        }


class BandPredictorParams(BaseModel):
    """Width of the distance-band baseline predictor."""
    model_config = ConfigDict(frozen=True)

    half_width: float = Field(..., gt=0, description="Distance from the trajectory at which confidence reaches 0")


class ConfidenceMap(BaseModel):
    """Row-major grid of confidence values in [0, 1]."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray = Field(..., description="(height, width) float64 array")

    @field_validator("values", mode="before")
    @classmethod
    def check_values(cls, v: Any) -> np.ndarray:
        array = np.array(v, dtype=np.float64, copy=True)
        if array.ndim != 2 or array.shape[0] == 0 or array.shape[1] == 0:
            raise ValueError(f"confidence map must be a non-empty 2-D grid, got shape {array.shape}")
        if not np.isfinite(array).all():
            raise ValueError("confidence values must be finite")
        if (array < 0).any() or (array > 1).any():
            raise ValueError("confidence values must lie in [0, 1]")
        array.setflags(write=False)
        return array

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @classmethod
    def zeros(cls, width: int, height: int) -> "ConfidenceMap":
        return cls(values=np.zeros((height, width)))

    def same_as(self, other: "ConfidenceMap") -> bool:
        """Bit-identical comparison."""
        return self.values.shape == other.values.shape and np.array_equal(self.values, other.values)
