"""
Confmap Geometry Models

Pixel-level containers produced by rasterization.
"""

from typing import Any, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class PixelMask(BaseModel):
    """Row-major boolean grid marking pixels inside the dissection area."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    width: int = Field(..., gt=0)
    height: int = Field(..., gt=0)
    bits: np.ndarray = Field(..., description="(height, width) boolean array")

    @field_validator("bits", mode="before")
    @classmethod
    def coerce_bits(cls, v: Any) -> np.ndarray:
        return _readonly(np.array(v, dtype=bool, copy=True))

    @model_validator(mode="after")
    def check_shape(self) -> "PixelMask":
        if self.bits.shape != (self.height, self.width):
            raise ValueError(
                f"mask has shape {self.bits.shape}, expected {(self.height, self.width)}"
            )
        return self

    def count(self) -> int:
        return int(self.bits.sum())

    def is_empty(self) -> bool:
        return not self.bits.any()


class PixelSet(BaseModel):
    """Ordered, duplicate-free set of integer pixels given as (col, row)."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    width: int = Field(..., gt=0)
    height: int = Field(..., gt=0)
    points: np.ndarray = Field(..., description="(N, 2) int64 array of (col, row)")

    @field_validator("points", mode="before")
    @classmethod
    def coerce_points(cls, v: Any) -> np.ndarray:
        return _readonly(np.array(v, dtype=np.int64, copy=True).reshape(-1, 2))

    @model_validator(mode="after")
    def check_members(self) -> "PixelSet":
        cols, rows = self.points[:, 0], self.points[:, 1]
        if ((cols < 0) | (cols >= self.width) | (rows < 0) | (rows >= self.height)).any():
            raise ValueError("pixel set members must lie within the grid")
        if len(np.unique(self.points, axis=0)) != len(self.points):
            raise ValueError("pixel set members must be unique")
        return self

    @property
    def cols(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def rows(self) -> np.ndarray:
        return self.points[:, 1]

    def to_mask(self) -> np.ndarray:
        """Membership as a (height, width) boolean array."""
        mask = np.zeros((self.height, self.width), dtype=bool)
        mask[self.rows, self.cols] = True
        return mask

    def to_list(self) -> List[Tuple[int, int]]:
        return [(int(c), int(r)) for c, r in self.points]

    def __len__(self) -> int:
        return len(self.points)
