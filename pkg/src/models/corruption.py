"""
Confmap Corruption Models

This module defines the corruption kinds, the per-call corruption spec and the
RGB image container used by the robustness generator.
"""

from enum import Enum
from typing import Any, List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

MAX_SEED = 2 ** 64 - 1


class CorruptionCategory(str, Enum):
    NOISE = "Noise"
    BLUR = "Blur"
    WEATHER = "Weather"
    DIGITAL = "Digital"


class CorruptionKind(str, Enum):
    """The thirteen robustness corruptions, in report column order."""
    GAUSSIAN_NOISE = "gaussian-noise"
    SHOT_NOISE = "shot-noise"
    IMPULSE_NOISE = "impulse-noise"
    SPECKLE_NOISE = "speckle-noise"
    DEFOCUS_BLUR = "defocus-blur"
    MOTION_BLUR = "motion-blur"
    ZOOM_BLUR = "zoom-blur"
    FOG = "fog"
    BRIGHTNESS = "brightness"
    CONTRAST = "contrast"
    ELASTIC = "elastic"
    PIXELATE = "pixelate"
    JPEG = "jpeg"

    @property
    def category(self) -> CorruptionCategory:
        # Speckle sits with the blurs, following the robustness table layout
        return _CATEGORIES[self]

    @classmethod
    def parse(cls, name: str) -> "CorruptionKind":
        """Look up a kind by name, accepting underscores for dashes."""
        try:
            return cls(name.strip().lower().replace("_", "-"))
        except ValueError:
            known = ", ".join(kind.value for kind in cls)
            raise ValueError(f"unknown corruption kind '{name}' (expected one of: {known})") from None

    @classmethod
    def names(cls) -> List[str]:
        return [kind.value for kind in cls]


_CATEGORIES = {
    CorruptionKind.GAUSSIAN_NOISE: CorruptionCategory.NOISE,
    CorruptionKind.SHOT_NOISE: CorruptionCategory.NOISE,
    CorruptionKind.IMPULSE_NOISE: CorruptionCategory.NOISE,
    CorruptionKind.SPECKLE_NOISE: CorruptionCategory.BLUR,
    CorruptionKind.DEFOCUS_BLUR: CorruptionCategory.BLUR,
    CorruptionKind.MOTION_BLUR: CorruptionCategory.BLUR,
    CorruptionKind.ZOOM_BLUR: CorruptionCategory.BLUR,
    CorruptionKind.FOG: CorruptionCategory.WEATHER,
    CorruptionKind.BRIGHTNESS: CorruptionCategory.WEATHER,
    CorruptionKind.CONTRAST: CorruptionCategory.DIGITAL,
    CorruptionKind.ELASTIC: CorruptionCategory.DIGITAL,
    CorruptionKind.PIXELATE: CorruptionCategory.DIGITAL,
    CorruptionKind.JPEG: CorruptionCategory.DIGITAL,
}


class CorruptionSpec(BaseModel):
    """Kind, severity and seed of one corruption call."""
    model_config = ConfigDict(frozen=True)

    kind: CorruptionKind = Field(..., description="Corruption kind")
    severity: int = Field(..., ge=1, le=5, description="Severity level 1..5")
    seed: int = Field(0, ge=0, le=MAX_SEED, description="64-bit seed of the random stream")

    @field_validator("kind", mode="before")
    @classmethod
    def parse_kind(cls, v: Any) -> Any:
        if isinstance(v, str) and not isinstance(v, CorruptionKind):
            return CorruptionKind.parse(v)
        return v

    @field_validator("severity", mode="before")
    @classmethod
    def check_severity_type(cls, v: Any) -> Any:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError("severity must be an integer")
        return v


class RGBImage(BaseModel):
    """8-bit RGB image stored as a (height, width, 3) array."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    data: np.ndarray = Field(..., description="(height, width, 3) uint8 array")

    @field_validator("data", mode="before")
    @classmethod
    def check_data(cls, v: Any) -> np.ndarray:
        array = np.asarray(v)
        if array.ndim != 3 or array.shape[2] != 3 or array.shape[0] == 0 or array.shape[1] == 0:
            raise ValueError(f"RGB image must have shape (height, width, 3), got {array.shape}")
        if array.dtype != np.uint8:
            raise ValueError(f"RGB image must be 8-bit, got {array.dtype}")
        array = np.array(array, copy=True)
        array.setflags(write=False)
        return array

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    def to_bytes(self) -> bytes:
        return self.data.tobytes()
