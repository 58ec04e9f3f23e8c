"""
Confmap Image Service

This module converts confidence maps to and from 8-bit grayscale PNG and reads
and writes the RGB PNG images used for corruption runs.
"""

import io
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from src.core.exceptions import ImageFormatError
from src.models.confidence import ConfidenceMap
from src.models.corruption import RGBImage

# Modes converted to RGB on load
_RGB_CONVERTIBLE = {"L", "LA", "P", "RGBA", "RGB"}


def quantize(values: np.ndarray) -> np.ndarray:
    """Confidence in [0, 1] to bytes, rounding halves up."""
    return np.floor(np.asarray(values, dtype=np.float64) * 255.0 + 0.5).astype(np.uint8)


def encode_png(confidence: ConfidenceMap) -> bytes:
    """Encode a confidence map as an 8-bit grayscale PNG storing round(255 * v)."""
    buffer = io.BytesIO()
    Image.fromarray(quantize(confidence.values)).save(buffer, format="PNG")
    return buffer.getvalue()


def _open(raw: bytes) -> Image.Image:
    try:
        image = Image.open(io.BytesIO(raw))
        image.load()
    except (UnidentifiedImageError, OSError, SyntaxError) as e:
        raise ImageFormatError(f"not a readable image: {e}") from e
    if image.format != "PNG":
        raise ImageFormatError(f"expected PNG, got {image.format}")
    return image


def decode_png(raw: bytes) -> ConfidenceMap:
    """Decode an 8-bit grayscale PNG into a confidence map (byte / 255).

    Raises:
        ImageFormatError: If the PNG is not 8-bit single-channel grayscale
    """
    image = _open(raw)
    if image.mode != "L":
        raise ImageFormatError(f"confidence maps must be 8-bit grayscale PNG, got mode {image.mode}")
    return ConfidenceMap(values=np.asarray(image, dtype=np.float64) / 255.0)


def load_map_png(path: Union[str, Path]) -> ConfidenceMap:
    return decode_png(Path(path).read_bytes())


def decode_rgb_png(raw: bytes) -> RGBImage:
    """Decode a PNG into an RGB image; grayscale, palette and alpha inputs are converted.

    Raises:
        ImageFormatError: If the PNG uses a mode that cannot be converted
    """
    image = _open(raw)
    if image.mode not in _RGB_CONVERTIBLE:
        raise ImageFormatError(f"unsupported PNG mode {image.mode} for RGB input")
    return RGBImage(data=np.asarray(image.convert("RGB"), dtype=np.uint8))


def encode_rgb_png(image: RGBImage) -> bytes:
    buffer = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(image.data)).save(buffer, format="PNG")
    return buffer.getvalue()


def load_rgb_png(path: Union[str, Path]) -> RGBImage:
    return decode_rgb_png(Path(path).read_bytes())


def save_rgb_png(image: RGBImage, path: Union[str, Path]) -> None:
    Path(path).write_bytes(encode_rgb_png(image))
