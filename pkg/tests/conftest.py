"""
Shared fixtures: synthetic band and U-shaped annotations, random star-shaped
annotations and a structured RGB test image.
"""

import json
import math
import os
from pathlib import Path
from typing import Callable, Iterable, List

import numpy as np
import pytest

from src.core.annotations import serialize_annotations
from src.core.logger import setup_logger
from src.models.annotation import AnnotationRecord
from src.models.config import AppConfig
from src.models.corruption import RGBImage


def band_record(
    width: int,
    height: int,
    centre: int,
    half_width: int,
    vertical: bool = False,
    frame_id: str = "band",
) -> AnnotationRecord:
    """Straight trajectory across the whole image inside a rectangle of the given half width.

    The confidence at distance d from the trajectory is 1 - |d| / half_width.
    """
    if vertical:
        trajectory = [[centre, 0], [centre, height - 1]]
        margin = [
            [centre - half_width, 0],
            [centre + half_width, 0],
            [centre + half_width, height - 1],
            [centre - half_width, height - 1],
        ]
    else:
        trajectory = [[0, centre], [width - 1, centre]]
        margin = [
            [0, centre - half_width],
            [width - 1, centre - half_width],
            [width - 1, centre + half_width],
            [0, centre + half_width],
        ]
    return AnnotationRecord(
        frame_id=frame_id,
        width=width,
        height=height,
        trajectory=trajectory,
        safety_margin=margin,
    )


def u_record(frame_id: str = "u-shape") -> AnnotationRecord:
    """U-shaped margin with the trajectory running down both arms.

    Inside each arm the inner wall is closer than the outer wall, but it lies
    on the far side of the trajectory.
    """
    return AnnotationRecord(
        frame_id=frame_id,
        width=100,
        height=100,
        trajectory=[[32, 90], [32, 25], [68, 25], [68, 90]],
        safety_margin=[[10, 10], [90, 10], [90, 90], [60, 90], [60, 40], [40, 40], [40, 90], [10, 90]],
    )


def random_record(seed: int, size: int, frame_id: str = None) -> AnnotationRecord:
    """Random star-shaped margin with a short trajectory near its centre."""
    rng = np.random.default_rng(seed)
    decimals = seed % 2
    k = int(rng.integers(5, 10))
    cx, cy = size / 2 + rng.uniform(-0.05, 0.05, 2) * size
    angles = 2 * np.pi * (np.arange(k) + rng.uniform(-0.3, 0.3, k)) / k
    radii = rng.uniform(0.25, 0.4, k) * size
    margin = np.round(np.column_stack([cx + radii * np.cos(angles), cy + radii * np.sin(angles)]), decimals)

    # Stays inside: the polygon contains the disc of radius min(radii) * cos(max gap / 2)
    reach = 0.45 * radii.min()
    count = int(rng.integers(2, 5))
    points: List[List[float]] = []
    while len(points) < count:
        r = reach * math.sqrt(rng.uniform())
        a = rng.uniform(0, 2 * np.pi)
        point = [round(float(cx + r * math.cos(a)), decimals), round(float(cy + r * math.sin(a)), decimals)]
        if not points or point != points[-1]:
            points.append(point)

    return AnnotationRecord(
        frame_id=frame_id or f"random-{seed:03d}",
        width=size,
        height=size,
        trajectory=points,
        safety_margin=margin.tolist(),
    )


def make_test_image(size: int = 256) -> np.ndarray:
    """Gradients in red and green, an offset checkerboard with a disc in blue."""
    rows, cols = np.mgrid[0:size, 0:size]
    red = cols * 255 // (size - 1)
    green = rows * 255 // (size - 1)
    checker = (((cols + 5) // 37 + (rows + 11) // 37) % 2) * 200 + 30
    disc = (cols - 140) ** 2 + (rows - 110) ** 2 < 50 ** 2
    blue = np.where(disc, 255 - checker, checker)
    return np.stack([red, green, blue], axis=2).astype(np.uint8)


@pytest.fixture(autouse=True, scope="session")
def quiet_logger():
    """Console logging at WARNING, no log files."""
    setup_logger(level="WARNING", log_dir=None)
    yield


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Keep CONFMAP_* variables of the calling shell out of the tests."""
    for name in list(os.environ):
        if name.startswith("CONFMAP_"):
            monkeypatch.delenv(name, raising=False)
    yield


@pytest.fixture
def make_band() -> Callable[..., AnnotationRecord]:
    return band_record


@pytest.fixture
def u_shape() -> AnnotationRecord:
    return u_record()


@pytest.fixture
def make_random() -> Callable[..., AnnotationRecord]:
    return random_record


@pytest.fixture
def make_image() -> Callable[[int], np.ndarray]:
    return make_test_image


@pytest.fixture
def test_image() -> RGBImage:
    return RGBImage(data=make_test_image(256))


@pytest.fixture
def config() -> AppConfig:
    """Default configuration without log files."""
    return AppConfig.from_dict({"runtime": {"log_dir": None}})


@pytest.fixture
def write_annotations(tmp_path) -> Callable[[Iterable[AnnotationRecord], str], Path]:
    """Write records to an annotation file under tmp_path."""
    def write(records: Iterable[AnnotationRecord], name: str = "annotations.json") -> Path:
        path = tmp_path / name
        path.write_bytes(serialize_annotations(records))
        return path

    return write


@pytest.fixture
def write_json(tmp_path) -> Callable[[object, str], Path]:
    def write(document: object, name: str) -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return path

    return write
