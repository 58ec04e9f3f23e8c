"""
Confmap Corruption Module

Seeded implementation of the thirteen robustness corruptions at severities
1 to 5. Parameters live in SEVERITY_TABLES; bump TABLE_VERSION whenever a
value changes so stored results stay comparable.

Every call draws from its own numpy Philox stream keyed by the spec seed.
Random arrays are filled in row-major (row, column, channel) order. Gaussian,
impulse and speckle noise draw the same uniform or normal samples at every
severity and only scale them; shot noise draws Poisson counts whose rate
depends on the severity.
"""

import io
import math
from typing import Callable, Dict, Iterable, List, Sequence, Union

import numpy as np
from numpy.random import Generator, Philox
from PIL import Image
from scipy import ndimage

from src.core.logger import logger
from src.models.corruption import CorruptionKind, CorruptionSpec, RGBImage

TABLE_VERSION = "2"

# One entry per severity 1..5
SEVERITY_TABLES: Dict[CorruptionKind, tuple] = {
    # noise standard deviation on the [0, 1] scale
    CorruptionKind.GAUSSIAN_NOISE: (0.08, 0.12, 0.18, 0.26, 0.38),
    # photon count at full intensity
    CorruptionKind.SHOT_NOISE: (60, 25, 12, 5, 3),
    # per-sample flip probability
    CorruptionKind.IMPULSE_NOISE: (0.03, 0.06, 0.09, 0.17, 0.27),
    # multiplicative noise standard deviation
    CorruptionKind.SPECKLE_NOISE: (0.15, 0.2, 0.35, 0.45, 0.6),
    # (disk radius, alias blur sigma)
    CorruptionKind.DEFOCUS_BLUR: ((3, 0.1), (4, 0.5), (6, 0.5), (8, 0.5), (10, 0.5)),
    # kernel radius; the angle is drawn from the stream
    CorruptionKind.MOTION_BLUR: (3, 5, 8, 12, 15),
    # (first, stop, step) of the zoom factors averaged
    CorruptionKind.ZOOM_BLUR: ((1, 1.11, 0.01), (1, 1.16, 0.01), (1, 1.21, 0.02), (1, 1.26, 0.02), (1, 1.31, 0.03)),
    # haze strength; the fractal roughness is fixed by FOG_WIBBLE_DECAY
    CorruptionKind.FOG: (1.5, 2.0, 2.5, 3.0, 3.5),
    # additive shift of the HSV value channel, in bytes
    CorruptionKind.BRIGHTNESS: (26, 51, 77, 102, 128),
    # contrast factor around the per-channel mean
    CorruptionKind.CONTRAST: (0.4, 0.3, 0.2, 0.1, 0.05),
    # displacement amplitude as a fraction of the shorter image side
    CorruptionKind.ELASTIC: (0.005, 0.01, 0.015, 0.02, 0.03),
    # downscale factor; each level halves the previous one so coarser blocks
    # are unions of finer ones when the image sides divide evenly
    CorruptionKind.PIXELATE: (0.5, 0.25, 0.125, 0.0625, 0.03125),
    # JPEG quality
    CorruptionKind.JPEG: (25, 18, 15, 10, 7),
}

FOG_WIBBLE_DECAY = 2.0
ELASTIC_SMOOTHING = 0.04  # sigma of the displacement field, fraction of the shorter side
MOTION_ANGLE_RANGE = (-45.0, 45.0)

ImageLike = Union[RGBImage, np.ndarray]


def _rng(seed: int) -> Generator:
    return Generator(Philox(key=seed))


def _to_bytes(values: np.ndarray) -> np.ndarray:
    return np.floor(np.clip(values, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def _per_channel(x: np.ndarray, op: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    return np.stack([op(x[:, :, c]) for c in range(x.shape[2])], axis=2)


# Noise


def _gaussian_noise(x: np.ndarray, scale: float, rng: Generator) -> np.ndarray:
    return x + scale * rng.standard_normal(x.shape)


def _shot_noise(x: np.ndarray, photons: float, rng: Generator) -> np.ndarray:
    return rng.poisson(x * photons) / photons


def _impulse_noise(x: np.ndarray, amount: float, rng: Generator) -> np.ndarray:
    draws = rng.random(x.shape + (2,))
    flip = draws[..., 0] < amount
    salt = draws[..., 1] < 0.5
    out = x.copy()
    out[flip & salt] = 1.0
    out[flip & ~salt] = 0.0
    return out


def _speckle_noise(x: np.ndarray, scale: float, rng: Generator) -> np.ndarray:
    return x + x * scale * rng.standard_normal(x.shape)


# Blur


def disk_kernel(radius: int, alias_blur: float) -> np.ndarray:
    """Normalized aliased disk softened by a small Gaussian."""
    size = np.arange(-max(radius, 8), max(radius, 8) + 1)
    xs, ys = np.meshgrid(size, size, indexing="xy")
    kernel = ((xs ** 2 + ys ** 2) <= radius ** 2).astype(np.float64)
    kernel /= kernel.sum()
    kernel = ndimage.gaussian_filter(kernel, sigma=alias_blur, mode="constant")
    return kernel / kernel.sum()


def _defocus_blur(x: np.ndarray, params: tuple, rng: Generator) -> np.ndarray:
    radius, alias_blur = params
    kernel = disk_kernel(radius, alias_blur)
    return _per_channel(x, lambda channel: ndimage.convolve(channel, kernel, mode="reflect"))


def motion_kernel(radius: int, angle_deg: float) -> np.ndarray:
    """Line kernel of length 2 * radius + 1 through the centre, bilinearly splatted."""
    size = 2 * radius + 1
    kernel = np.zeros((size, size), dtype=np.float64)
    theta = math.radians(angle_deg)
    steps = np.linspace(-radius, radius, 4 * size)
    cols = radius + steps * math.cos(theta)
    rows = radius - steps * math.sin(theta)
    c0 = np.floor(cols).astype(int)
    r0 = np.floor(rows).astype(int)
    fc = cols - c0
    fr = rows - r0
    for dr, dc, weight in ((0, 0, (1 - fr) * (1 - fc)), (0, 1, (1 - fr) * fc), (1, 0, fr * (1 - fc)), (1, 1, fr * fc)):
        rr = np.clip(r0 + dr, 0, size - 1)
        cc = np.clip(c0 + dc, 0, size - 1)
        np.add.at(kernel, (rr, cc), weight)
    return kernel / kernel.sum()


def _motion_blur(x: np.ndarray, radius: int, rng: Generator) -> np.ndarray:
    angle = rng.uniform(*MOTION_ANGLE_RANGE)
    kernel = motion_kernel(radius, angle)
    return _per_channel(x, lambda channel: ndimage.convolve(channel, kernel, mode="reflect"))


def clipped_zoom(x: np.ndarray, zoom_factor: float) -> np.ndarray:
    """Zoom into the centre and crop back to the input size."""
    h, w = x.shape[:2]
    crop_h = int(np.ceil(h / zoom_factor))
    crop_w = int(np.ceil(w / zoom_factor))
    top = (h - crop_h) // 2
    left = (w - crop_w) // 2
    zoomed = ndimage.zoom(x[top:top + crop_h, left:left + crop_w], (zoom_factor, zoom_factor, 1), order=1)
    trim_top = (zoomed.shape[0] - h) // 2
    trim_left = (zoomed.shape[1] - w) // 2
    return zoomed[trim_top:trim_top + h, trim_left:trim_left + w]


def _zoom_blur(x: np.ndarray, params: tuple, rng: Generator) -> np.ndarray:
    zooms = np.arange(*params)
    out = np.zeros_like(x)
    for zoom_factor in zooms:
        out += clipped_zoom(x, float(zoom_factor))
    return (x + out) / (len(zooms) + 1)


# Weather


def plasma_fractal(mapsize: int, rng: Generator, wibble_decay: float = FOG_WIBBLE_DECAY) -> np.ndarray:
    """Diamond-square heightmap of side mapsize (a power of two) scaled to [0, 1]."""
    maparray = np.zeros((mapsize, mapsize), dtype=np.float64)
    stepsize = mapsize
    wibble = 100.0

    def wibbled_mean(array: np.ndarray) -> np.ndarray:
        return array / 4 + wibble * rng.uniform(-wibble, wibble, array.shape)

    def fill_squares() -> None:
        corners = maparray[0:mapsize:stepsize, 0:mapsize:stepsize]
        accum = corners + np.roll(corners, shift=-1, axis=0)
        accum += np.roll(accum, shift=-1, axis=1)
        maparray[stepsize // 2:mapsize:stepsize, stepsize // 2:mapsize:stepsize] = wibbled_mean(accum)

    def fill_diamonds() -> None:
        centres = maparray[stepsize // 2:mapsize:stepsize, stepsize // 2:mapsize:stepsize]
        corners = maparray[0:mapsize:stepsize, 0:mapsize:stepsize]
        left = centres + np.roll(centres, 1, axis=0) + corners + np.roll(corners, -1, axis=1)
        maparray[0:mapsize:stepsize, stepsize // 2:mapsize:stepsize] = wibbled_mean(left)
        top = centres + np.roll(centres, 1, axis=1) + corners + np.roll(corners, -1, axis=0)
        maparray[stepsize // 2:mapsize:stepsize, 0:mapsize:stepsize] = wibbled_mean(top)

    while stepsize >= 2:
        fill_squares()
        fill_diamonds()
        stepsize //= 2
        wibble /= wibble_decay

    maparray -= maparray.min()
    peak = maparray.max()
    return maparray / peak if peak > 0 else maparray


def _fog(x: np.ndarray, strength: float, rng: Generator) -> np.ndarray:
    h, w = x.shape[:2]
    mapsize = max(2, 2 ** math.ceil(math.log2(max(h, w))))
    haze = plasma_fractal(mapsize, rng)[:h, :w, np.newaxis]
    peak = x.max()
    return (x + strength * haze) * peak / (peak + strength)


def _brightness(data: np.ndarray, shift: int) -> np.ndarray:
    """Raise the HSV value channel by shift bytes, keeping hue and saturation."""
    rgb = data.astype(np.int64)
    value = rgb.max(axis=2, keepdims=True)
    raised = np.minimum(value + int(shift), 255)
    safe = np.where(value == 0, 1, value)
    scaled = np.floor(rgb * raised / safe + 0.5)
    # Black has no hue: it becomes the gray of the raised value
    out = np.where(value == 0, raised, scaled)
    return np.clip(out, 0, 255).astype(np.uint8)


# Digital


def _contrast(x: np.ndarray, factor: float, rng: Generator) -> np.ndarray:
    means = x.mean(axis=(0, 1), keepdims=True)
    return (x - means) * factor + means


def _elastic(x: np.ndarray, amplitude: float, rng: Generator) -> np.ndarray:
    h, w = x.shape[:2]
    field = rng.uniform(-1.0, 1.0, size=(2, h, w))
    sigma = max(1.0, ELASTIC_SMOOTHING * min(h, w))
    field = np.stack([ndimage.gaussian_filter(f, sigma=sigma, mode="reflect") for f in field])
    peak = np.abs(field).max()
    if peak > 0:
        field /= peak
    field *= amplitude * min(h, w)

    rows, cols = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    coords = [rows + field[0], cols + field[1]]
    return _per_channel(x, lambda channel: ndimage.map_coordinates(channel, coords, order=1, mode="reflect"))


def _pixelate(data: np.ndarray, factor: float) -> np.ndarray:
    h, w = data.shape[:2]
    image = Image.fromarray(np.ascontiguousarray(data))
    small = image.resize((max(1, round(w * factor)), max(1, round(h * factor))), Image.Resampling.BOX)
    return np.asarray(small.resize((w, h), Image.Resampling.NEAREST), dtype=np.uint8)


def _jpeg(data: np.ndarray, quality: int) -> np.ndarray:
    buffer = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(data)).save(buffer, format="JPEG", quality=int(quality))
    buffer.seek(0)
    with Image.open(buffer) as decoded:
        return np.asarray(decoded.convert("RGB"), dtype=np.uint8)


# Kinds working on [0, 1] floats
_FLOAT_KINDS: Dict[CorruptionKind, Callable[[np.ndarray, object, Generator], np.ndarray]] = {
    CorruptionKind.GAUSSIAN_NOISE: _gaussian_noise,
    CorruptionKind.SHOT_NOISE: _shot_noise,
    CorruptionKind.IMPULSE_NOISE: _impulse_noise,
    CorruptionKind.SPECKLE_NOISE: _speckle_noise,
    CorruptionKind.DEFOCUS_BLUR: _defocus_blur,
    CorruptionKind.MOTION_BLUR: _motion_blur,
    CorruptionKind.ZOOM_BLUR: _zoom_blur,
    CorruptionKind.FOG: _fog,
    CorruptionKind.CONTRAST: _contrast,
    CorruptionKind.ELASTIC: _elastic,
}

# Kinds working directly on bytes
_BYTE_KINDS: Dict[CorruptionKind, Callable[[np.ndarray, object], np.ndarray]] = {
    CorruptionKind.BRIGHTNESS: _brightness,
    CorruptionKind.PIXELATE: _pixelate,
    CorruptionKind.JPEG: _jpeg,
}


def severity_parameter(kind: CorruptionKind, severity: int):
    """Table entry for a kind at severity 1..5."""
    if isinstance(severity, bool) or not isinstance(severity, int) or not 1 <= severity <= 5:
        raise ValueError(f"severity must be an integer in 1..5, got {severity!r}")
    return SEVERITY_TABLES[CorruptionKind(kind)][severity - 1]


def apply(image: RGBImage, spec: CorruptionSpec) -> RGBImage:
    """Corrupt an RGB image.

    Args:
        image: Input image
        spec: Kind, severity and seed

    Returns:
        Corrupted image of the same size; identical inputs give identical bytes

    Raises:
        ValueError: If the spec is not a CorruptionSpec
    """
    if not isinstance(spec, CorruptionSpec):
        raise ValueError(f"expected a CorruptionSpec, got {type(spec).__name__}")
    parameter = severity_parameter(spec.kind, spec.severity)

    if spec.kind in _BYTE_KINDS:
        out = _BYTE_KINDS[spec.kind](image.data, parameter)
    else:
        x = image.data.astype(np.float64) / 255.0
        out = _to_bytes(_FLOAT_KINDS[spec.kind](x, parameter, _rng(spec.seed)))

    logger.debug(f"Applied {spec.kind.value} s{spec.severity} (seed {spec.seed}) to {image.width}x{image.height} image")
    return RGBImage(data=out)


def expand_specs(kinds: Iterable[Union[CorruptionKind, str]], severities: Sequence[int], seed: int) -> List[CorruptionSpec]:
    """Every (kind, severity) pair in table order."""
    return [
        CorruptionSpec(kind=kind, severity=severity, seed=seed)
        for kind in kinds
        for severity in severities
    ]


def psnr(a: ImageLike, b: ImageLike) -> float:
    """Peak signal-to-noise ratio in dB with peak 255; inf for identical images.

    Raises:
        ValueError: If the images differ in size
    """
    x = np.asarray(a.data if isinstance(a, RGBImage) else a, dtype=np.float64)
    y = np.asarray(b.data if isinstance(b, RGBImage) else b, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"image sizes differ: {x.shape} vs {y.shape}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)


__all__ = [
    "SEVERITY_TABLES",
    "TABLE_VERSION",
    "apply",
    "clipped_zoom",
    "disk_kernel",
    "expand_specs",
    "motion_kernel",
    "plasma_fractal",
    "psnr",
    "severity_parameter",
]
