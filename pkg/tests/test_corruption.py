"""
Corruption generator tests: reproducibility, severity ordering and the
severity tables.
"""

import math

import numpy as np
import pytest
from numpy.random import Generator, Philox
from pydantic import ValidationError

from src.core.corruption import (
    SEVERITY_TABLES,
    apply,
    clipped_zoom,
    disk_kernel,
    expand_specs,
    motion_kernel,
    plasma_fractal,
    psnr,
    severity_parameter,
)
from src.models.corruption import CorruptionCategory, CorruptionKind, CorruptionSpec, RGBImage

NOISE_KINDS = [
    CorruptionKind.GAUSSIAN_NOISE,
    CorruptionKind.SHOT_NOISE,
    CorruptionKind.IMPULSE_NOISE,
    CorruptionKind.SPECKLE_NOISE,
]


class TestCorruptionKinds:

    def test_thirteen_kinds_in_table_order(self):
        assert CorruptionKind.names() == [
            "gaussian-noise", "shot-noise", "impulse-noise", "speckle-noise",
            "defocus-blur", "motion-blur", "zoom-blur",
            "fog", "brightness",
            "contrast", "elastic", "pixelate", "jpeg",
        ]

    def test_categories(self):
        assert CorruptionKind.SHOT_NOISE.category is CorruptionCategory.NOISE
        assert CorruptionKind.SPECKLE_NOISE.category is CorruptionCategory.BLUR
        assert CorruptionKind.BRIGHTNESS.category is CorruptionCategory.WEATHER
        assert CorruptionKind.JPEG.category is CorruptionCategory.DIGITAL

    @pytest.mark.parametrize("name", ["fog", "FOG", " zoom_blur ", "zoom-blur"])
    def test_parse(self, name):
        assert CorruptionKind.parse(name) in (CorruptionKind.FOG, CorruptionKind.ZOOM_BLUR)

    def test_parse_unknown(self):
        with pytest.raises(ValueError, match="unknown corruption kind 'snow'"):
            CorruptionKind.parse("snow")

    def test_every_kind_has_five_severities(self):
        assert set(SEVERITY_TABLES) == set(CorruptionKind)
        assert all(len(levels) == 5 for levels in SEVERITY_TABLES.values())


class TestCorruptionSpec:

    @pytest.mark.parametrize("severity", [0, 6, -1])
    def test_severity_range(self, severity):
        with pytest.raises(ValidationError):
            CorruptionSpec(kind="fog", severity=severity)

    @pytest.mark.parametrize("severity", [2.0, "3", True])
    def test_severity_must_be_integer(self, severity):
        with pytest.raises(ValidationError):
            CorruptionSpec(kind="fog", severity=severity)

    def test_negative_seed(self):
        with pytest.raises(ValidationError):
            CorruptionSpec(kind="fog", severity=1, seed=-1)

    def test_severity_parameter(self):
        assert severity_parameter(CorruptionKind.JPEG, 1) == 25
        with pytest.raises(ValueError):
            severity_parameter(CorruptionKind.JPEG, 6)

    def test_expand_specs(self):
        specs = expand_specs(["fog", CorruptionKind.JPEG], [1, 3], seed=9)
        assert [(s.kind.value, s.severity, s.seed) for s in specs] == [
            ("fog", 1, 9), ("fog", 3, 9), ("jpeg", 1, 9), ("jpeg", 3, 9),
        ]

    def test_apply_rejects_other_types(self, test_image):
        with pytest.raises(ValueError):
            apply(test_image, {"kind": "fog", "severity": 1})


class TestApply:

    def test_reproducible_bytes(self, test_image):
        for spec in expand_specs(list(CorruptionKind), [1, 2, 3, 4, 5], seed=3):
            first = apply(test_image, spec)
            second = apply(test_image, spec)
            assert first.to_bytes() == second.to_bytes(), f"{spec.kind.value} s{spec.severity}"
            assert first.data.shape == test_image.data.shape
            assert first.data.dtype == np.uint8

    def test_input_is_untouched(self, test_image):
        before = test_image.to_bytes()
        apply(test_image, CorruptionSpec(kind="elastic", severity=5, seed=1))
        assert test_image.to_bytes() == before

    @pytest.mark.parametrize("kind", NOISE_KINDS + [CorruptionKind.FOG, CorruptionKind.ELASTIC])
    def test_seed_changes_output(self, test_image, kind):
        first = apply(test_image, CorruptionSpec(kind=kind, severity=3, seed=0))
        second = apply(test_image, CorruptionSpec(kind=kind, severity=3, seed=1))
        assert first.to_bytes() != second.to_bytes()

    @pytest.mark.parametrize("kind", list(CorruptionKind))
    def test_quality_degrades_with_severity(self, test_image, kind):
        values = [
            psnr(test_image, apply(test_image, CorruptionSpec(kind=kind, severity=severity, seed=5)))
            for severity in range(1, 6)
        ]
        assert all(later <= earlier + 1e-9 for earlier, later in zip(values, values[1:])), values
        assert math.isfinite(values[-1])

    def test_pixelate_strictly_degrades(self, test_image):
        values = [
            psnr(test_image, apply(test_image, CorruptionSpec(kind="pixelate", severity=severity)))
            for severity in range(1, 6)
        ]
        assert all(later < earlier for earlier, later in zip(values, values[1:])), values

    def test_pixelate_factors_halve(self):
        factors = SEVERITY_TABLES[CorruptionKind.PIXELATE]
        assert all(later == earlier / 2 for earlier, later in zip(factors, factors[1:]))

    def test_non_square_image(self):
        rng = np.random.default_rng(0)
        image = RGBImage(data=rng.integers(0, 256, size=(37, 61, 3), dtype=np.uint8))
        for kind in CorruptionKind:
            out = apply(image, CorruptionSpec(kind=kind, severity=5, seed=2))
            assert out.data.shape == (37, 61, 3)

    def test_brightness_lifts_black_to_gray(self):
        image = RGBImage(data=np.zeros((2, 2, 3), dtype=np.uint8))
        out = apply(image, CorruptionSpec(kind="brightness", severity=1))
        assert (out.data == 26).all()

    def test_contrast_keeps_channel_means(self, test_image):
        out = apply(test_image, CorruptionSpec(kind="contrast", severity=3))
        means_in = test_image.data.reshape(-1, 3).mean(axis=0)
        means_out = out.data.reshape(-1, 3).mean(axis=0)
        np.testing.assert_allclose(means_out, means_in, atol=1.0)


class TestHelpers:

    def test_psnr_identical_images(self, test_image):
        assert psnr(test_image, test_image) == math.inf

    def test_psnr_known_value(self):
        a = np.zeros((4, 4, 3), dtype=np.uint8)
        b = np.full((4, 4, 3), 255, dtype=np.uint8)
        assert psnr(a, b) == pytest.approx(0.0)

    def test_psnr_size_mismatch(self):
        with pytest.raises(ValueError):
            psnr(np.zeros((4, 4, 3)), np.zeros((4, 5, 3)))

    @pytest.mark.parametrize("radius, alias_blur", [(3, 0.1), (10, 0.5)])
    def test_disk_kernel_is_normalized(self, radius, alias_blur):
        kernel = disk_kernel(radius, alias_blur)
        assert kernel.sum() == pytest.approx(1.0)
        assert kernel.shape[0] == kernel.shape[1] and kernel.shape[0] % 2 == 1

    @pytest.mark.parametrize("angle", [-45.0, 0.0, 30.0])
    def test_motion_kernel_is_normalized(self, angle):
        kernel = motion_kernel(5, angle)
        assert kernel.shape == (11, 11)
        assert kernel.sum() == pytest.approx(1.0)
        assert kernel[5, 5] > 0

    def test_clipped_zoom_keeps_size(self):
        x = np.random.default_rng(0).uniform(size=(30, 41, 3))
        for factor in (1.0, 1.07, 1.31):
            assert clipped_zoom(x, factor).shape == x.shape

    def test_plasma_fractal_range(self):
        haze = plasma_fractal(64, Generator(Philox(key=4)))
        assert haze.shape == (64, 64)
        assert haze.min() >= 0.0 and haze.max() == pytest.approx(1.0)

    def test_psnr_one_level_apart(self):
        a = np.full((8, 8, 3), 100, dtype=np.uint8)
        assert psnr(a, a + 1) == pytest.approx(20 * math.log10(255), abs=1e-12)

    def test_psnr_matches_direct_formula(self):
        rng = np.random.default_rng(13)
        a = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
        b = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
        mse = np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2)
        assert psnr(a, b) == pytest.approx(10 * math.log10(255 ** 2 / mse), rel=1e-12)


class TestConstantImages:

    @pytest.fixture
    def gray(self) -> RGBImage:
        return RGBImage(data=np.full((64, 64, 3), 128, dtype=np.uint8))

    @pytest.mark.parametrize("severity", [1, 2, 3, 4, 5])
    def test_brightness_adds_table_constant(self, gray, severity):
        out = apply(gray, CorruptionSpec(kind="brightness", severity=severity))
        shift = severity_parameter(CorruptionKind.BRIGHTNESS, severity)
        assert (out.data == min(128 + shift, 255)).all()

    @pytest.mark.parametrize("severity", [1, 3, 5])
    def test_pixelate_keeps_constant_image(self, gray, severity):
        out = apply(gray, CorruptionSpec(kind="pixelate", severity=severity))
        assert out.to_bytes() == gray.to_bytes()

    def test_gaussian_noise_reuses_draws_across_severities(self, gray):
        residuals = [
            apply(gray, CorruptionSpec(kind="gaussian-noise", severity=severity, seed=8)).data.astype(np.float64) - 128.0
            for severity in (1, 2)
        ]
        assert np.corrcoef(residuals[0].ravel(), residuals[1].ravel())[0, 1] > 0.99

    def test_jpeg_changes_structured_image(self, test_image):
        out = apply(test_image, CorruptionSpec(kind="jpeg", severity=1))
        assert out.to_bytes() != test_image.to_bytes()

    @pytest.mark.slow
    @pytest.mark.parametrize("severity", [1, 3, 5])
    def test_impulse_flip_rate(self, severity):
        image = RGBImage(data=np.full((1536, 1536, 3), 128, dtype=np.uint8))
        out = apply(image, CorruptionSpec(kind="impulse-noise", severity=severity, seed=21))
        altered = np.count_nonzero(out.data != 128) / out.data.size
        expected = severity_parameter(CorruptionKind.IMPULSE_NOISE, severity)
        assert abs(altered - expected) <= 0.01 * expected
