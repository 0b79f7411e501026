"""Imaging artifacts of printed tags: filament stripes, uneven shading, specular highlights and sensor noise."""
import logging
from dataclasses import dataclass, asdict
from typing import Dict, Optional, Tuple

import numpy as np

from aircode.errors import InvalidInputError
from aircode.imager.images import GrayImage

module_logger = logging.getLogger(__name__)

IDENTITY_GRADIENT = (1.0, 0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class DegradationSpec:
    """
    sensor_noise_sigma: std of the per-frame sensor noise (intensity units, full scale 1)
    filament_amplitude, filament_period_mm: relative stripe modulation along x
    gradient_coeffs: (c0, cx, cy, cxx, cxy, cyy) of the multiplicative shading over normalized coordinates in [-1, 1]
    specular_*: gaussian highlight added to the direct component only
    frames_averaged: frames averaged per capture, dividing the noise std by its square root
    """
    sensor_noise_sigma: float = 0.0
    filament_amplitude: float = 0.0
    filament_period_mm: float = 0.4
    gradient_coeffs: Tuple[float, ...] = IDENTITY_GRADIENT
    specular_center_px: Optional[Tuple[float, float]] = None
    specular_radius_px: float = 25.0
    specular_strength: float = 0.0
    frames_averaged: int = 16
    seed: int = 0

    def __post_init__(self):
        for name in ("sensor_noise_sigma", "filament_amplitude", "specular_strength"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must not be negative, but is {getattr(self, name)}", key=name)
        if self.filament_amplitude >= 1:
            raise InvalidInputError("Filament amplitude must stay below 1", key="filament_amplitude")
        if self.filament_period_mm <= 0 or self.specular_radius_px <= 0:
            raise InvalidInputError("Filament period and specular radius must be positive", key="period")
        if len(self.gradient_coeffs) != 6:
            raise InvalidInputError(f"Expected 6 gradient coefficients, got {len(self.gradient_coeffs)}",
                                    key="gradient_coeffs")
        if self.frames_averaged < 1:
            raise InvalidInputError(f"At least one frame must be averaged, got {self.frames_averaged}",
                                    key="frames_averaged")

    @classmethod
    def from_dict(cls, spec: Dict) -> "DegradationSpec":
        values = dict(spec)
        if "gradient_coeffs" in values:
            values["gradient_coeffs"] = tuple(values["gradient_coeffs"])
        if values.get("specular_center_px") is not None:
            values["specular_center_px"] = tuple(values["specular_center_px"])
        return cls(**values)

    def to_dict(self) -> Dict:
        return asdict(self)

    def with_seed(self, seed: int) -> "DegradationSpec":
        return DegradationSpec(**{**asdict(self), "seed": seed})

    @property
    def effective_noise_sigma(self) -> float:
        return self.sensor_noise_sigma / np.sqrt(self.frames_averaged)


def normalized_coordinates(shape: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
    """Pixel centre coordinates scaled to [-1, 1] along each axis, indexed (row, col)."""
    height, width = shape
    x = 2 * (np.arange(width) + 0.5) / width - 1
    y = 2 * (np.arange(height) + 0.5) / height - 1
    return np.meshgrid(x, y, indexing="xy")


def quadratic_surface(coeffs, shape: Tuple[int, int]) -> np.ndarray:
    c0, cx, cy, cxx, cxy, cyy = coeffs
    x, y = normalized_coordinates(shape)
    return c0 + cx * x + cy * y + cxx * x * x + cxy * x * y + cyy * y * y


def filament_stripes(spec: DegradationSpec, shape: Tuple[int, int], pitch_mm: float) -> np.ndarray:
    x_mm = (np.arange(shape[1]) + 0.5) * pitch_mm
    stripe = 1.0 + spec.filament_amplitude * np.sin(2 * np.pi * x_mm / spec.filament_period_mm)
    return np.broadcast_to(stripe, shape)


def specular_highlight(spec: DegradationSpec, shape: Tuple[int, int]) -> np.ndarray:
    if spec.specular_strength == 0 or spec.specular_center_px is None:
        return np.zeros(shape)
    rows, cols = np.indices(shape)
    cx, cy = spec.specular_center_px
    r2 = (cols - cx) ** 2 + (rows - cy) ** 2
    return spec.specular_strength * np.exp(-r2 / (2 * spec.specular_radius_px ** 2))


def shade(image: GrayImage, spec: DegradationSpec) -> GrayImage:
    """Multiplicative stripes and gradient, no noise."""
    factor = filament_stripes(spec, image.shape, image.pitch_mm) * quadratic_surface(spec.gradient_coeffs,
                                                                                      image.shape)
    return image.with_pixels(image.pixels * factor)


def add_specular(direct: GrayImage, spec: DegradationSpec) -> GrayImage:
    return direct.with_pixels(direct.pixels + specular_highlight(spec, direct.shape))


def add_noise(image: GrayImage, spec: DegradationSpec, rng: Optional[np.random.Generator] = None) -> GrayImage:
    sigma = spec.effective_noise_sigma
    if sigma == 0:
        return image
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    return image.with_pixels(image.pixels + rng.normal(0.0, sigma, image.shape))


def degrade(image: GrayImage, spec: DegradationSpec) -> GrayImage:
    """img * (1 + stripes) * gradient + noise / sqrt(frames_averaged); deterministic for a fixed seed."""
    return add_noise(shade(image, spec), spec)
