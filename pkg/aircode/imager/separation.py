"""
Direct/global separation with shifted high-frequency illumination.

Under a pattern that activates a fraction alpha of the projector pixels, a scene point sees its direct
reflection only when lit, while the subsurface (global) part averages the pattern. Over a set of
shifted patterns the per-pixel maximum L+ and minimum L- give

    L_d = L+ - alpha / (1 - alpha) * L-        L_g = L- / (1 - alpha)
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import fftconvolve

from aircode.errors import InvalidInputError
from aircode.imager.images import GrayImage
from aircode.scatter.hankel import inverse_hankel
from aircode.scatter.kubelka_munk import KmConstants, slab_profiles
from aircode.scatter.profiles import RadialProfile, radial_grid

module_logger = logging.getLogger(__name__)

KERNEL_CUTOFF = 1e-4


@dataclass(frozen=True)
class SeparationResult:
    direct: GrayImage
    global_: GrayImage
    activation_alpha: float

    def __post_init__(self):
        if not 0 < self.activation_alpha < 1:
            raise InvalidInputError(f"Activation fraction must be in (0, 1), but is {self.activation_alpha}",
                                    key="alpha")


def checkerboard_patterns(shape: Tuple[int, int], period_px: int, shift_count: int = 8) -> List[np.ndarray]:
    """
    Binary checkerboards of square size period_px, shift i moved by round(i * 2 * period / shift_count)
    pixels along x so that the shifts cover one full cycle.
    """
    if shift_count < 2:
        raise InvalidInputError(f"At least two shifts are needed, got {shift_count}", key="shift_count")
    if period_px < 2:
        raise InvalidInputError(f"Checkerboard period must be at least 2 px, got {period_px}", key="period")
    rows, cols = np.indices(shape)
    patterns = []
    for i in range(shift_count):
        shift = int(round(i * 2 * period_px / shift_count))
        patterns.append((((cols + shift) // period_px + rows // period_px) % 2 == 0).astype(float))
    return patterns


def gaussian_kernel(blur_radius_mm: float, pitch_mm: float) -> np.ndarray:
    """Normalized gaussian with sigma = blur_radius / 3, truncated at the blur radius."""
    if blur_radius_mm <= 0:
        raise InvalidInputError(f"Blur radius must be positive, but is {blur_radius_mm}", key="blur_radius")
    sigma = blur_radius_mm / 3 / pitch_mm
    half = max(int(np.ceil(blur_radius_mm / pitch_mm)), 1)
    axis = np.arange(-half, half + 1)
    x, y = np.meshgrid(axis, axis, indexing="xy")
    kernel = np.exp(-(x ** 2 + y ** 2) / (2 * sigma ** 2))
    return kernel / kernel.sum()


def profile_blur_kernel(profile: RadialProfile, pitch_mm: float, cutoff: float = KERNEL_CUTOFF,
                        max_radius_mm: Optional[float] = None) -> np.ndarray:
    """The profile sampled at pixel offsets out to where it falls below cutoff times its peak, normalized."""
    peak = profile.values.max()
    if peak <= 0:
        raise InvalidInputError("Blur profile is zero everywhere", key="profile")
    above = np.nonzero(profile.values >= cutoff * peak)[0]
    radius = float(profile.radii[above[-1]])
    if max_radius_mm is not None and radius > max_radius_mm:
        module_logger.debug("Blur kernel cut from %.2f mm to %.2f mm", radius, max_radius_mm)
        radius = max_radius_mm
    half = max(int(np.ceil(radius / pitch_mm)), 1)
    axis = np.arange(-half, half + 1) * pitch_mm
    x, y = np.meshgrid(axis, axis, indexing="xy")
    rho = np.hypot(x, y)
    kernel = np.where(rho <= max(radius, pitch_mm), profile.at(rho), 0.0)
    return kernel / kernel.sum()


def scattering_kernel(km: KmConstants, depth_mm: float, pitch_mm: float, radii: Optional[np.ndarray] = None,
                      max_radius_mm: Optional[float] = None) -> np.ndarray:
    """Blur of the illumination by the cover layer: its transmission profile as a normalized kernel."""
    radii = radial_grid() if radii is None else radii
    trans = inverse_hankel(slab_profiles(km, depth_mm).trans, km.freqs, radii)
    return profile_blur_kernel(trans, pitch_mm, max_radius_mm=max_radius_mm)


def _check_same_shape(*images: GrayImage):
    shapes = {image.shape for image in images}
    if len(shapes) != 1:
        raise InvalidInputError(f"Images must share their dimensions, got {sorted(shapes)}", key="shape")


def simulate_capture(direct_scene: GrayImage, global_scene: GrayImage, pattern: np.ndarray,
                     blur_radius_mm: Optional[float] = None, kernel: Optional[np.ndarray] = None) -> GrayImage:
    """capture = direct * pattern + global * (pattern convolved with the scattering kernel)"""
    _check_same_shape(direct_scene, global_scene)
    pattern = np.asarray(pattern, dtype=float)
    if pattern.shape != direct_scene.shape:
        raise InvalidInputError(f"Pattern shape {pattern.shape} differs from image shape {direct_scene.shape}",
                                key="shape")
    if kernel is None:
        if blur_radius_mm is None:
            raise InvalidInputError("Either a blur radius or a kernel is required", key="blur_radius")
        kernel = gaussian_kernel(blur_radius_mm, direct_scene.pitch_mm)
    half = kernel.shape[0] // 2
    if kernel.shape[0] > min(pattern.shape) or kernel.shape[1] > min(pattern.shape):
        raise InvalidInputError(f"Blur kernel of {kernel.shape} px is wider than the image {pattern.shape}",
                                key="blur_radius")
    padded = np.pad(pattern, half, mode="reflect")
    spread = fftconvolve(padded, kernel, mode="valid")
    return GrayImage.clipped(direct_scene.pixels * pattern + global_scene.pixels * spread, direct_scene.pitch_mm)


def simulate_captures(direct_scene: GrayImage, global_scene: GrayImage, patterns: Sequence[np.ndarray],
                      blur_radius_mm: Optional[float] = None, kernel: Optional[np.ndarray] = None) -> List[GrayImage]:
    return [simulate_capture(direct_scene, global_scene, pattern, blur_radius_mm, kernel) for pattern in patterns]


def separate(captures: Sequence[GrayImage], activation_alpha: float = 0.5) -> SeparationResult:
    if len(captures) < 2:
        raise InvalidInputError(f"Separation needs at least two captures, got {len(captures)}", key="captures")
    if not 0 < activation_alpha < 1:
        raise InvalidInputError(f"Activation fraction must be in (0, 1), but is {activation_alpha}", key="alpha")
    _check_same_shape(*captures)
    stacked = np.stack([capture.pixels for capture in captures])
    l_max = stacked.max(axis=0)
    l_min = stacked.min(axis=0)
    direct = np.maximum(l_max - activation_alpha / (1 - activation_alpha) * l_min, 0.0)
    global_ = l_min / (1 - activation_alpha)
    pitch = captures[0].pitch_mm
    module_logger.debug("Separated %d captures of %s", len(captures), captures[0].shape)
    return SeparationResult(GrayImage(direct, pitch), GrayImage(global_, pitch), activation_alpha)
