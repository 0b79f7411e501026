"""
Frontal radiosity of a tag under uniform unit illumination.

Light entering at xi and leaving at xo is weighted by the reflection profile picked by the pocket rule:
rc when both points lie above air, r0 when both lie in the solid part, sqrt(r0 * rc) otherwise.
Summed over all entry points this is four convolutions of the air mask:

    c = m * (Kc * m + Kb * (1 - m)) + (1 - m) * (K0 * (1 - m) + Kb * m)
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import fftconvolve

from aircode.codec.geometry import lateral_air_mask
from aircode.codec.layout import TagLayout
from aircode.errors import InvalidInputError
from aircode.imager.images import GrayImage
from aircode.scatter.design import AirPocketParams, ContrastModel, finite_pocket_reflection
from aircode.scatter.kubelka_munk import KmConstants
from aircode.scatter.profiles import RadialProfile

module_logger = logging.getLogger(__name__)

MARGIN_CELLS = 3
KERNEL_RADIUS_CELLS = 5.0


def profile_kernel(profile: RadialProfile, pitch_mm: float, radius_mm: float) -> np.ndarray:
    """A square kernel sampling the profile at pixel offsets, scaled to the profile's mass within radius_mm."""
    radius_mm = min(radius_mm, profile.r_max)
    half = int(np.floor(radius_mm / pitch_mm))
    axis = np.arange(-half, half + 1) * pitch_mm
    x, y = np.meshgrid(axis, axis, indexing="xy")
    rho = np.hypot(x, y)
    kernel = np.where(rho <= radius_mm, profile.at(rho), 0.0)
    mass = kernel.sum()
    if mass > 0:
        kernel *= profile.disc_integral(radius_mm) / mass
    return kernel


@dataclass(frozen=True, eq=False)
class RadiosityKernels:
    solid: np.ndarray
    pocket: np.ndarray
    boundary: np.ndarray

    @classmethod
    def from_profiles(cls, r0: RadialProfile, rc: RadialProfile, pitch_mm: float,
                      radius_mm: float) -> "RadiosityKernels":
        rb = finite_pocket_reflection(r0, rc, xo_in_pocket=True, xi_in_pocket=False)
        return cls(profile_kernel(r0, pitch_mm, radius_mm),
                   profile_kernel(rc, pitch_mm, radius_mm),
                   profile_kernel(rb, pitch_mm, radius_mm))

    @property
    def half_width(self) -> int:
        return self.solid.shape[0] // 2

    @property
    def solid_level(self) -> float:
        return float(self.solid.sum())


def render_mask(mask: np.ndarray, kernels: RadiosityKernels, pitch_mm: float) -> GrayImage:
    """Radiosity of an air mask indexed (y, x); everything beyond the mask is solid."""
    mask = np.asarray(mask, dtype=float)
    if mask.ndim != 2:
        raise InvalidInputError(f"Air mask must be 2-D, got shape {mask.shape}", key="mask")
    pad = kernels.half_width
    air = np.pad(mask, pad, mode="constant", constant_values=0.0)
    solid = 1.0 - air
    within_pocket = fftconvolve(air, kernels.pocket, mode="valid") + fftconvolve(solid, kernels.boundary, mode="valid")
    within_solid = fftconvolve(solid, kernels.solid, mode="valid") + fftconvolve(air, kernels.boundary, mode="valid")
    radiosity = mask * within_pocket + (1.0 - mask) * within_solid
    return GrayImage.clipped(radiosity, pitch_mm)


def scene_mask(layout: TagLayout, pitch_mm: float, margin_cells: int = MARGIN_CELLS) -> np.ndarray:
    """The tag's air footprint centred in a solid margin of margin_cells on every side."""
    margin_px = int(round(margin_cells * layout.config.cell_size_mm / pitch_mm))
    return np.pad(lateral_air_mask(layout, pitch_mm), margin_px, mode="constant", constant_values=False)


def render_radiosity(layout: TagLayout, km: KmConstants, params: AirPocketParams, pitch_mm: float = 0.1,
                     margin_cells: int = MARGIN_CELLS, radii: Optional[np.ndarray] = None,
                     model: Optional[ContrastModel] = None) -> GrayImage:
    """
    Render the global component of a frontal, orthographic view of the tag. The scene is centred on
    the tag; pixels outside the tag see the solid material only.
    """
    cell = layout.config.cell_size_mm
    if pitch_mm > cell / 4:
        raise InvalidInputError(f"Render pitch {pitch_mm} mm does not resolve {cell} mm cells "
                                f"(at most {cell / 4} mm)", key="pitch")
    model = model or ContrastModel(km, radii)
    kernels = RadiosityKernels.from_profiles(model.solid_profile, model.pocket_profile(params.depth, params.height),
                                             pitch_mm, KERNEL_RADIUS_CELLS * cell)
    mask = scene_mask(layout, pitch_mm, margin_cells)
    module_logger.info("Rendering %s pixels with %s kernels, effective profile radius %.3f mm", mask.shape,
                       kernels.solid.shape, model.blend_radius())
    return render_mask(mask, kernels, pitch_mm)
