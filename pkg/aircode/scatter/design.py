"""Contrast of a subsurface air pocket and the choice of its depth d and height h."""
import logging
from dataclasses import dataclass, asdict
from typing import Dict, Optional, Sequence

import numpy as np

from aircode.errors import ConvergenceError, InfeasibleDesignError, InvalidInputError
from aircode.scatter.hankel import inverse_hankel
from aircode.scatter.kubelka_munk import (KmConstants, slab_profiles, thick_substrate_depth, three_layer_reflectance,
                                          transmissive_albedo)
from aircode.scatter.profiles import RadialProfile, radial_grid

module_logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AirPocketParams:
    """Depth d of the pocket below the surface, its height h and lateral size s (all mm)."""
    depth: float
    height: float
    lateral: float

    def __post_init__(self):
        for name, value in (("depth", self.depth), ("height", self.height), ("lateral", self.lateral)):
            if not np.isfinite(value) or value <= 0:
                raise InvalidInputError(f"Air pocket {name} must be positive, but is {value}", key=name)

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass(frozen=True)
class DesignTargets:
    contrast_target: float = 0.05
    albedo_floor_tau: float = 0.20
    d_min_mm: float = 1.0
    h_search_mm: tuple = (0.01, 10.0)
    d_tol_mm: float = 1e-3
    contrast_tol: float = 1e-4
    disc_radius_factor: float = 5.0
    max_bisections: int = 80

    def __post_init__(self):
        if not 0 < self.albedo_floor_tau < 1:
            raise InvalidInputError(f"Albedo floor must be in (0, 1), but is {self.albedo_floor_tau}", key="tau")
        if not 0 < self.contrast_target < 1:
            raise InvalidInputError(f"Contrast target must be in (0, 1), but is {self.contrast_target}",
                                    key="contrast_target")
        if len(self.h_search_mm) != 2 or not 0 < self.h_search_mm[0] < self.h_search_mm[1]:
            raise InvalidInputError(f"Invalid height search interval {self.h_search_mm}", key="h_search")
        if self.d_min_mm <= 0:
            raise InvalidInputError(f"Minimum depth must be positive, but is {self.d_min_mm}", key="d_min")

    @classmethod
    def from_dict(cls, spec: Dict) -> "DesignTargets":
        values = dict(spec)
        if "h_search_mm" in values:
            values["h_search_mm"] = tuple(values["h_search_mm"])
        return cls(**values)


@dataclass(frozen=True)
class ContrastResult:
    c_over_pocket: float
    c_solid: float

    @property
    def contrast(self) -> float:
        return (self.c_over_pocket - self.c_solid) / self.c_solid

    def to_dict(self) -> Dict:
        return {"c_over_pocket": self.c_over_pocket, "c_solid": self.c_solid, "contrast": self.contrast}


def finite_pocket_reflection(r0: RadialProfile, rc: RadialProfile, xo_in_pocket: bool = True,
                             xi_in_pocket: bool = False) -> RadialProfile:
    """
    The reflection kernel between an entry point xi and an exit point xo near a finite pocket.

    Both points above the pocket see rc, both in the solid part see r0; light crossing the pocket
    boundary sees the geometric mean sqrt(r0 * rc).
    """
    if not np.array_equal(r0.radii, rc.radii):
        raise InvalidInputError("Profiles must share radii", key="radii")
    if xo_in_pocket and xi_in_pocket:
        return rc
    if not xo_in_pocket and not xi_in_pocket:
        return r0
    return RadialProfile(r0.radii, np.sqrt(r0.values * rc.values))


def _disc_grid(spacing: float, radius: float):
    half = int(np.floor(radius / spacing))
    axis = np.arange(-half, half + 1) * spacing
    x, y = np.meshgrid(axis, axis, indexing="xy")
    return x, y, np.hypot(x, y)


def contrast_from_profiles(r0: RadialProfile, rc: RadialProfile, lateral: float,
                           disc_radius_factor: float = 5.0) -> ContrastResult:
    """
    Integrate the blended reflection over a disc around the center of a square pocket footprint of
    side 'lateral': rc inside the footprint, sqrt(r0 * rc) outside. The solid albedo c0 integrates r0
    over the same disc.
    """
    dr = r0.spacing
    if lateral < 2 * dr:
        raise InvalidInputError(f"Pocket size {lateral} mm is below the profile resolution of {2 * dr} mm",
                                key="lateral")
    blended = finite_pocket_reflection(r0, rc)
    radius = min(disc_radius_factor * lateral, r0.r_max)
    x, y, rho = _disc_grid(dr, radius)
    disc = rho <= radius
    footprint = (np.abs(x) <= lateral / 2) & (np.abs(y) <= lateral / 2)
    over = np.where(footprint, rc.at(rho), blended.at(rho))
    c = float(np.sum(over[disc])) * dr * dr
    c0 = float(np.sum(r0.at(rho)[disc])) * dr * dr
    return ContrastResult(c_over_pocket=c, c_solid=c0)


class ContrastModel:
    """Caches the solid reflection of a material and evaluates the contrast of pockets within it."""

    def __init__(self, km: KmConstants, radii: Optional[np.ndarray] = None, disc_radius_factor: float = 5.0):
        self.km = km
        self.radii = radial_grid() if radii is None else np.asarray(radii, dtype=float)
        self.disc_radius_factor = disc_radius_factor
        self.substrate_depth = thick_substrate_depth(km)
        self._solid_profile = None

    @property
    def solid_profile(self) -> RadialProfile:
        if self._solid_profile is None:
            solid = slab_profiles(self.km, self.substrate_depth)
            self._solid_profile = inverse_hankel(solid.refl, self.km.freqs, self.radii)
        return self._solid_profile

    def blend_radius(self, energy: float = 0.9) -> float:
        return self.solid_profile.energy_radius(energy)

    def pocket_profile(self, d: float, h: float) -> RadialProfile:
        stack = three_layer_reflectance(self.km, d, h, substrate_depth=self.substrate_depth)
        return inverse_hankel(stack.refl, self.km.freqs, self.radii)

    def contrast(self, params: AirPocketParams) -> ContrastResult:
        rc = self.pocket_profile(params.depth, params.height)
        return contrast_from_profiles(self.solid_profile, rc, params.lateral, self.disc_radius_factor)


def surface_contrast(km: KmConstants, params: AirPocketParams, radii: Optional[np.ndarray] = None,
                     disc_radius_factor: float = 5.0) -> ContrastResult:
    """The reflective albedo over a pocket compared to the solid material."""
    return ContrastModel(km, radii, disc_radius_factor).contrast(params)


def max_depth_for_albedo(km: KmConstants, tau: float, tol: float = 1e-3, upper_limit: float = 1e3) -> float:
    """The largest cover depth whose transmissive albedo is still at least tau."""
    if transmissive_albedo(km, 0.0) < tau:
        raise InfeasibleDesignError(f"The material never transmits {tau}", key="albedo_floor")
    lo, hi = 0.0, 1.0
    while transmissive_albedo(km, hi) >= tau:
        lo, hi = hi, hi * 2
        if hi > upper_limit:
            raise InfeasibleDesignError(f"Transmissive albedo stays above {tau} up to {upper_limit} mm",
                                        key="albedo_floor")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if transmissive_albedo(km, mid) >= tau:
            lo = mid
        else:
            hi = mid
    return lo


def recommend_parameters(km: KmConstants, targets: DesignTargets, lateral: float,
                         radii: Optional[np.ndarray] = None) -> AirPocketParams:
    """
    Choose d and h for a pocket of lateral size 'lateral':

        - d_max is the deepest cover keeping the transmissive albedo at or above tau
        - d is the midpoint of [d_min, d_max]
        - h is found by bisection so that the contrast magnitude matches the target
    """
    d_max = max_depth_for_albedo(km, targets.albedo_floor_tau, targets.d_tol_mm)
    if d_max < targets.d_min_mm:
        raise InfeasibleDesignError(f"Deepest cover with albedo >= {targets.albedo_floor_tau} is {d_max:.3f} mm, "
                                    f"below d_min={targets.d_min_mm} mm", key="d_min")
    depth = (targets.d_min_mm + d_max) / 2
    module_logger.info("Cover depth range [%.3f, %.3f] mm, choosing d=%.3f mm", targets.d_min_mm, d_max, depth)

    model = ContrastModel(km, radii, targets.disc_radius_factor)

    def excess(h: float) -> float:
        result = model.contrast(AirPocketParams(depth, h, lateral))
        return abs(result.contrast) - targets.contrast_target

    h_lo, h_hi = targets.h_search_mm
    f_lo, f_hi = excess(h_lo), excess(h_hi)
    if f_lo > 0:
        raise InfeasibleDesignError(f"Contrast already exceeds {targets.contrast_target} at h={h_lo} mm",
                                    key="h_min")
    if f_hi < 0:
        raise InfeasibleDesignError(f"Contrast stays below {targets.contrast_target} up to h={h_hi} mm",
                                    key="h_max")
    for step in range(targets.max_bisections):
        h_mid = (h_lo + h_hi) / 2
        f_mid = excess(h_mid)
        if abs(f_mid) < targets.contrast_tol:
            module_logger.info("Air pocket height h=%.4f mm after %d bisections", h_mid, step + 1)
            return AirPocketParams(depth, h_mid, lateral)
        if f_mid < 0:
            h_lo = h_mid
        else:
            h_hi = h_mid
    raise ConvergenceError(f"Height bisection did not reach the contrast tolerance {targets.contrast_tol}",
                           key="h")


def albedo_curve(km: KmConstants, depths: Sequence[float]) -> np.ndarray:
    """Transmissive albedo for each cover depth."""
    return np.array([transmissive_albedo(km, d) for d in depths])


def contrast_curve(km: KmConstants, depth: float, heights: Sequence[float], lateral: float,
                   radii: Optional[np.ndarray] = None, disc_radius_factor: float = 5.0) -> np.ndarray:
    """Surface contrast for each pocket height at a fixed depth and lateral size."""
    model = ContrastModel(km, radii, disc_radius_factor)
    return np.array([model.contrast(AirPocketParams(depth, h, lateral)).contrast for h in heights])


def blend_radius(km: KmConstants, energy: float = 0.9, radii: Optional[np.ndarray] = None) -> float:
    """The radius enclosing the given fraction of the solid reflection profile's energy (mm)."""
    return ContrastModel(km, radii).blend_radius(energy)
