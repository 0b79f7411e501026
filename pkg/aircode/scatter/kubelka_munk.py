"""
Frequency-wise Kubelka-Munk model of a homogeneous scattering material.

Each Hankel frequency q is treated as its own 1-D Kubelka-Munk problem with a scattering coefficient
S(q) and an absorption coefficient K(q) (both in 1/mm). A slab of thickness d then has the closed form

    a = 1 + K/S,  b = sqrt(a^2 - 1),  gamma = b S = sqrt(K (K + 2S))
    R = sinh(gamma d) / (a sinh(gamma d) + b cosh(gamma d))
    T = b / (a sinh(gamma d) + b cosh(gamma d))

The constants are recovered from one measured sample by repeatedly halving its thickness: a layer of
half the thickness stacked on itself must reproduce the measured profiles.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from aircode.errors import ConvergenceError, InvalidInputError, NonPhysicalError
from aircode.scatter.hankel import hankel_transform
from aircode.scatter.layers import air_layer, stack
from aircode.scatter.profiles import RadialProfile, SpectralSlab, check_grid

module_logger = logging.getLogger(__name__)

SUBSTRATE_TRANSMISSION_MAX = 1e-4
TRANSMISSION_FLOOR = 1e-300


@dataclass(frozen=True)
class MaterialSample:
    """Measured reflection and transmission profiles of a slab of thickness D (mm)."""
    thickness: float
    refl_profile: RadialProfile
    trans_profile: RadialProfile
    name: str = "sample"

    def __post_init__(self):
        if not np.isfinite(self.thickness) or self.thickness <= 0:
            raise InvalidInputError(f"Sample thickness must be positive, but is {self.thickness}",
                                    key="thickness")
        if not np.array_equal(self.refl_profile.radii, self.trans_profile.radii):
            raise InvalidInputError("Reflection and transmission profiles must share radii", key="radii")

    @property
    def radii(self) -> np.ndarray:
        return self.refl_profile.radii


@dataclass(frozen=True, eq=False)
class KmConstants:
    """Per-frequency Kubelka-Munk scattering S(q) and absorption K(q) in 1/mm."""
    freqs: np.ndarray
    scattering: np.ndarray
    absorption: np.ndarray
    name: Optional[str] = field(default=None)

    def __post_init__(self):
        freqs = check_grid(self.freqs, "frequency")
        scattering = np.asarray(self.scattering, dtype=float)
        absorption = np.asarray(self.absorption, dtype=float)
        if scattering.shape != freqs.shape or absorption.shape != freqs.shape:
            raise InvalidInputError("Constants must be sampled on the frequency grid", key="km")
        if not (np.all(np.isfinite(scattering)) and np.all(np.isfinite(absorption))):
            raise NonPhysicalError("Kubelka-Munk constants must be finite", key="km")
        if scattering.min() < 0 or absorption.min() < 0:
            raise NonPhysicalError(f"Kubelka-Munk constants must be nonnegative (S min={scattering.min():.3e}, "
                                   f"K min={absorption.min():.3e})", key="km")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "scattering", scattering)
        object.__setattr__(self, "absorption", absorption)

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "freqs_per_mm": self.freqs.tolist(),
            "scattering_per_mm": self.scattering.tolist(),
            "absorption_per_mm": self.absorption.tolist()
        }

    @classmethod
    def from_dict(cls, spec: Dict) -> "KmConstants":
        try:
            return cls(np.asarray(spec["freqs_per_mm"], dtype=float),
                       np.asarray(spec["scattering_per_mm"], dtype=float),
                       np.asarray(spec["absorption_per_mm"], dtype=float),
                       name=spec.get("name"))
        except KeyError as e:
            raise InvalidInputError(f"Missing entry {e} in material constants", key=str(e))


def slab_profiles(km: KmConstants, d: float) -> SpectralSlab:
    """The closed-form Hankel-domain reflection and transmission of a slab of thickness d (mm)."""
    if not np.isfinite(d) or d < 0:
        raise InvalidInputError(f"Slab thickness must be nonnegative, but is {d}", key="d")
    s, k = km.scattering, km.absorption
    refl = np.zeros_like(s)
    trans = np.ones_like(s)

    pure_absorber = s <= 0
    trans[pure_absorber] = np.exp(-k[pure_absorber] * d)

    conservative = ~pure_absorber & (k <= 1e-15 * s)
    refl[conservative] = s[conservative] * d / (1 + s[conservative] * d)
    trans[conservative] = 1 / (1 + s[conservative] * d)

    general = ~pure_absorber & ~conservative
    if np.any(general):
        sg, kg = s[general], k[general]
        ratio = kg / sg
        a = 1 + ratio
        b = np.sqrt(ratio * (ratio + 2))
        x = np.sqrt(kg * (kg + 2 * sg)) * d
        # divided through by cosh(x) to stay finite for thick slabs
        tanh = np.tanh(x)
        sech = 2 * np.exp(-x) / (1 + np.exp(-2 * x))
        denom = a * tanh + b
        refl[general] = tanh / denom
        trans[general] = b * sech / denom
    return SpectralSlab(km.freqs, refl, trans, label=f"slab(d={d:g})")


def semi_infinite_reflectance(km: KmConstants) -> np.ndarray:
    """The d -> infinity limit of the slab reflectance, 1 / (a + b)."""
    s, k = km.scattering, km.absorption
    refl = np.zeros_like(s)
    scattering = s > 0
    ratio = k[scattering] / s[scattering]
    refl[scattering] = 1 / (1 + ratio + np.sqrt(ratio * (ratio + 2)))
    return refl


def transmissive_albedo(km: KmConstants, d: float) -> float:
    """The total transmission T(q = 0) of a slab of thickness d."""
    return float(slab_profiles(km, d).trans[0])


def thick_substrate_depth(km: KmConstants, start: float = 1.0, max_depth: float = 1e4) -> float:
    """Smallest doubling of 'start' whose slab transmits less than 1e-4 at q = 0."""
    depth = start
    while transmissive_albedo(km, depth) >= SUBSTRATE_TRANSMISSION_MAX:
        depth *= 2
        if depth > max_depth:
            raise NonPhysicalError(f"Material still transmits at {max_depth} mm; it cannot act as a substrate",
                                   key="substrate")
    return depth


def solid_reflectance(km: KmConstants, depth: Optional[float] = None) -> SpectralSlab:
    """Reflection of the solid material without a pocket (a thick slab)."""
    if depth is None:
        depth = thick_substrate_depth(km)
    return slab_profiles(km, depth)


def three_layer_reflectance(km: KmConstants, d: float, h: float,
                            substrate_depth: Optional[float] = None) -> SpectralSlab:
    """The stack cover slab (d) over air (h) over a thick substrate of the same material."""
    if substrate_depth is None:
        substrate_depth = thick_substrate_depth(km)
    cover = slab_profiles(km, d)
    gap = air_layer(h, km.freqs)
    substrate = slab_profiles(km, substrate_depth)
    return stack(cover, gap, substrate)


def _solve_halved(refl_target: np.ndarray, trans_target: np.ndarray, tol: float,
                  max_iter: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per frequency, find (r, t) with r + t^2 r / (1 - r^2) = R and t^2 / (1 - r^2) = T,
    i.e. a layer which stacked on itself yields (R, T). Damped Newton, vectorised over frequencies.
    """
    r = refl_target / 2
    t = np.sqrt(trans_target)
    r_scale = np.maximum(refl_target, TRANSMISSION_FLOOR)
    t_scale = np.maximum(trans_target, TRANSMISSION_FLOOR)

    def residuals(rr, tt):
        den = 1 - rr ** 2
        return (rr + tt ** 2 * rr / den - refl_target) / r_scale, (tt ** 2 / den - trans_target) / t_scale

    f1, f2 = residuals(r, t)
    for _ in range(max_iter):
        norm = np.maximum(np.abs(f1), np.abs(f2))
        active = norm > tol
        if not np.any(active):
            return r, t
        den = 1 - r ** 2
        # Jacobian of the unscaled residuals
        j11 = 1 + t ** 2 * (1 + r ** 2) / den ** 2
        j12 = 2 * t * r / den
        j21 = 2 * t ** 2 * r / den ** 2
        j22 = 2 * t / den
        g1 = f1 * r_scale
        g2 = f2 * t_scale
        det = j11 * j22 - j12 * j21
        det = np.where(np.abs(det) < 1e-300, 1e-300, det)
        dr = (g1 * j22 - g2 * j12) / det
        dt = (j11 * g2 - j21 * g1) / det

        step = np.where(active, 1.0, 0.0)
        new_r, new_t = r, t
        pending = active.copy()
        for _ in range(60):
            cand_r = r - step * dr
            cand_t = t - step * dt
            valid = (cand_r >= 0) & (cand_r < 1) & (cand_t >= 0)
            c1, c2 = residuals(np.where(valid, cand_r, r), np.where(valid, cand_t, t))
            better = valid & (np.maximum(np.abs(c1), np.abs(c2)) < norm)
            accept = pending & better
            new_r = np.where(accept, cand_r, new_r)
            new_t = np.where(accept, cand_t, new_t)
            pending &= ~better
            if not np.any(pending):
                break
            step = np.where(pending, step / 2, step)
        stalled = pending
        r, t = new_r, new_t
        f1, f2 = residuals(r, t)
        if np.all(stalled[active]):
            break
    norm = np.maximum(np.abs(f1), np.abs(f2))
    if np.any(norm > np.sqrt(tol)):
        where = int(np.argmax(norm))
        raise ConvergenceError(f"Newton solve of the halved layer failed (scaled residual {norm[where]:.3e} "
                               f"at frequency index {where})", key="newton")
    return r, t


def estimate_km_constants(sample: MaterialSample, freqs: np.ndarray, max_halvings: int = 30,
                          newton_tol: float = 1e-12, newton_max_iter: int = 100,
                          rtol: float = 1e-6, atol: float = 1e-12) -> KmConstants:
    """
    Estimate S(q) and K(q) from the measured profiles of one sample.

    The sample is repeatedly halved in the Hankel domain. For a layer of thickness d the estimates are
    S ~ R_d / d and K ~ (1 - R_d - T_d) / d; both have an O(d) bias, which is removed by Richardson
    extrapolation of consecutive halvings. A frequency has converged once consecutive extrapolated
    estimates agree to rtol.
    """
    freqs = check_grid(freqs, "frequency")
    refl = hankel_transform(sample.refl_profile, freqs)
    trans = hankel_transform(sample.trans_profile, freqs)
    return estimate_km_from_spectra(refl, trans, sample.thickness, freqs, max_halvings=max_halvings,
                                    newton_tol=newton_tol, newton_max_iter=newton_max_iter,
                                    rtol=rtol, atol=atol, name=sample.name)


def estimate_km_from_spectra(refl: np.ndarray, trans: np.ndarray, thickness: float, freqs: np.ndarray,
                             max_halvings: int = 30, newton_tol: float = 1e-12, newton_max_iter: int = 100,
                             rtol: float = 1e-6, atol: float = 1e-12, name: str = None) -> KmConstants:
    """See estimate_km_constants; works on the Hankel-domain profiles of a slab of the given thickness."""
    refl = np.clip(np.asarray(refl, dtype=float), 0.0, None)
    trans = np.clip(np.asarray(trans, dtype=float), TRANSMISSION_FLOOR, None)
    if refl[0] + trans[0] > 1 + 1e-6:
        raise NonPhysicalError(f"Sample albedo R(0) + T(0) = {refl[0] + trans[0]:.6f} exceeds 1", key="energy")
    # measurement noise may push single frequencies above one
    excess = refl + trans
    scale = np.where(excess > 1 - 1e-12, (1 - 1e-12) / excess, 1.0)
    refl, trans = refl * scale, trans * scale

    n = freqs.size
    scattering = np.zeros(n)
    absorption = np.zeros(n)
    done = np.zeros(n, dtype=bool)
    prev_raw: Optional[Tuple[np.ndarray, np.ndarray]] = None
    prev_extrapolated: Optional[Tuple[np.ndarray, np.ndarray]] = None
    d = thickness
    r, t = refl, trans
    for halving in range(1, max_halvings + 1):
        r, t = _solve_halved(r, t, newton_tol, newton_max_iter)
        d = d / 2
        s_raw = r / d
        k_raw = np.clip(1 - r - t, 0.0, None) / d
        if prev_raw is not None:
            s_ext = np.clip(2 * s_raw - prev_raw[0], 0.0, None)
            k_ext = np.clip(2 * k_raw - prev_raw[1], 0.0, None)
            if prev_extrapolated is not None:
                s_ok = np.abs(s_ext - prev_extrapolated[0]) <= rtol * np.abs(s_ext) + atol
                k_ok = np.abs(k_ext - prev_extrapolated[1]) <= rtol * np.abs(k_ext) + atol
                newly = ~done & s_ok & k_ok
                scattering[newly] = s_ext[newly]
                absorption[newly] = k_ext[newly]
                done |= newly
                module_logger.debug("Halving %d (d=%.3e mm): %d/%d frequencies converged",
                                    halving, d, int(done.sum()), n)
                if np.all(done):
                    module_logger.info("Kubelka-Munk constants converged after %d halvings", halving)
                    return KmConstants(freqs, scattering, absorption, name=name)
            prev_extrapolated = (s_ext, k_ext)
        prev_raw = (s_raw, k_raw)
    where = int(np.argmin(done))
    raise ConvergenceError(f"Kubelka-Munk estimate did not converge after {max_halvings} halvings "
                           f"({int((~done).sum())} frequencies open, first at q={freqs[where]:.4f}/mm)",
                           key="halving")


def km_from_slab(slab: SpectralSlab, thickness: float, **kwargs) -> KmConstants:
    """Estimate constants directly from Hankel-domain slab profiles of the given thickness."""
    return estimate_km_from_spectra(slab.refl, slab.trans, thickness, slab.freqs, **kwargs)
