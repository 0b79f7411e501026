"""Sampled radial profiles, Hankel-domain slab spectra and the default sampling grids."""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from aircode.errors import InvalidInputError, NonPhysicalError

module_logger = logging.getLogger(__name__)

RADIAL_SAMPLES = 512
R_MAX_MM = 20.0
FREQ_SAMPLES = 512
Q_MAX_PER_MM = 25.6

ENERGY_TOLERANCE = 1e-6
NEGATIVE_TOLERANCE = 1e-12


def radial_grid(samples: int = RADIAL_SAMPLES, r_max: float = R_MAX_MM) -> np.ndarray:
    """Uniform radius samples on [0, r_max] in mm."""
    if samples < 3 or r_max <= 0:
        raise InvalidInputError(f"Invalid radial grid: samples={samples}, r_max={r_max}", key="radial_grid")
    return np.linspace(0.0, r_max, samples)


def frequency_grid(samples: int = FREQ_SAMPLES, q_max: float = Q_MAX_PER_MM) -> np.ndarray:
    """Uniform Hankel frequencies on [0, q_max] in 1/mm."""
    if samples < 3 or q_max <= 0:
        raise InvalidInputError(f"Invalid frequency grid: samples={samples}, q_max={q_max}", key="frequency_grid")
    return np.linspace(0.0, q_max, samples)


def check_grid(grid: np.ndarray, name: str) -> np.ndarray:
    """Validate a sampling grid: 1-D, starting at 0, strictly ascending and finite."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidInputError(f"The {name} grid must be a non-empty 1-D array", key=name)
    if not np.all(np.isfinite(grid)):
        raise InvalidInputError(f"The {name} grid contains non-finite values", key=name)
    if grid[0] != 0.0:
        raise InvalidInputError(f"The {name} grid must start at 0, but starts at {grid[0]}", key=name)
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise InvalidInputError(f"The {name} grid must be strictly ascending", key=name)
    return grid


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """A radially symmetric function f(r) sampled at ascending radii (mm), values in 1/mm^2."""
    radii: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        radii = check_grid(self.radii, "radius")
        values = np.asarray(self.values, dtype=float)
        if values.shape != radii.shape:
            raise InvalidInputError(f"Profile has {values.size} values for {radii.size} radii", key="profile")
        if radii.size < 2:
            raise InvalidInputError("A profile needs at least two samples", key="profile")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("Profile values must be finite", key="profile")
        if np.any(values < 0):
            raise InvalidInputError(f"Profile values must be nonnegative (min={values.min():.3e})", key="profile")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)

    @property
    def r_max(self) -> float:
        return float(self.radii[-1])

    @property
    def spacing(self) -> float:
        return float(self.radii[1] - self.radii[0])

    def total(self) -> float:
        """The integral 2*pi*int_0^r_max f(r) r dr (trapezoidal), i.e. the profile's albedo."""
        return float(2 * np.pi * np.trapz(self.values * self.radii, self.radii))

    def disc_integral(self, radius: float) -> float:
        """The integral of the profile over a centered disc of the given radius."""
        radius = min(radius, self.r_max)
        inside = self.radii <= radius
        r = np.append(self.radii[inside], radius) if self.radii[inside][-1] < radius else self.radii[inside]
        f = np.interp(r, self.radii, self.values)
        return float(2 * np.pi * np.trapz(f * r, r))

    def enclosed_energy(self) -> np.ndarray:
        """2*pi*int_0^r f(s) s ds at every sample radius r (trapezoidal)."""
        weighted = self.values * self.radii
        steps = np.diff(self.radii) * (weighted[1:] + weighted[:-1]) / 2
        return 2 * np.pi * np.concatenate(([0.0], np.cumsum(steps)))

    def energy_radius(self, fraction: float = 0.9) -> float:
        """The smallest radius whose disc holds the given fraction of the profile's total energy (mm)."""
        if not 0 < fraction <= 1:
            raise InvalidInputError(f"Energy fraction must be in (0, 1], but is {fraction}", key="fraction")
        cumulative = self.enclosed_energy()
        total = cumulative[-1]
        if total <= 0:
            return 0.0
        index = int(np.searchsorted(cumulative, fraction * total))
        if index == 0:
            return 0.0
        lo, hi = cumulative[index - 1], cumulative[index]
        r_lo, r_hi = self.radii[index - 1], self.radii[index]
        return float(r_lo + (fraction * total - lo) / (hi - lo) * (r_hi - r_lo))

    def at(self, r) -> np.ndarray:
        """Linear interpolation of the profile; zero beyond r_max."""
        return np.interp(r, self.radii, self.values, right=0.0)

    def check_energy(self):
        albedo = self.total()
        if albedo > 1 + ENERGY_TOLERANCE:
            raise NonPhysicalError(f"Profile integrates to {albedo:.6f} > 1", key="energy")
        return albedo


@dataclass(frozen=True, eq=False)
class SpectralSlab:
    """Hankel-domain reflection and transmission of one layer, sampled at ascending frequencies (1/mm)."""
    freqs: np.ndarray
    refl: np.ndarray
    trans: np.ndarray
    label: Optional[str] = field(default=None)

    def __post_init__(self):
        freqs = check_grid(self.freqs, "frequency")
        refl = np.asarray(self.refl, dtype=float)
        trans = np.asarray(self.trans, dtype=float)
        if refl.shape != freqs.shape or trans.shape != freqs.shape:
            raise InvalidInputError("Reflection and transmission must be sampled on the frequency grid",
                                    key="spectral_slab")
        if not (np.all(np.isfinite(refl)) and np.all(np.isfinite(trans))):
            raise NonPhysicalError("Spectral samples must be finite", key="spectral_slab")
        if refl.min() < -NEGATIVE_TOLERANCE or trans.min() < -NEGATIVE_TOLERANCE:
            raise NonPhysicalError(f"Negative spectral samples (refl min={refl.min():.3e}, "
                                   f"trans min={trans.min():.3e})", key="spectral_slab")
        refl = np.clip(refl, 0.0, None)
        trans = np.clip(trans, 0.0, None)
        if refl[0] + trans[0] > 1 + ENERGY_TOLERANCE:
            raise NonPhysicalError(f"Total albedo R(0) + T(0) = {refl[0] + trans[0]:.8f} exceeds 1",
                                   key="energy")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "refl", refl)
        object.__setattr__(self, "trans", trans)

    @classmethod
    def identity(cls, freqs: np.ndarray) -> "SpectralSlab":
        """The neutral layer: no reflection, full transmission."""
        freqs = np.asarray(freqs, dtype=float)
        return cls(freqs, np.zeros_like(freqs), np.ones_like(freqs), label="identity")

    @property
    def albedo(self) -> float:
        """Total albedo R(0) + T(0)."""
        return float(self.refl[0] + self.trans[0])

    def same_grid(self, other: "SpectralSlab") -> bool:
        return self.freqs.shape == other.freqs.shape and np.array_equal(self.freqs, other.freqs)

    def __repr__(self):
        return (f"SpectralSlab(label={self.label}, n={self.freqs.size}, "
                f"R(0)={self.refl[0]:.6f}, T(0)={self.trans[0]:.6f})")
