"""
Zero-order Hankel transform pair for radially symmetric profiles.

    H(q) = 2*pi * int_0^r_max f(r) J0(q r) r dr
    f(r) = 1/(2*pi) * int_0^q_max H(q) J0(q r) q dq

Both directions use Gregory end-corrected trapezoidal weights on uniform grids (plain trapezoid
otherwise), so that at q = 0 the forward transform is the albedo of the profile.
"""
import logging
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy import special

from aircode.errors import InvalidInputError, NonPhysicalError
from aircode.scatter.profiles import RadialProfile, check_grid

module_logger = logging.getLogger(__name__)

NEGATIVE_CLIP_FRACTION = 1e-3


def quadrature_weights(x: np.ndarray) -> np.ndarray:
    """Weights w such that sum(w * g(x)) approximates int g over [x[0], x[-1]]."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        return np.zeros(n)
    steps = np.diff(x)
    if n >= 6 and np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        dx = steps[0]
        w = np.full(n, dx)
        head = np.array([3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0]) * dx
        w[:3] = head
        w[-3:] = head[::-1]
        return w
    w = np.zeros(n)
    w[:-1] += steps / 2
    w[1:] += steps / 2
    return w


@lru_cache(maxsize=16)
def _bessel_kernel(outer: bytes, inner: bytes) -> np.ndarray:
    a = np.frombuffer(outer, dtype=float)
    b = np.frombuffer(inner, dtype=float)
    kernel = special.j0(np.outer(a, b))
    kernel.setflags(write=False)
    return kernel


def bessel_kernel(outer: np.ndarray, inner: np.ndarray) -> np.ndarray:
    """The matrix J0(outer_i * inner_j), cached per grid pair."""
    return _bessel_kernel(np.ascontiguousarray(outer, dtype=float).tobytes(),
                          np.ascontiguousarray(inner, dtype=float).tobytes())


def hankel_transform(profile: RadialProfile, freqs: np.ndarray) -> np.ndarray:
    """
    Forward transform of a radial profile to the given frequencies (1/mm).
    :param profile: the sampled profile f(r); treated as zero beyond its last radius
    :param freqs: ascending frequencies starting at 0
    :return: H(q) sampled at freqs
    """
    freqs = check_grid(freqs, "frequency")
    if profile.values.size == 0:
        raise InvalidInputError("Cannot transform an empty profile", key="profile")
    r = profile.radii
    weighted = quadrature_weights(r) * r * profile.values
    return 2 * np.pi * (bessel_kernel(freqs, r) @ weighted)


def _check_sampling(freqs: np.ndarray, radii: np.ndarray):
    dq = float(np.max(np.diff(freqs))) if freqs.size > 1 else 0.0
    limit = np.pi / radii[-1] if radii[-1] > 0 else np.inf
    if dq > limit * (1 + 1e-9):
        raise InvalidInputError(f"Frequency spacing {dq:.5f}/mm is too coarse for r_max={radii[-1]} mm "
                                f"(must be at most pi/r_max = {limit:.5f}/mm)", key="sampling")


def inverse_hankel_values(spectrum: np.ndarray, freqs: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Inverse transform without the positivity handling; may contain negative ringing."""
    freqs = check_grid(freqs, "frequency")
    radii = check_grid(radii, "radius")
    spectrum = np.asarray(spectrum, dtype=float)
    if spectrum.shape != freqs.shape:
        raise InvalidInputError(f"Spectrum has {spectrum.size} samples for {freqs.size} frequencies",
                                key="spectrum")
    _check_sampling(freqs, radii)
    weighted = quadrature_weights(freqs) * freqs * spectrum
    return (bessel_kernel(radii, freqs) @ weighted) / (2 * np.pi)


def inverse_hankel(spectrum: np.ndarray, freqs: np.ndarray, radii: np.ndarray) -> RadialProfile:
    """
    Inverse transform of a spectrum sampled at freqs onto the given radii.

    Negative ringing down to a small fraction of the peak is clipped to zero; deeper negative lobes
    mean the spectrum is not band-limited on this grid and raise a NonPhysicalError.
    """
    values = inverse_hankel_values(spectrum, freqs, radii)
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    lowest = float(values.min()) if values.size else 0.0
    if lowest < 0:
        if lowest < -NEGATIVE_CLIP_FRACTION * peak:
            raise NonPhysicalError(f"Inverse transform has a negative lobe of {lowest:.3e} "
                                   f"(peak {peak:.3e})", key="band_limit")
        module_logger.debug("Clipping negative ringing down to %.3e (peak %.3e)", lowest, peak)
        values = np.clip(values, 0.0, None)
    return RadialProfile(np.asarray(radii, dtype=float), values)


def round_trip_error(profile: RadialProfile, freqs: np.ndarray) -> Tuple[float, np.ndarray]:
    """Relative L2 error of inverse(forward(profile)) on the profile's own radii."""
    spectrum = hankel_transform(profile, freqs)
    restored = inverse_hankel_values(spectrum, freqs, profile.radii)
    norm = np.linalg.norm(profile.values)
    if norm == 0:
        return float(np.linalg.norm(restored)), restored
    return float(np.linalg.norm(restored - profile.values) / norm), restored
