"""Air layers and the composition of stacked layers in the Hankel domain."""
import logging

import numpy as np

from aircode.errors import InvalidInputError, NonPhysicalError
from aircode.scatter.profiles import RadialProfile, SpectralSlab, check_grid

module_logger = logging.getLogger(__name__)


def air_layer(h: float, freqs: np.ndarray) -> SpectralSlab:
    """
    The Hankel-domain profiles of an air gap of height h (mm) under a Lambertian assumption.

    Air does not reflect; its transmission kernel h / (2*pi*(h^2 + r^2)^1.5) transforms to exp(-h q),
    hence the total transmission at q = 0 is exactly 1.
    """
    if not np.isfinite(h) or h <= 0:
        raise InvalidInputError(f"Air layer height must be positive, but is {h}", key="h")
    freqs = check_grid(freqs, "frequency")
    return SpectralSlab(freqs, np.zeros_like(freqs), np.exp(-h * freqs), label=f"air(h={h:g})")


def air_transmission_profile(h: float, radii: np.ndarray) -> RadialProfile:
    """The spatial transmission kernel of an air gap, sampled at the given radii."""
    if not np.isfinite(h) or h <= 0:
        raise InvalidInputError(f"Air layer height must be positive, but is {h}", key="h")
    radii = check_grid(radii, "radius")
    return RadialProfile(radii, h / (2 * np.pi * (h ** 2 + radii ** 2) ** 1.5))


def compose_layers(top: SpectralSlab, bottom: SpectralSlab) -> SpectralSlab:
    """
    Stack two layers, summing all inter-reflections between them:

        R = R1 + T1^2 R2 / (1 - R1 R2)
        T = T1 T2 / (1 - R1 R2)
    """
    if not top.same_grid(bottom):
        raise InvalidInputError("Layers must be sampled on the same frequency grid", key="frequency")
    loop = top.refl * bottom.refl
    if np.any(loop >= 1.0):
        where = int(np.argmax(loop >= 1.0))
        raise NonPhysicalError(f"Inter-reflection diverges at q={top.freqs[where]:.4f}/mm "
                               f"(R1*R2={loop[where]:.6f})", key="composition")
    denom = 1.0 - loop
    refl = top.refl + top.trans ** 2 * bottom.refl / denom
    trans = top.trans * bottom.trans / denom
    return SpectralSlab(top.freqs, refl, trans, label=f"{top.label}|{bottom.label}")


def stack(*layers: SpectralSlab) -> SpectralSlab:
    """Compose layers from top to bottom."""
    if not layers:
        raise InvalidInputError("Nothing to stack", key="layers")
    result = layers[-1]
    for layer in reversed(layers[:-1]):
        result = compose_layers(layer, result)
    return result
