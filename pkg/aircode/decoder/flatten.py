import logging

import numpy as np

from aircode.imager.degrade import normalized_coordinates
from aircode.imager.images import GrayImage

module_logger = logging.getLogger(__name__)


def quadratic_design(shape) -> np.ndarray:
    x, y = normalized_coordinates(shape)
    x, y = x.ravel(), y.ravel()
    return np.column_stack([np.ones_like(x), x, y, x * x, x * y, y * y])


def fit_quadratic(image: GrayImage) -> np.ndarray:
    """Least-squares coefficients (c0, cx, cy, cxx, cxy, cyy) of the intensity over normalized coordinates."""
    design = quadratic_design(image.shape)
    coeffs, _, rank, _ = np.linalg.lstsq(design, image.pixels.ravel(), rcond=None)
    if rank < design.shape[1]:
        return None
    return coeffs


def flatten_intensity(image: GrayImage) -> GrayImage:
    """Remove a quadratic intensity trend while keeping the mean level: img - p + mean(p)."""
    coeffs = fit_quadratic(image)
    if coeffs is None:
        module_logger.debug("Image of %s pixels is too small for a quadratic fit", image.shape)
        return image
    trend = (quadratic_design(image.shape) @ coeffs).reshape(image.shape)
    return image.with_pixels(image.pixels - trend + trend.mean())
