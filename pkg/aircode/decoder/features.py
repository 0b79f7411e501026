"""
Cell features: the mean intensity of the pixels at integer distance j from the cell centre, for all
rings inside half the feature span. Each vector is shifted to zero mean and scaled to unit norm.
"""
import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from aircode.imager.images import GrayImage
from aircode.settings import DecoderConfig

module_logger = logging.getLogger(__name__)

DEGENERATE_NORM = 1e-12


def ring_count(config: DecoderConfig) -> int:
    """Rings with radius below span * px_per_cell / 2, e.g. 28 for a 7-cell span at 8 px per cell."""
    return int(np.ceil(config.feature_span_cells * config.out_px_per_cell / 2))


def normalize(vector: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Zero mean, unit norm; (zeros, True) when nothing is left after removing the mean."""
    centered = vector - vector.mean()
    norm = np.linalg.norm(centered)
    if norm < DEGENERATE_NORM:
        return np.zeros_like(vector), True
    return centered / norm, False


def ring_means(rect: GrayImage, cell: Tuple[int, int], config: DecoderConfig) -> np.ndarray:
    ppc = config.out_px_per_cell
    rings = ring_count(config)
    radius = config.feature_span_cells * ppc / 2
    row, col = cell
    cy, cx = (row + 0.5) * ppc - 0.5, (col + 0.5) * ppc - 0.5
    r0, r1 = max(int(np.floor(cy - radius)), 0), min(int(np.ceil(cy + radius)) + 1, rect.height)
    c0, c1 = max(int(np.floor(cx - radius)), 0), min(int(np.ceil(cx + radius)) + 1, rect.width)
    window = rect.pixels[r0:r1, c0:c1]
    rows, cols = np.mgrid[r0:r1, c0:c1]
    rho = np.hypot(rows - cy, cols - cx)
    inside = rho < radius
    index = np.floor(rho[inside]).astype(int)
    sums = np.bincount(index, weights=window[inside], minlength=rings)[:rings]
    counts = np.bincount(index, minlength=rings)[:rings]
    means = np.full(rings, window[inside].mean())
    filled = counts > 0
    means[filled] = sums[filled] / counts[filled]
    return means


def extract_features(rect: GrayImage, cell: Tuple[int, int], config: Optional[DecoderConfig] = None) -> np.ndarray:
    """Normalized ring means around one cell; the neighbourhood is clipped at the tag boundary."""
    config = config or DecoderConfig()
    n = rect.height // config.out_px_per_cell
    if not (0 <= cell[0] < n and 0 <= cell[1] < n):
        raise IndexError(f"Cell {cell} outside of the {n}x{n} grid")
    features, _ = normalize(ring_means(rect, cell, config))
    return features


def feature_matrix(rect: GrayImage, cells: Sequence[Tuple[int, int]],
                   config: Optional[DecoderConfig] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Features of several cells as rows, with a flag per row for degenerate (flat) neighbourhoods."""
    config = config or DecoderConfig()
    rows, flags = [], []
    for cell in cells:
        vector, degenerate = normalize(ring_means(rect, cell, config))
        rows.append(vector)
        flags.append(degenerate)
    if any(flags):
        module_logger.warning("%d of %d cells have flat neighbourhoods", sum(flags), len(cells))
    return np.array(rows).reshape(len(cells), ring_count(config)), np.array(flags, dtype=bool)
