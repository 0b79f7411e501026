import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import cv2
import numpy as np

from aircode.codec.layout import CORNERS, TagConfig, corner_adjacency, marker_centers
from aircode.decoder.quad import MarkerQuad
from aircode.errors import AmbiguousOrientationError, StageError
from aircode.imager.images import GrayImage
from aircode.settings import DecoderConfig

module_logger = logging.getLogger(__name__)


def rect_to_tag(tag_config: TagConfig, px_per_cell: int) -> np.ndarray:
    """Maps rectified pixel indices (col, row, 1) to tag millimetres at the pixel centres."""
    step = tag_config.cell_size_mm / px_per_cell
    return np.array([[step, 0.0, 0.5 * step], [0.0, step, 0.5 * step], [0.0, 0.0, 1.0]])


def tag_to_image(quad: MarkerQuad, tag_config: TagConfig) -> np.ndarray:
    """Homography from tag millimetres to image pixels through the four marker centres."""
    return cv2.getPerspectiveTransform(marker_centers(tag_config).astype(np.float32),
                                       quad.corners.astype(np.float32))


def rectify(image: GrayImage, quad: MarkerQuad, tag_config: TagConfig, px_per_cell: int = 8) -> GrayImage:
    """
    Resample the tag onto a canonical grid of grid_dims * px_per_cell pixels per side, quad corner i landing
    on the centre of marker i (top left, top right, bottom right, bottom left). The pitch of the result is in
    tag millimetres.
    """
    rect_to_image = tag_to_image(quad, tag_config) @ rect_to_tag(tag_config, px_per_cell)
    if abs(np.linalg.det(rect_to_image)) < 1e-12:
        raise StageError("Marker quad does not give an invertible homography", stage="rectify")
    size = tag_config.grid_dims * px_per_cell
    pixels = cv2.warpPerspective(image.pixels.astype(np.float32), rect_to_image, (size, size),
                                 flags=cv2.INTER_LINEAR | cv2.WARP_INVERSE_MAP, borderMode=cv2.BORDER_REPLICATE)
    return GrayImage.clipped(pixels.astype(float), tag_config.cell_size_mm / px_per_cell)


def cell_means(rect: GrayImage, px_per_cell: int) -> np.ndarray:
    """Mean intensity of each grid cell of a rectified tag."""
    n = rect.height // px_per_cell
    blocks = rect.pixels[:n * px_per_cell, :n * px_per_cell].reshape(n, px_per_cell, n, px_per_cell)
    return blocks.mean(axis=(1, 3))


@dataclass(frozen=True)
class Orientation:
    quarter_turns: int
    margin: float
    corner_means: Tuple[float, float, float, float]

    @property
    def degrees(self) -> int:
        return 90 * self.quarter_turns

    def apply(self, rect: GrayImage) -> GrayImage:
        """Rotate the rectified image so the orientation marker ends up bottom right."""
        return GrayImage(np.ascontiguousarray(np.rot90(rect.pixels, self.quarter_turns)), rect.pitch_mm)

    def corrected_quad(self, quad: MarkerQuad) -> MarkerQuad:
        """The quad relabelled so corner i is the image position of the tag's marker i."""
        return quad.rolled(self.quarter_turns)


def identify_orientation(rect: GrayImage, tag_config: TagConfig,
                         config: Optional[DecoderConfig] = None) -> Orientation:
    """
    The orientation cells are all air and image darkest. The number of counter-clockwise quarter turns
    that brings the darkest marker surround to the bottom right is returned with the relative margin
    (second lowest - lowest) / mean of the four surround means.
    """
    config = config or DecoderConfig()
    means = cell_means(rect, config.out_px_per_cell)
    adjacency = corner_adjacency(tag_config.grid_dims, tag_config.marker_block)
    corner_means = np.array([np.mean([means[r, c] for r, c in adjacency[corner]]) for corner in CORNERS])
    ranked = np.sort(corner_means)
    level = corner_means.mean()
    margin = float((ranked[1] - ranked[0]) / level) if level > 0 else 0.0
    if margin < config.orientation_margin_min:
        raise AmbiguousOrientationError(f"Orientation margin {margin:.4f} is below "
                                        f"{config.orientation_margin_min}")
    turns = (int(np.argmin(corner_means)) - 2) % 4
    module_logger.debug("Orientation: %d quarter turns, margin %.4f", turns, margin)
    return Orientation(turns, margin, tuple(float(m) for m in corner_means))
