"""
Planar pose from the marker quad. With K the camera intrinsics and H the homography from plane
millimetres to pixels, K^-1 H = lambda [r1 r2 t] up to sign; r3 = r1 x r2 completes the rotation.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import cv2
import numpy as np

from aircode.decoder.quad import MarkerQuad
from aircode.errors import InvalidPoseError

module_logger = logging.getLogger(__name__)

MAX_REPROJECTION_PX = 1.0


@dataclass(frozen=True, eq=False)
class PoseEstimate:
    rotation: np.ndarray
    translation: np.ndarray
    reprojection_rms: float

    @property
    def tilt_deg(self) -> float:
        return float(np.rad2deg(np.arccos(np.clip(abs(self.rotation[2, 2]), 0.0, 1.0))))

    def to_dict(self):
        return {"rotation": self.rotation.tolist(), "translation_mm": self.translation.tolist(),
                "reprojection_rms_px": self.reprojection_rms, "tilt_deg": self.tilt_deg}


def square_corners_mm(side_mm: float) -> np.ndarray:
    """Marker centres in plane millimetres around the tag centre, ordered TL, TR, BR, BL."""
    half = side_mm / 2
    return np.array([[-half, -half], [half, -half], [half, half], [-half, half]])


def nearest_rotation(matrix: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(matrix)
    rotation = u @ vt
    if np.linalg.det(rotation) < 0:
        rotation = u @ np.diag([1.0, 1.0, -1.0]) @ vt
    return rotation


def reprojection_rms(rotation: np.ndarray, translation: np.ndarray, intrinsics: np.ndarray,
                     world: np.ndarray, image: np.ndarray) -> float:
    homography = intrinsics @ np.column_stack([rotation[:, 0], rotation[:, 1], translation])
    projected = np.column_stack([world, np.ones(len(world))]) @ homography.T
    projected = projected[:, :2] / projected[:, 2:]
    return float(np.sqrt(np.mean(np.sum((projected - image) ** 2, axis=1))))


def estimate_pose(quad: MarkerQuad, intrinsics: np.ndarray, marker_square_mm: float,
                  max_reprojection_px: Optional[float] = MAX_REPROJECTION_PX) -> PoseEstimate:
    """
    Pose of the tag plane from a quad whose corners are labelled like the tag's markers. Of the two sign
    solutions the one in front of the camera with the lower reprojection error is returned.
    """
    world = square_corners_mm(marker_square_mm)
    homography, _ = cv2.findHomography(world, quad.corners, 0)
    if homography is None:
        raise InvalidPoseError("Marker centres do not define a homography")
    normalized = np.linalg.solve(intrinsics, homography)
    scale = 2.0 / (np.linalg.norm(normalized[:, 0]) + np.linalg.norm(normalized[:, 1]))

    best: Optional[PoseEstimate] = None
    for sign in (1.0, -1.0):
        r1, r2, t = (sign * scale * normalized[:, i] for i in range(3))
        if t[2] <= 0:
            continue
        rotation = nearest_rotation(np.column_stack([r1, r2, np.cross(r1, r2)]))
        error = reprojection_rms(rotation, t, intrinsics, world, quad.corners)
        if best is None or error < best.reprojection_rms:
            best = PoseEstimate(rotation, t, error)
    if best is None:
        raise InvalidPoseError("No pose solution places the tag in front of the camera")
    if max_reprojection_px is not None and best.reprojection_rms > max_reprojection_px:
        raise InvalidPoseError(f"Pose reprojects with {best.reprojection_rms:.2f} px RMS, "
                               f"more than {max_reprojection_px} px")
    module_logger.debug("Pose: tilt %.2f deg, distance %.1f mm, reprojection %.3f px",
                        best.tilt_deg, best.translation[2], best.reprojection_rms)
    return best


def rotation_error_deg(estimated: np.ndarray, reference: np.ndarray) -> float:
    """Angle of the rotation that takes one rotation matrix into the other."""
    cosine = (np.trace(estimated.T @ reference) - 1.0) / 2.0
    return float(np.rad2deg(np.arccos(np.clip(cosine, -1.0, 1.0))))
