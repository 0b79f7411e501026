"""
Pinhole view of the planar tag.

The tag lies in the world plane z = 0 with X to the right, Y downwards and the origin at the centre of
the rendered scene; camera coordinates are X_cam = R X + t. A rendered image with pixel pitch p maps to
the camera through the plane-induced homography H = K [r1 r2 t] S, where S takes source pixel indices
to plane millimetres.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import cv2
import numpy as np

from aircode.codec.layout import TagLayout
from aircode.errors import InvalidInputError
from aircode.imager.images import GrayImage

module_logger = logging.getLogger(__name__)

MAX_TILT_DEG = 80.0
ORTHONORMAL_TOL = 1e-9


def axis_rotation(angle_deg: float, axis: str = "x") -> np.ndarray:
    a = np.deg2rad(angle_deg)
    c, s = np.cos(a), np.sin(a)
    if axis == "x":
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    if axis == "y":
        return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
    if axis == "z":
        return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    raise InvalidInputError(f"Unknown rotation axis '{axis}'", key="axis")


@dataclass(frozen=True, eq=False)
class CameraModel:
    focal_px: float
    principal_point: Tuple[float, float]
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 400.0]))
    width: int = 400
    height: int = 400

    def __post_init__(self):
        rotation = np.asarray(self.rotation, dtype=float)
        translation = np.asarray(self.translation, dtype=float).reshape(3)
        if rotation.shape != (3, 3) or np.abs(rotation.T @ rotation - np.eye(3)).max() > ORTHONORMAL_TOL \
                or np.linalg.det(rotation) < 0:
            raise InvalidInputError("Camera rotation must be a proper orthonormal 3x3 matrix", key="rotation")
        if self.focal_px <= 0:
            raise InvalidInputError(f"Focal length must be positive, but is {self.focal_px}", key="focal")
        if translation[2] <= 0:
            raise InvalidInputError("The tag plane lies behind the camera", key="pose")
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)
        if self.tilt_deg > MAX_TILT_DEG:
            raise InvalidInputError(f"Tag plane is tilted by {self.tilt_deg:.1f} deg, "
                                    f"beyond {MAX_TILT_DEG} deg", key="pose")

    @classmethod
    def frontal(cls, focal_px: float, standoff_mm: float, width: int, height: int) -> "CameraModel":
        return cls.tilted(0.0, "x", focal_px, standoff_mm, width, height)

    @classmethod
    def tilted(cls, tilt_deg: float, axis: str = "x", focal_px: float = 4000.0, standoff_mm: float = 400.0,
               width: int = 400, height: int = 400) -> "CameraModel":
        """A camera looking at the tag centre from standoff_mm with the tag rotated about one of its axes."""
        return cls(focal_px, ((width - 1) / 2, (height - 1) / 2), axis_rotation(tilt_deg, axis),
                   np.array([0.0, 0.0, standoff_mm]), width, height)

    @property
    def intrinsics(self) -> np.ndarray:
        cx, cy = self.principal_point
        return np.array([[self.focal_px, 0.0, cx], [0.0, self.focal_px, cy], [0.0, 0.0, 1.0]])

    @property
    def tilt_deg(self) -> float:
        """Angle between the tag normal and the optical axis."""
        return float(np.rad2deg(np.arccos(np.clip(abs(self.rotation[2, 2]), 0.0, 1.0))))

    @property
    def plane_homography(self) -> np.ndarray:
        """Maps plane millimetres (X, Y, 1) to camera pixels."""
        rt = np.column_stack([self.rotation[:, 0], self.rotation[:, 1], self.translation])
        return self.intrinsics @ rt

    @property
    def nominal_pitch_mm(self) -> float:
        return float(self.translation[2] / self.focal_px)

    def depth_of(self, points_mm: np.ndarray) -> np.ndarray:
        points_mm = np.atleast_2d(points_mm)
        return points_mm @ self.rotation[2, :2] + self.translation[2]

    def project(self, points_mm: np.ndarray) -> np.ndarray:
        """Project plane points (N, 2) in mm to pixel coordinates (N, 2)."""
        points_mm = np.atleast_2d(np.asarray(points_mm, dtype=float))
        homogeneous = np.column_stack([points_mm, np.ones(len(points_mm))]) @ self.plane_homography.T
        return homogeneous[:, :2] / homogeneous[:, 2:]

    def image_homography(self, pitch_mm: float, source_shape: Tuple[int, int]) -> np.ndarray:
        """Maps source pixel indices (col, row, 1) of an image of the given pitch to camera pixels."""
        return self.plane_homography @ pixel_to_plane(pitch_mm, source_shape)


def pixel_to_plane(pitch_mm: float, shape: Tuple[int, int]) -> np.ndarray:
    """Pixel indices (col, row) of an image centred on the plane origin to plane millimetres."""
    height, width = shape
    return np.array([[pitch_mm, 0.0, pitch_mm * (0.5 - width / 2)],
                     [0.0, pitch_mm, pitch_mm * (0.5 - height / 2)],
                     [0.0, 0.0, 1.0]])


def plane_to_pixel(points_mm: np.ndarray, pitch_mm: float, shape: Tuple[int, int]) -> np.ndarray:
    points_mm = np.atleast_2d(np.asarray(points_mm, dtype=float))
    height, width = shape
    return np.column_stack([points_mm[:, 0] / pitch_mm - 0.5 + width / 2,
                            points_mm[:, 1] / pitch_mm - 0.5 + height / 2])


def marker_plane_mm(layout: TagLayout) -> np.ndarray:
    """Marker centres in plane coordinates (origin at the tag centre), ordered TL, TR, BR, BL."""
    return layout.marker_centers_mm - layout.config.footprint_mm / 2


def _border_level(pixels: np.ndarray) -> float:
    return float(np.mean(np.concatenate([pixels[0], pixels[-1], pixels[1:-1, 0], pixels[1:-1, -1]])))


def apply_camera(image: GrayImage, camera: CameraModel, background: Optional[float] = None) -> GrayImage:
    """
    View a frontal image through the camera with bilinear resampling. Camera pixels that see no part
    of the image take the background level, by default the mean of the image border.
    """
    height, width = image.shape
    corners = pixel_to_plane(image.pitch_mm, image.shape) @ np.array(
        [[-0.5, -0.5, 1], [width - 0.5, -0.5, 1], [width - 0.5, height - 0.5, 1], [-0.5, height - 0.5, 1]]).T
    if np.any(camera.depth_of(corners[:2].T) <= 0):
        raise InvalidInputError("Part of the tag plane lies behind the camera", key="pose")
    background = _border_level(image.pixels) if background is None else background
    homography = camera.image_homography(image.pitch_mm, image.shape)
    warped = cv2.warpPerspective(image.pixels.astype(np.float32), homography, (camera.width, camera.height),
                                 flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_CONSTANT,
                                 borderValue=float(background))
    module_logger.debug("Warped %s image into %dx%d camera view (tilt %.1f deg)", image.shape, camera.width,
                        camera.height, camera.tilt_deg)
    return GrayImage.clipped(warped.astype(float), camera.nominal_pitch_mm)


def warp_to_plane(image: GrayImage, camera: CameraModel, pitch_mm: float, shape: Tuple[int, int]) -> GrayImage:
    """Resample a camera image back onto a frontal plane image of the given pitch and shape."""
    homography = camera.image_homography(pitch_mm, shape)
    frontal = cv2.warpPerspective(image.pixels.astype(np.float32), homography, (shape[1], shape[0]),
                                  flags=cv2.INTER_LINEAR | cv2.WARP_INVERSE_MAP, borderMode=cv2.BORDER_REPLICATE)
    return GrayImage.clipped(frontal.astype(float), pitch_mm)
