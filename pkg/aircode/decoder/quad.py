"""
Marker quad search. Three of the four marker centres fix an affine map from the unit square,
    v1 = (0, 0) -> top left, v2 = (1, 0) -> top right, v4 = (0, 1) -> bottom left,
and the fourth centre has to show up near A v3 + b. Every unordered triple of candidates is tried with
each of its points as the corner carrying the right angle.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import cv2
import numpy as np

from aircode.errors import QuadNotFoundError
from aircode.settings import DecoderConfig

module_logger = logging.getLogger(__name__)

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
SINGULAR_COND = 1e10
MAX_ASPECT = 3.0


@dataclass(eq=False)
class MarkerQuad:
    """Four marker centres (px) ordered like the unit square corners: top left, top right, bottom right,
    bottom left as seen in the image."""
    corners: np.ndarray
    affine: np.ndarray
    offset: np.ndarray
    homography: np.ndarray
    corner_error: float = 0.0

    @property
    def affine_seed(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.affine, self.offset

    def map_unit(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        mapped = np.column_stack([points, np.ones(len(points))]) @ self.homography.T
        return mapped[:, :2] / mapped[:, 2:]

    def rolled(self, shift: int) -> "MarkerQuad":
        """The same quad with corner i relabelled as corner (i - shift) % 4."""
        return from_corners(np.roll(self.corners, -shift, axis=0), self.corner_error)

    def to_dict(self):
        return {"corners": self.corners.tolist(), "affine": self.affine.tolist(), "offset": self.offset.tolist(),
                "homography": self.homography.tolist(), "corner_error": self.corner_error}


def affine_system(sources: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    The 6x6 system M x = y with x = (a11, a12, a21, a22, b1, b2) of the map taking the three image points
    onto v1, v2 and v4. M is singular exactly when the image points are collinear.
    """
    system, rhs = np.zeros((6, 6)), np.zeros(6)
    for k, ((x, y), (u, v)) in enumerate(zip(sources, UNIT_SQUARE[[0, 1, 3]])):
        system[2 * k] = [x, y, 0, 0, 1, 0]
        system[2 * k + 1] = [0, 0, x, y, 0, 1]
        rhs[2 * k], rhs[2 * k + 1] = u, v
    return system, rhs


def solve_affine(points: np.ndarray) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """(A, b) with A v + b taking v1, v2, v4 onto the three points; None for collinear points."""
    system, rhs = affine_system(points)
    if np.linalg.cond(system) > SINGULAR_COND:
        return None
    x = np.linalg.solve(system, rhs)
    inverse = np.linalg.inv(x[:4].reshape(2, 2))
    return inverse, -inverse @ x[4:]


def fit_affine(corners: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Least-squares affine map from the unit square onto all four corners."""
    design = np.column_stack([UNIT_SQUARE, np.ones(4)])
    solution, _, _, _ = np.linalg.lstsq(design, corners, rcond=None)
    return solution[:2].T, solution[2]


def from_corners(corners: np.ndarray, corner_error: float = 0.0) -> MarkerQuad:
    corners = np.asarray(corners, dtype=float)
    homography, _ = cv2.findHomography(UNIT_SQUARE, corners, 0)
    if homography is None:
        raise QuadNotFoundError("Marker centres do not define a homography")
    affine, offset = fit_affine(corners)
    return MarkerQuad(corners, affine, offset, homography / homography[2, 2], corner_error)


def _canonical(corners: np.ndarray) -> np.ndarray:
    """Start the cyclic corner order at the point with the smallest x + y (then x, then y)."""
    start = min(range(4), key=lambda i: (corners[i, 0] + corners[i, 1], corners[i, 0], corners[i, 1]))
    return np.roll(corners, -start, axis=0)


def _plausible(corners: np.ndarray) -> bool:
    sides = np.linalg.norm(np.roll(corners, -1, axis=0) - corners, axis=1)
    return sides.min() > 0 and sides.max() / sides.min() <= MAX_ASPECT


def _assignments(triple: Sequence[np.ndarray]):
    """(top left, top right, bottom left) for each choice of the right-angle corner, orientation preserving."""
    for i in range(3):
        top_left = triple[i]
        a, b = (triple[j] for j in range(3) if j != i)
        ea, eb = a - top_left, b - top_left
        if ea[0] * eb[1] - ea[1] * eb[0] >= 0:
            yield top_left, a, b
        else:
            yield top_left, b, a


def find_marker_quad(centers: Sequence[Sequence[float]], config: Optional[DecoderConfig] = None) -> MarkerQuad:
    """
    Exhaustive search for four centres forming an affine image of a square. Among all accepted quads the one
    with the smallest fourth-corner distance wins, ties go to the lexicographically smallest corners.
    """
    config = config or DecoderConfig()
    points = np.asarray(centers, dtype=float).reshape(-1, 2)
    if len(points) < 4:
        raise QuadNotFoundError(f"Need at least 4 ellipse centres, got {len(points)}")
    points = points[np.lexsort((points[:, 1], points[:, 0]))]

    best_key, best_corners = None, None
    for indices in itertools.combinations(range(len(points)), 3):
        triple = [points[i] for i in indices]
        for top_left, top_right, bottom_left in _assignments(triple):
            solved = solve_affine(np.array([top_left, top_right, bottom_left]))
            if solved is None:
                continue
            affine, offset = solved
            predicted = affine @ UNIT_SQUARE[2] + offset
            distances = np.linalg.norm(points - predicted, axis=1)
            distances[list(indices)] = np.inf
            nearest = int(np.argmin(distances))
            if distances[nearest] > config.corner_eta_px:
                continue
            corners = _canonical(np.array([top_left, top_right, points[nearest], bottom_left]))
            if not _plausible(corners):
                continue
            key = (float(distances[nearest]), tuple(corners.ravel()))
            if best_key is None or key < best_key:
                best_key, best_corners = key, corners
    if best_corners is None:
        raise QuadNotFoundError(f"No marker quad among {len(points)} ellipse centres")
    module_logger.debug("Marker quad %s, fourth corner off by %.3f px", best_corners.tolist(), best_key[0])
    return from_corners(best_corners, best_key[0])
