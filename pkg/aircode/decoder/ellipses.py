"""
Ellipse candidates from image gradients.

Each edge pixel with gradient direction n defines the tangent line l = (n, -n.p) of the contour it
lies on. The tangent lines of an ellipse satisfy l^T C* l = 0 for its dual conic C*, which is linear
in the six entries of C*. Fixing C*[2, 2] = -1 turns the fit into a linear least-squares problem; the
ellipse centre is then -C*[:2, 2] and its semi-axes are the square roots of the eigenvalues of
C*[:2, :2] + c c^T.
"""
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import cv2
import numpy as np

from aircode.imager.images import GrayImage
from aircode.settings import DecoderConfig

module_logger = logging.getLogger(__name__)

STRETCH_PERCENTILES = (0.5, 99.5)


@dataclass(frozen=True)
class EllipseCandidate:
    center: Tuple[float, float]
    semi_axes: Tuple[float, float]
    orientation: float
    scale_level: int
    residual: float = 0.0
    support: int = 1

    @property
    def major(self) -> float:
        return self.semi_axes[0]

    @property
    def minor(self) -> float:
        return self.semi_axes[1]

    @property
    def axis_ratio(self) -> float:
        return self.major / self.minor

    def scaled(self, factor: float) -> "EllipseCandidate":
        return replace(self, center=(self.center[0] * factor, self.center[1] * factor),
                       semi_axes=(self.semi_axes[0] * factor, self.semi_axes[1] * factor))

    def to_dict(self):
        return {"center": list(self.center), "semi_axes": list(self.semi_axes), "orientation": self.orientation,
                "scale_level": self.scale_level, "residual": self.residual, "support": self.support}


def _hartley(points: np.ndarray) -> np.ndarray:
    centroid = points.mean(axis=0)
    spread = np.mean(np.linalg.norm(points - centroid, axis=1))
    scale = np.sqrt(2) / spread if spread > 0 else 1.0
    return np.array([[scale, 0, -scale * centroid[0]], [0, scale, -scale * centroid[1]], [0, 0, 1]])


def fit_dual_conic(points: np.ndarray, gradients: np.ndarray) -> Optional[EllipseCandidate]:
    """
    Fit an ellipse to edge points (N, 2) with their gradients (N, 2). Returns None when the tangent
    lines do not describe an ellipse. The residual is RMS(l^T C* l) / (2 mean_semi_axis^2), roughly the
    relative radial error of the contour.
    """
    norms = np.linalg.norm(gradients, axis=1)
    keep = norms > 0
    if np.count_nonzero(keep) < 5:
        return None
    points, normals = points[keep], gradients[keep] / norms[keep, None]
    lines = np.column_stack([normals, -np.sum(normals * points, axis=1)])
    transform = _hartley(points)
    inv_transform = np.linalg.inv(transform)
    normalized = lines @ inv_transform
    normalized /= np.linalg.norm(normalized[:, :2], axis=1, keepdims=True)
    u, v, w = normalized.T
    design = np.column_stack([u * u, u * v, v * v, u * w, v * w])
    solution, _, rank, _ = np.linalg.lstsq(design, w * w, rcond=None)
    if rank < 5:
        return None
    a, b, c, d, e = solution
    dual_normalized = np.array([[a, b / 2, d / 2], [b / 2, c, e / 2], [d / 2, e / 2, -1.0]])
    dual = inv_transform @ dual_normalized @ inv_transform.T
    if abs(dual[2, 2]) < 1e-12:
        return None
    dual /= -dual[2, 2]
    center = -dual[:2, 2]
    shape = dual[:2, :2] + np.outer(center, center)
    eigenvalues, eigenvectors = np.linalg.eigh(shape)
    if eigenvalues[0] <= 0:
        return None
    minor, major = np.sqrt(eigenvalues)
    orientation = float(np.arctan2(eigenvectors[1, 1], eigenvectors[0, 1]))
    algebraic = np.einsum("ni,ij,nj->n", lines, dual, lines)
    residual = float(np.sqrt(np.mean(algebraic ** 2)) / (2 * ((major + minor) / 2) ** 2))
    return EllipseCandidate((float(center[0]), float(center[1])), (float(major), float(minor)), orientation, 0,
                            residual)


def to_uint8(pixels: np.ndarray) -> Optional[np.ndarray]:
    """Percentile stretch to 8 bit; None for images without contrast."""
    low, high = np.percentile(pixels, STRETCH_PERCENTILES)
    if high - low <= 1e-9 * max(1.0, abs(high)):
        return None
    return np.clip(np.rint((pixels - low) / (high - low) * 255), 0, 255).astype(np.uint8)


def edge_map(pixels: np.ndarray) -> Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Canny edges with hysteresis thresholds from the Otsu level of the gradient magnitude."""
    image = to_uint8(pixels)
    if image is None:
        return None
    image = cv2.GaussianBlur(image, (5, 5), 0)
    gx = cv2.Sobel(image, cv2.CV_64F, 1, 0, ksize=3)
    gy = cv2.Sobel(image, cv2.CV_64F, 0, 1, ksize=3)
    magnitude = np.hypot(gx, gy)
    peak = magnitude.max()
    if peak <= 0:
        return None
    otsu, _ = cv2.threshold(np.rint(magnitude / peak * 255).astype(np.uint8), 0, 255,
                            cv2.THRESH_BINARY + cv2.THRESH_OTSU)
    high = max(otsu, 1.0) / 255 * peak
    edges = cv2.Canny(image, high / 2, high, L2gradient=True)
    return edges, gx, gy


def _components(edges: np.ndarray, min_pixels: int):
    count, labels = cv2.connectedComponents((edges > 0).astype(np.uint8), connectivity=8)
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    bounds = np.searchsorted(flat[order], np.arange(count + 1))
    width = edges.shape[1]
    for label in range(1, count):
        members = order[bounds[label]:bounds[label + 1]]
        if members.size >= min_pixels:
            yield np.column_stack([members % width, members // width]).astype(float)


def detect_level(pixels: np.ndarray, level: int, config: DecoderConfig) -> List[EllipseCandidate]:
    found = edge_map(pixels)
    if found is None:
        return []
    edges, gx, gy = found
    scale = 2 ** level
    candidates = []
    for points in _components(edges, config.min_edge_pixels):
        cols, rows = points[:, 0].astype(int), points[:, 1].astype(int)
        gradients = np.column_stack([gx[rows, cols], gy[rows, cols]])
        outward = np.sum(gradients * (points - points.mean(axis=0)), axis=1) > 0
        for polarity in (outward, ~outward):
            if np.count_nonzero(polarity) < config.min_edge_pixels:
                continue
            candidate = fit_dual_conic(points[polarity], gradients[polarity])
            if candidate is None or candidate.residual >= config.conic_residual_max:
                continue
            if candidate.minor * scale < config.min_axis_px or candidate.axis_ratio > config.axis_ratio_max:
                continue
            x, y = candidate.center
            if not (0 <= x < pixels.shape[1] and 0 <= y < pixels.shape[0]):
                continue
            candidates.append(replace(candidate.scaled(scale), scale_level=level))
    return candidates


def group_candidates(candidates: Sequence[EllipseCandidate], tau: float) -> List[EllipseCandidate]:
    """
    Merge candidates whose centres lie within tau of a group's mean centre. The group keeps the largest
    member's axes, the finest level, the best residual and the member count as support.
    """
    groups: List[List[EllipseCandidate]] = []
    for candidate in sorted(candidates, key=lambda c: (c.center, c.scale_level, c.semi_axes)):
        for members in groups:
            center = np.mean([m.center for m in members], axis=0)
            if np.hypot(candidate.center[0] - center[0], candidate.center[1] - center[1]) < tau:
                members.append(candidate)
                break
        else:
            groups.append([candidate])
    merged = []
    for members in groups:
        center = np.mean([m.center for m in members], axis=0)
        largest = max(members, key=lambda m: m.major)
        merged.append(EllipseCandidate((float(center[0]), float(center[1])), largest.semi_axes, largest.orientation,
                                       min(m.scale_level for m in members), min(m.residual for m in members),
                                       len(members)))
    return merged


def detect_ellipses(image: GrayImage, config: Optional[DecoderConfig] = None) -> List[EllipseCandidate]:
    """Ellipse candidates over a Gaussian pyramid, centres in full-resolution pixels, grouped within tau."""
    config = config or DecoderConfig()
    level_pixels = image.pixels.astype(np.float32)
    candidates = []
    for level in range(config.pyramid_levels):
        if min(level_pixels.shape) < 16:
            break
        found = detect_level(level_pixels, level, config)
        module_logger.debug("Pyramid level %d: %d ellipse fits", level, len(found))
        candidates.extend(found)
        level_pixels = cv2.pyrDown(level_pixels)
    return group_candidates(candidates, config.group_tau_px)


def select_marker_candidates(groups: Sequence[EllipseCandidate], config: DecoderConfig) -> List[EllipseCandidate]:
    """Well supported, marker-sized groups, best supported first."""
    supported = [g for g in groups if g.support >= config.min_candidate_support]
    if not supported:
        return []
    largest = max(g.major for g in supported)
    sized = [g for g in supported if g.major >= 0.5 * largest]
    sized.sort(key=lambda g: (-g.support, -g.major, g.center))
    return sized[:config.max_quad_candidates]
