import unittest

import numpy as np

from aircode.codec import TagConfig, corner_adjacency, marker_centers
from aircode.decoder import (EllipseCandidate, detect_ellipses, estimate_pose, extract_features, feature_matrix,
                             find_marker_quad, fit_dual_conic, fit_quadratic, flatten_intensity, group_candidates,
                             identify_orientation, rectify, ring_count, rotation_error_deg, select_marker_candidates,
                             solve_affine, train_bit_classifier)
from aircode.decoder.pipeline import decode_tag
from aircode.decoder.pose import square_corners_mm
from aircode.decoder.quad import from_corners
from aircode.errors import AmbiguousOrientationError, InvalidPoseError, NonSeparableError, QuadNotFoundError
from aircode.imager.camera import CameraModel, axis_rotation
from aircode.imager.degrade import quadratic_surface
from aircode.imager.images import GrayImage
from aircode.settings import DecoderConfig

AFFINE = np.array([[40.0, 12.0], [0.0, 25.0]])
OFFSET = np.array([100.0, 80.0])
QUAD = np.array([[100.0, 80.0], [140.0, 80.0], [152.0, 105.0], [112.0, 105.0]])


def projected_corners(rotation: np.ndarray, translation: np.ndarray, intrinsics: np.ndarray,
                      side_mm: float = 15.0) -> np.ndarray:
    world = square_corners_mm(side_mm)
    homography = intrinsics @ np.column_stack([rotation[:, 0], rotation[:, 1], translation])
    projected = np.column_stack([world, np.ones(4)]) @ homography.T
    return projected[:, :2] / projected[:, 2:]


class FlattenTestCase(unittest.TestCase):

    def test_quadratic_trend_is_removed(self):
        coeffs = [1.0, 0.1, -0.05, 0.02, 0.01, 0.03]
        image = GrayImage(quadratic_surface(coeffs, (60, 80)), 0.1)
        np.testing.assert_allclose(fit_quadratic(image), coeffs, atol=1e-10)
        flat = flatten_intensity(image)
        self.assertLess(flat.pixels.std(), 1e-10)
        self.assertAlmostEqual(flat.pixels.mean(), image.pixels.mean(), places=10)

    def test_pattern_survives(self):
        pattern = 0.2 * (np.indices((64, 64)).sum(axis=0) % 2)
        trend = quadratic_surface([1.0, 0.2, 0.1, -0.1, 0.05, 0.1], (64, 64))
        flat = flatten_intensity(GrayImage(trend + pattern, 0.1))
        np.testing.assert_allclose(flat.pixels - flat.pixels.mean(), pattern - pattern.mean(), atol=1e-3)

    def test_tiny_image_is_returned_unchanged(self):
        image = GrayImage(np.ones((2, 2)), 0.1)
        self.assertIsNone(fit_quadratic(image))
        self.assertIs(flatten_intensity(image), image)


class DualConicTestCase(unittest.TestCase):

    def test_exact_tangents_give_the_ellipse(self):
        center, a, b, angle = np.array([50.0, 40.0]), 20.0, 10.0, 0.3
        rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        t = np.linspace(0, 2 * np.pi, 90, endpoint=False)
        points = center + np.column_stack([a * np.cos(t), b * np.sin(t)]) @ rotation.T
        normals = np.column_stack([np.cos(t) / a, np.sin(t) / b]) @ rotation.T
        candidate = fit_dual_conic(points, normals)
        self.assertIsNotNone(candidate)
        np.testing.assert_allclose(candidate.center, center, atol=1e-6)
        self.assertAlmostEqual(candidate.major, a, places=6)
        self.assertAlmostEqual(candidate.minor, b, places=6)
        self.assertLess(candidate.residual, 1e-8)

    def test_straight_edge_is_rejected(self):
        points = np.column_stack([np.arange(20.0), np.full(20, 5.0)])
        normals = np.tile([0.0, 1.0], (20, 1))
        self.assertIsNone(fit_dual_conic(points, normals))

    def test_too_few_points(self):
        self.assertIsNone(fit_dual_conic(np.zeros((4, 2)), np.ones((4, 2))))


class EllipseDetectionTestCase(unittest.TestCase):

    def test_disc_is_found_at_several_levels(self):
        rows, cols = np.indices((200, 200))
        pixels = np.where(np.hypot(cols - 100, rows - 100) <= 30, 0.8, 0.2)
        groups = detect_ellipses(GrayImage(pixels, 0.1))
        self.assertTrue(groups)
        nearest = min(groups, key=lambda g: np.hypot(g.center[0] - 100, g.center[1] - 100))
        self.assertLess(np.hypot(nearest.center[0] - 100, nearest.center[1] - 100), 3.0)
        self.assertAlmostEqual(nearest.major, 30.0, delta=3.0)
        self.assertGreaterEqual(nearest.support, 2)

    def test_blank_image_has_no_ellipses(self):
        self.assertEqual(detect_ellipses(GrayImage(np.full((64, 64), 0.5), 0.1)), [])

    def test_grouping_merges_close_centres(self):
        candidates = [EllipseCandidate((10.0, 10.0), (5.0, 4.0), 0.0, 0),
                      EllipseCandidate((12.0, 10.0), (8.0, 7.0), 0.0, 1),
                      EllipseCandidate((60.0, 10.0), (5.0, 4.0), 0.0, 0)]
        groups = group_candidates(candidates, tau=5.0)
        self.assertEqual(len(groups), 2)
        merged = groups[0]
        self.assertEqual(merged.support, 2)
        self.assertEqual(merged.center, (11.0, 10.0))
        self.assertEqual(merged.semi_axes, (8.0, 7.0))
        self.assertEqual(merged.scale_level, 0)

    def test_selection_prefers_support_and_size(self):
        groups = [EllipseCandidate((0.0, 0.0), (10.0, 9.0), 0.0, 0, support=3),
                  EllipseCandidate((50.0, 0.0), (10.0, 9.0), 0.0, 0, support=1),
                  EllipseCandidate((0.0, 50.0), (2.0, 2.0), 0.0, 0, support=4),
                  EllipseCandidate((50.0, 50.0), (12.0, 11.0), 0.0, 0, support=2)]
        selected = select_marker_candidates(groups, DecoderConfig())
        self.assertEqual([g.center for g in selected], [(0.0, 0.0), (50.0, 50.0)])


class MarkerQuadTestCase(unittest.TestCase):

    def test_affine_from_three_corners(self):
        affine, offset = solve_affine(QUAD[[0, 1, 3]])
        np.testing.assert_allclose(affine, AFFINE, atol=1e-6)
        np.testing.assert_allclose(offset, OFFSET, atol=1e-6)

    def test_collinear_points_have_no_affine(self):
        self.assertIsNone(solve_affine(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])))

    def test_quad_among_distractors(self):
        distractors = np.array([[10.0, 10.0], [200.0, 30.0], [60.0, 190.0]])
        quad = find_marker_quad(np.vstack([distractors, QUAD]))
        np.testing.assert_allclose(quad.corners, QUAD, atol=1e-9)
        self.assertLess(quad.corner_error, 1e-9)
        np.testing.assert_allclose(quad.map_unit(np.array([[1.0, 1.0]])), [QUAD[2]], atol=1e-6)

    def test_random_quads_among_random_distractors(self):
        """Noise-free marker centres are always found, wherever the distractors lie."""
        rng = np.random.default_rng(7)
        for _ in range(200):
            angle = np.deg2rad(rng.uniform(-40, 40))
            scale = rng.uniform(30, 80)
            rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
            shear = np.array([[1.0, rng.uniform(-0.2, 0.2)], [0.0, rng.uniform(0.8, 1.2)]])
            affine = scale * rotation @ shear
            offset = rng.uniform(100, 200, 2)
            corners = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float) @ affine.T + offset
            points = np.vstack([corners, rng.uniform(0, 300, (4, 2))])
            rng.shuffle(points)
            quad = find_marker_quad(points)
            found = sorted(map(tuple, np.round(quad.corners, 6)))
            self.assertEqual(found, sorted(map(tuple, np.round(corners, 6))))

    def test_input_order_does_not_matter(self):
        points = np.vstack([QUAD, [[30.0, 170.0], [250.0, 250.0]]])
        first = find_marker_quad(points)
        second = find_marker_quad(points[::-1])
        np.testing.assert_array_equal(first.corners, second.corners)

    def test_noisy_centres_within_eta(self):
        noisy = QUAD + np.random.default_rng(1).normal(0, 0.5, QUAD.shape)
        quad = find_marker_quad(noisy)
        np.testing.assert_allclose(quad.corners, noisy)

    def test_too_few_centres(self):
        with self.assertRaises(QuadNotFoundError):
            find_marker_quad(QUAD[:3])

    def test_no_parallelogram(self):
        with self.assertRaises(QuadNotFoundError):
            find_marker_quad([[0.0, 0.0], [100.0, 0.0], [50.0, 100.0], [0.0, 100.0]])

    def test_rolled_relabels_corners(self):
        quad = from_corners(QUAD)
        np.testing.assert_allclose(quad.rolled(1).corners[0], QUAD[1])
        np.testing.assert_allclose(quad.rolled(4).corners, QUAD)


class RectifyTestCase(unittest.TestCase):

    def setUp(self):
        self.tag = TagConfig()
        self.config = DecoderConfig()
        self.ppc = self.config.out_px_per_cell
        self.size = self.tag.grid_dims * self.ppc

    def test_aligned_quad_is_identity(self):
        step = self.tag.cell_size_mm / self.ppc
        pixels = np.random.default_rng(3).uniform(0.2, 0.8, (self.size, self.size))
        quad = from_corners(marker_centers(self.tag) / step - 0.5)
        rect = rectify(GrayImage(pixels, step), quad, self.tag, self.ppc)
        self.assertEqual(rect.shape, (self.size, self.size))
        self.assertAlmostEqual(rect.pitch_mm, step)
        np.testing.assert_allclose(rect.pixels, pixels, atol=1e-4)

    def oriented_rect(self) -> np.ndarray:
        cells = np.full((self.tag.grid_dims, self.tag.grid_dims), 0.6)
        for r, c in corner_adjacency(self.tag.grid_dims, self.tag.marker_block)["bottom_right"]:
            cells[r, c] = 0.3
        return np.kron(cells, np.ones((self.ppc, self.ppc)))

    def test_all_four_rotations(self):
        upright = self.oriented_rect()
        for k in range(4):
            with self.subTest(quarter_turns=k):
                rect = GrayImage(np.rot90(upright, k), 0.1875)
                orientation = identify_orientation(rect, self.tag, self.config)
                self.assertEqual(orientation.quarter_turns, (4 - k) % 4)
                np.testing.assert_array_equal(orientation.apply(rect).pixels, upright)
                self.assertGreater(orientation.margin, 0.5)

    def test_symmetric_surround_is_ambiguous(self):
        rect = GrayImage(np.full((self.size, self.size), 0.6), 0.1875)
        with self.assertRaises(AmbiguousOrientationError):
            identify_orientation(rect, self.tag, self.config)


class FeatureTestCase(unittest.TestCase):

    def setUp(self):
        self.config = DecoderConfig()
        pixels = np.random.default_rng(5).uniform(0.2, 0.6, (104, 104))
        self.rect = GrayImage(pixels, 0.1875)

    def test_ring_count(self):
        self.assertEqual(ring_count(self.config), 28)

    def test_unit_norm_zero_mean(self):
        features = extract_features(self.rect, (6, 6), self.config)
        self.assertEqual(features.shape, (28,))
        self.assertAlmostEqual(float(np.linalg.norm(features)), 1.0, places=10)
        self.assertAlmostEqual(float(features.mean()), 0.0, places=10)

    def test_flat_neighbourhood_is_degenerate(self):
        flat = GrayImage(np.full((104, 104), 0.4), 0.1875)
        np.testing.assert_array_equal(extract_features(flat, (0, 0), self.config), np.zeros(28))
        _, flags = feature_matrix(flat, [(0, 0), (12, 12)], self.config)
        self.assertTrue(flags.all())

    def test_invariant_to_gain_and_offset(self):
        brighter = self.rect.with_pixels(2.0 * self.rect.pixels + 0.1)
        for cell in [(0, 0), (6, 6), (12, 3)]:
            np.testing.assert_allclose(extract_features(brighter, cell, self.config),
                                       extract_features(self.rect, cell, self.config), atol=1e-10)

    def test_cell_outside_grid(self):
        with self.assertRaises(IndexError):
            extract_features(self.rect, (13, 0), self.config)


class BitClassifierTestCase(unittest.TestCase):

    def toy_problem(self, n: int = 10, seed: int = 0):
        rng = np.random.default_rng(seed)
        air = np.column_stack([np.ones(n), rng.normal(0, 0.1, (n, 2))])
        solid = np.column_stack([-np.ones(n), rng.normal(0, 0.1, (n, 2))])
        return np.vstack([air, solid]), np.array([1] * n + [0] * n)

    def test_separable_toy_problem(self):
        features, bits = self.toy_problem()
        classifier = train_bit_classifier(features, bits)
        self.assertEqual(classifier.training_accuracy, 1.0)
        self.assertGreater(classifier.margin(features, bits), 0)
        unseen, unseen_bits = self.toy_problem(seed=1)
        np.testing.assert_array_equal(classifier.predict(unseen), unseen_bits)

    def test_conflicting_labels_are_not_separable(self):
        features, _ = self.toy_problem(n=5)
        duplicated = np.vstack([features, features])
        bits = np.array([1] * 5 + [0] * 5 + [0] * 5 + [1] * 5)
        with self.assertRaises(NonSeparableError):
            train_bit_classifier(duplicated, bits)

    def test_needs_four_examples_per_class(self):
        features, _ = self.toy_problem()
        bits = np.array([1] * 3 + [0] * 17)
        with self.assertRaises(NonSeparableError) as context:
            train_bit_classifier(features, bits)
        self.assertEqual(context.exception.stage, "classifier")


class DecodeTagTestCase(unittest.TestCase):

    def test_blank_image_fails_at_quad_stage(self):
        blank = GrayImage(np.full((128, 128), 0.5), 0.1)
        with self.assertRaises(QuadNotFoundError) as context:
            decode_tag(blank, TagConfig(), 56)
        self.assertEqual(context.exception.stage, "quad")
        self.assertIn("got 0", context.exception.reason)


class PoseTestCase(unittest.TestCase):

    def setUp(self):
        self.camera = CameraModel.tilted(0.0)
        self.intrinsics = self.camera.intrinsics

    def test_frontal_pose(self):
        rotation, translation = np.eye(3), np.array([0.0, 0.0, 400.0])
        quad = from_corners(projected_corners(rotation, translation, self.intrinsics))
        pose = estimate_pose(quad, self.intrinsics, 15.0)
        np.testing.assert_allclose(pose.rotation, rotation, atol=1e-6)
        np.testing.assert_allclose(pose.translation, translation, atol=1e-4)
        self.assertLess(pose.reprojection_rms, 1e-6)

    def test_tilted_pose(self):
        rotation, translation = axis_rotation(20.0, "y"), np.array([3.0, -2.0, 400.0])
        quad = from_corners(projected_corners(rotation, translation, self.intrinsics))
        pose = estimate_pose(quad, self.intrinsics, 15.0)
        self.assertLess(rotation_error_deg(pose.rotation, rotation), 1e-4)
        self.assertAlmostEqual(pose.tilt_deg, 20.0, places=4)

    def test_small_corner_noise(self):
        rng = np.random.default_rng(11)
        for angle in (-30.0, -10.0, 10.0, 30.0):
            with self.subTest(angle=angle):
                rotation, translation = axis_rotation(angle, "x"), np.array([0.0, 0.0, 400.0])
                corners = projected_corners(rotation, translation, self.intrinsics)
                quad = from_corners(corners + rng.normal(0, 0.02, corners.shape))
                pose = estimate_pose(quad, self.intrinsics, 15.0)
                self.assertLess(rotation_error_deg(pose.rotation, rotation), 2.0)

    def test_reprojection_limit(self):
        corners = projected_corners(np.eye(3), np.array([0.0, 0.0, 400.0]), self.intrinsics)
        quad = from_corners(corners + np.random.default_rng(2).normal(0, 0.5, corners.shape))
        with self.assertRaises(InvalidPoseError):
            estimate_pose(quad, self.intrinsics, 15.0, max_reprojection_px=1e-9)

    def test_rotation_error_of_identity(self):
        self.assertAlmostEqual(rotation_error_deg(np.eye(3), np.eye(3)), 0.0)


if __name__ == '__main__':
    unittest.main()
