import unittest

import numpy as np

from aircode.errors import InfeasibleDesignError, InvalidInputError
from aircode.scatter import (AirPocketParams, ContrastModel, DesignTargets, RadialProfile, albedo_curve,
                             blend_radius, contrast_curve, finite_pocket_reflection, load_fixture_material,
                             max_depth_for_albedo, radial_grid, recommend_parameters, surface_contrast)


class FinitePocketReflectionTestCase(unittest.TestCase):

    def setUp(self):
        self.radii = radial_grid(64, 5.0)
        rng = np.random.default_rng(7)
        self.r0 = RadialProfile(self.radii, rng.uniform(0.0, 1.0, self.radii.size))
        self.rc = RadialProfile(self.radii, rng.uniform(0.0, 1.0, self.radii.size))

    def test_equal_profiles(self):
        blended = finite_pocket_reflection(self.r0, self.r0)
        np.testing.assert_allclose(blended.values, self.r0.values, rtol=1e-14)

    def test_zero_pocket_profile(self):
        zero = RadialProfile(self.radii, np.zeros_like(self.radii))
        blended = finite_pocket_reflection(self.r0, zero)
        self.assertTrue(np.all(blended.values == 0))

    def test_geometric_mean_bounds(self):
        blended = finite_pocket_reflection(self.r0, self.rc).values
        lower = np.minimum(self.r0.values, self.rc.values)
        upper = np.maximum(self.r0.values, self.rc.values)
        self.assertTrue(np.all(blended >= lower - 1e-15))
        self.assertTrue(np.all(blended <= upper + 1e-15))

    def test_pairs_on_one_side(self):
        self.assertIs(finite_pocket_reflection(self.r0, self.rc, True, True), self.rc)
        self.assertIs(finite_pocket_reflection(self.r0, self.rc, False, False), self.r0)


class SurfaceContrastTestCase(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.km = load_fixture_material()
        cls.model = ContrastModel(cls.km)

    def test_vanishing_pocket(self):
        result = self.model.contrast(AirPocketParams(2.0, 1e-6, 1.5))
        self.assertLess(abs(result.contrast), 1e-3)
        self.assertGreater(result.c_solid, 0)

    def test_pocket_darkens_surface(self):
        result = surface_contrast(self.km, AirPocketParams(2.0, 1.0, 1.5))
        self.assertLess(result.contrast, 0)
        self.assertGreater(result.contrast, -1)

    def test_contrast_grows_with_height(self):
        heights = [0.1, 0.25, 0.5, 1.0, 2.0]
        magnitudes = np.abs(contrast_curve(self.km, 2.0, heights, 1.5))
        self.assertTrue(np.all(np.diff(magnitudes) > 0))

    def test_contrast_fades_with_depth(self):
        magnitudes = [abs(self.model.contrast(AirPocketParams(d, 1.0, 1.5)).contrast) for d in (1.0, 2.0, 3.0)]
        self.assertTrue(np.all(np.diff(magnitudes) < 0))

    def test_rejects_unresolved_pocket(self):
        with self.assertRaises(InvalidInputError):
            self.model.contrast(AirPocketParams(2.0, 1.0, 0.05))

    def test_rejects_non_positive_params(self):
        with self.assertRaises(InvalidInputError):
            AirPocketParams(2.0, 0.0, 1.5)


class RecommendParametersTestCase(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.km = load_fixture_material()
        cls.targets = DesignTargets()
        cls.params = recommend_parameters(cls.km, cls.targets, 1.5)

    def test_max_depth(self):
        """The fixture keeps 20 % transmissive albedo down to 3 mm."""
        self.assertAlmostEqual(max_depth_for_albedo(self.km, 0.20), 3.0, delta=0.05)

    def test_depth_is_midpoint(self):
        self.assertAlmostEqual(self.params.depth, 2.0, delta=0.05)

    def test_contrast_meets_target(self):
        contrast = surface_contrast(self.km, self.params).contrast
        self.assertLess(abs(abs(contrast) - 0.05), 1e-3)

    def test_larger_target_needs_taller_pocket(self):
        targets = DesignTargets(contrast_target=0.06)
        self.assertGreater(recommend_parameters(self.km, targets, 1.5).height, self.params.height)

    def test_infeasible_depth_bound(self):
        with self.assertRaises(InfeasibleDesignError) as context:
            recommend_parameters(self.km, DesignTargets(d_min_mm=5.0), 1.5)
        self.assertEqual(context.exception.key, "d_min")

    def test_infeasible_contrast(self):
        with self.assertRaises(InfeasibleDesignError) as context:
            recommend_parameters(self.km, DesignTargets(contrast_target=0.9), 1.5)
        self.assertEqual(context.exception.key, "h_max")

    def test_rejects_invalid_targets(self):
        with self.assertRaises(InvalidInputError):
            DesignTargets(albedo_floor_tau=1.5)

    def test_contrast_target_bounds(self):
        for target in (0.0, -0.05, 1.0, 1.5):
            with self.subTest(target=target):
                with self.assertRaises(InvalidInputError) as context:
                    DesignTargets(contrast_target=target)
                self.assertEqual(context.exception.key, "contrast_target")


class CurvesTestCase(unittest.TestCase):

    def test_albedo_curve(self):
        km = load_fixture_material()
        curve = albedo_curve(km, np.linspace(0.5, 6.0, 12))
        self.assertTrue(np.all(np.diff(curve) < 0))

    def test_blend_radius_encloses_solid_reflection_energy(self):
        km = load_fixture_material()
        r0 = ContrastModel(km).solid_profile
        weighted = r0.values * r0.radii
        cumulative = np.concatenate(([0.0], np.cumsum(np.diff(r0.radii) * (weighted[1:] + weighted[:-1]) / 2)))
        expected = np.interp(0.9 * cumulative[-1], cumulative, r0.radii)
        radius = blend_radius(km)
        self.assertAlmostEqual(radius, expected, delta=r0.spacing)
        self.assertGreater(radius, 0.0)
        self.assertLess(radius, r0.r_max)

    def test_blend_radius_fraction(self):
        km = load_fixture_material()
        self.assertAlmostEqual(blend_radius(km, 0.5), ContrastModel(km).solid_profile.energy_radius(0.5))
        self.assertLess(blend_radius(km, 0.5), blend_radius(km, 0.9))


if __name__ == '__main__':
    unittest.main()
