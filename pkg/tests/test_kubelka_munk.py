import unittest

import numpy as np

from aircode.errors import ConvergenceError, InvalidInputError
from aircode.scatter import (KmConstants, estimate_km_constants, estimate_km_from_spectra, frequency_grid,
                             km_from_slab, km_model, load_fixture_material, semi_infinite_reflectance,
                             slab_profiles, synthesize_sample, thick_substrate_depth, three_layer_reflectance,
                             transmissive_albedo)


class SlabProfilesTestCase(unittest.TestCase):

    def setUp(self):
        self.km = load_fixture_material()

    def test_zero_thickness_is_identity(self):
        slab = slab_profiles(self.km, 0.0)
        np.testing.assert_allclose(slab.refl, 0.0, atol=1e-15)
        np.testing.assert_allclose(slab.trans, 1.0, rtol=1e-14)

    def test_thick_slab_reaches_semi_infinite_albedo(self):
        """At gamma d = 50 nothing is transmitted and R is 1 / (a + b)."""
        km = KmConstants(np.array([0.0]), np.array([1.0]), np.array([1.0]))
        gamma = np.sqrt(1.0 * (1.0 + 2.0))
        slab = slab_profiles(km, 50.0 / gamma)
        self.assertLess(slab.trans[0], 1e-20)
        self.assertAlmostEqual(slab.refl[0], 1 / (2 + np.sqrt(3)), places=12)
        self.assertAlmostEqual(semi_infinite_reflectance(km)[0], slab.refl[0], places=12)

    def test_very_thick_slab_stays_finite(self):
        slab = slab_profiles(self.km, 500.0)
        self.assertTrue(np.all(np.isfinite(slab.refl)))
        self.assertTrue(np.all(slab.trans >= 0))

    def test_pure_absorber(self):
        km = KmConstants(np.array([0.0, 1.0]), np.zeros(2), np.array([0.5, 0.8]))
        slab = slab_profiles(km, 2.0)
        np.testing.assert_allclose(slab.trans, np.exp(-np.array([0.5, 0.8]) * 2.0), rtol=1e-14)
        self.assertTrue(np.all(slab.refl == 0))

    def test_conservative_scatterer(self):
        km = KmConstants(np.array([0.0]), np.array([2.0]), np.array([0.0]))
        slab = slab_profiles(km, 1.5)
        self.assertAlmostEqual(slab.refl[0], 3.0 / 4.0, places=14)
        self.assertAlmostEqual(slab.trans[0], 1.0 / 4.0, places=14)

    def test_rejects_negative_thickness(self):
        with self.assertRaises(InvalidInputError):
            slab_profiles(self.km, -0.1)


class TransmissiveAlbedoTestCase(unittest.TestCase):

    def setUp(self):
        self.km = load_fixture_material()

    def test_zero_thickness(self):
        self.assertAlmostEqual(transmissive_albedo(self.km, 0.0), 1.0, places=14)

    def test_fixture_calibration(self):
        """The fixture transmits 20 % through 3 mm."""
        self.assertAlmostEqual(transmissive_albedo(self.km, 3.0), 0.20, places=9)

    def test_strictly_decreasing(self):
        albedos = [transmissive_albedo(self.km, d) for d in np.linspace(0.1, 6.0, 60)]
        self.assertTrue(np.all(np.diff(albedos) < 0))

    def test_thick_substrate_depth(self):
        depth = thick_substrate_depth(self.km)
        self.assertLess(transmissive_albedo(self.km, depth), 1e-4)
        self.assertGreaterEqual(transmissive_albedo(self.km, depth / 2), 1e-4)


class ThreeLayerReflectanceTestCase(unittest.TestCase):

    def setUp(self):
        self.km = load_fixture_material()
        self.substrate = thick_substrate_depth(self.km)

    def test_vanishing_air_gap(self):
        result = three_layer_reflectance(self.km, 2.0, 1e-6, self.substrate)
        expected = slab_profiles(self.km, 2.0 + self.substrate)
        np.testing.assert_allclose(result.refl, expected.refl, rtol=0, atol=1e-4)

    def test_wide_air_gap_decouples_substrate(self):
        """For q > 0 a 50 mm gap hides the substrate; q = 0 is not attenuated by air."""
        result = three_layer_reflectance(self.km, 2.0, 50.0, self.substrate)
        cover = slab_profiles(self.km, 2.0)
        above = self.km.freqs >= 0.5
        np.testing.assert_allclose(result.refl[above], cover.refl[above], rtol=0, atol=1e-3)

    def test_reflectance_falls_with_gap_height(self):
        heights = np.linspace(0.1, 3.0, 15)
        q1 = int(np.argmin(np.abs(self.km.freqs - 1.0)))
        results = [three_layer_reflectance(self.km, 2.0, h, self.substrate) for h in heights]
        at_zero = np.array([r.refl[0] for r in results])
        at_q1 = np.array([r.refl[q1] for r in results])
        self.assertTrue(np.all(np.diff(at_zero) <= 1e-12))
        self.assertTrue(np.all(np.diff(at_q1) < 0))


class EstimateKmConstantsTestCase(unittest.TestCase):

    def setUp(self):
        self.km = load_fixture_material()

    def test_recovers_synthetic_material(self):
        estimate = km_from_slab(slab_profiles(self.km, 2.0), 2.0)
        np.testing.assert_allclose(estimate.scattering, self.km.scattering, rtol=1e-4, atol=1e-9)
        np.testing.assert_allclose(estimate.absorption, self.km.absorption, rtol=1e-4)

    def test_self_consistency(self):
        """Slabs built from the estimate reproduce the measured slab."""
        measured = slab_profiles(self.km, 2.0)
        rebuilt = slab_profiles(km_from_slab(measured, 2.0), 2.0)
        np.testing.assert_allclose(rebuilt.refl, measured.refl, rtol=1e-4, atol=1e-12)
        np.testing.assert_allclose(rebuilt.trans, measured.trans, rtol=1e-4, atol=1e-12)

    def test_air_slab(self):
        freqs = frequency_grid()
        estimate = estimate_km_from_spectra(np.zeros_like(freqs), np.exp(-freqs), 2.0, freqs)
        self.assertTrue(np.all(estimate.scattering == 0))
        self.assertAlmostEqual(estimate.absorption[0], 0.0, places=10)

    def test_absorbing_only(self):
        """Beer-Lambert attenuation exp(-sigma D) yields S = 0 and K = sigma."""
        freqs = frequency_grid()
        sigma = 0.5 + 0.1 * freqs
        estimate = estimate_km_from_spectra(np.zeros_like(freqs), np.exp(-sigma * 2.0), 2.0, freqs)
        self.assertTrue(np.all(estimate.scattering == 0))
        np.testing.assert_allclose(estimate.absorption, sigma, rtol=1e-4)

    def test_reports_non_convergence(self):
        with self.assertRaises(ConvergenceError) as context:
            km_from_slab(slab_profiles(self.km, 2.0), 2.0, max_halvings=2)
        self.assertIn("q=", str(context.exception))

    def test_from_measured_profiles(self):
        """Constants estimated from spatial profiles match the material at low frequencies."""
        km = km_model(frequency_grid(), s0=1.0, ell=0.2, k0=0.5, diffusion=0.1)
        sample = synthesize_sample(km, 2.0)
        estimate = estimate_km_constants(sample, km.freqs)
        low = km.freqs <= 5.0
        np.testing.assert_allclose(estimate.scattering[low], km.scattering[low], rtol=2e-2, atol=1e-4)
        np.testing.assert_allclose(estimate.absorption[low], km.absorption[low], rtol=2e-2)


if __name__ == '__main__':
    unittest.main()
