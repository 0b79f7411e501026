import os
import tempfile
import unittest

import numpy as np

from aircode.errors import FormatError, InvalidInputError
from aircode.experiments import TagDesigner
from aircode.scatter import (calibrate_absorption, load_fixture_material, material_from_spec, read_sample_csv,
                             synthesize_sample, transmissive_albedo, write_sample_csv)
from aircode.settings import load_config
from aircode.utils.file_utils import store_json


class FixtureMaterialTestCase(unittest.TestCase):

    def test_calibrated_base_absorption(self):
        km = load_fixture_material()
        self.assertAlmostEqual(km.absorption[0], 0.0438, delta=5e-4)
        self.assertEqual(km.scattering[0], 1.0)

    def test_calibration_without_grid(self):
        k0 = calibrate_absorption(1.0, 3.0, 0.20)
        km = material_from_spec({"s0_per_mm": 1.0, "ell_mm": 0.2, "diffusion_mm": 0.1, "k0_per_mm": k0})
        self.assertAlmostEqual(transmissive_albedo(km, 3.0), 0.20, places=9)

    def test_tabulated_constants(self):
        km = load_fixture_material()
        restored = material_from_spec(km.to_dict())
        np.testing.assert_array_equal(restored.absorption, km.absorption)

    def test_incomplete_description(self):
        with self.assertRaises(FormatError):
            material_from_spec({"s0_per_mm": 1.0})

    def test_configured_fixture_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = store_json({"name": "denser", "s0_per_mm": 2.0, "ell_mm": 0.2, "diffusion_mm": 0.1,
                               "k0_per_mm": 0.05}, "denser.json", tmp)
            km = load_fixture_material(path=path)
            self.assertEqual(km.name, "denser")
            self.assertEqual(km.scattering[0], 2.0)
            designer = TagDesigner(load_config(overrides={"material.fixture": path}))
            self.assertEqual(designer.km.name, "denser")
            self.assertAlmostEqual(designer.km.absorption[0], 0.05)

    def test_missing_fixture(self):
        with self.assertRaises(InvalidInputError) as context:
            load_fixture_material(path="resources/no_such_material.json")
        self.assertEqual(context.exception.key, "fixture")


class SampleCsvTestCase(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def _write(self, text: str) -> str:
        path = os.path.join(self.tmp.name, "sample.csv")
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path

    def test_store_and_load(self):
        sample = synthesize_sample(load_fixture_material(), 2.0)
        path = write_sample_csv(sample, os.path.join(self.tmp.name, "fixture.csv"))
        loaded = read_sample_csv(path, 2.0)
        np.testing.assert_allclose(loaded.refl_profile.values, sample.refl_profile.values, rtol=1e-11, atol=1e-300)
        np.testing.assert_allclose(loaded.trans_profile.values, sample.trans_profile.values, rtol=1e-11,
                                   atol=1e-300)
        self.assertEqual(loaded.name, "fixture")

    def test_wrong_header(self):
        path = self._write("r,R,T\n0,0.1,0.1\n1,0.1,0.1\n")
        with self.assertRaises(FormatError) as context:
            read_sample_csv(path, 2.0)
        self.assertEqual(context.exception.row, 1)

    def test_duplicate_radius(self):
        path = self._write("r_mm,R,T\n0,0.1,0.1\n0.5,0.1,0.1\n0.5,0.1,0.1\n")
        with self.assertRaises(FormatError) as context:
            read_sample_csv(path, 2.0)
        self.assertEqual(context.exception.row, 4)

    def test_descending_radius(self):
        path = self._write("r_mm,R,T\n0,0.1,0.1\n0.5,0.1,0.1\n0.25,0.1,0.1\n")
        with self.assertRaises(FormatError) as context:
            read_sample_csv(path, 2.0)
        self.assertEqual(context.exception.row, 4)

    def test_negative_value(self):
        path = self._write("r_mm,R,T\n0,0.1,0.1\n0.5,-0.1,0.1\n")
        with self.assertRaises(FormatError) as context:
            read_sample_csv(path, 2.0)
        self.assertEqual(context.exception.row, 3)

    def test_non_numeric_value(self):
        path = self._write("r_mm,R,T\n0,0.1,abc\n")
        with self.assertRaises(FormatError) as context:
            read_sample_csv(path, 2.0)
        self.assertEqual(context.exception.row, 2)

    def test_radii_must_start_at_zero(self):
        path = self._write("r_mm,R,T\n0.1,0.1,0.1\n0.5,0.1,0.1\n")
        with self.assertRaises(FormatError):
            read_sample_csv(path, 2.0)

    def test_empty_file(self):
        with self.assertRaises(FormatError):
            read_sample_csv(self._write(""), 2.0)

    def test_row_numbers_count_blank_lines(self):
        path = self._write("r_mm,R,T\n0,0.1,0.1\n\n0.5,0.1\n")
        with self.assertRaises(FormatError) as context:
            read_sample_csv(path, 2.0)
        self.assertEqual(context.exception.row, 4)
        self.assertEqual(context.exception.key, "columns")

    def test_blank_lines_are_skipped(self):
        sample = read_sample_csv(self._write("r_mm,R,T\n0,0.2,0.1\n\n0.5,0.1,0.05\n"), 2.0)
        np.testing.assert_allclose(sample.radii, [0.0, 0.5])
        np.testing.assert_allclose(sample.refl_profile.values, [0.2, 0.1])


if __name__ == '__main__':
    unittest.main()
