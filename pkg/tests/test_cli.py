import json
import os
import tempfile
import unittest
from unittest.mock import patch

import numpy as np

from aircode.cli import main
from aircode.imager.images import GrayImage, write_pgm
from aircode.utils.file_utils import load_json


class CLIExceptionLoggingTestCase(unittest.TestCase):
    """Test that exceptions during CLI commands are properly logged."""

    def test_unexpected_exception_is_logged(self):
        """Verify that unexpected exceptions are logged before re-raising."""
        with tempfile.TemporaryDirectory() as out_dir:
            test_args = ["aircode", "decode", "-i", os.path.join(out_dir, "missing.pgm"), "-o", out_dir]
            with patch("sys.argv", test_args):
                with patch("aircode.cli.logger") as mock_logger:
                    with self.assertRaises(FileNotFoundError):
                        main()
                    mock_logger.exception.assert_called_once()


class CLIExitCodeTestCase(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out_dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def test_invalid_override_is_a_usage_error(self):
        with self.assertRaises(SystemExit) as context:
            main(["encode", "--set", "tag.cell_size_mm=3.0", "-o", self.out_dir])
        self.assertEqual(context.exception.code, 2)

    def test_malformed_profiles_are_a_format_error(self):
        profiles = os.path.join(self.out_dir, "profiles.csv")
        with open(profiles, "w") as f:
            f.write("radius,R,T\n0,0.1,0.2\n")
        with self.assertRaises(SystemExit) as context:
            main(["material-fit", "-i", profiles, "-o", self.out_dir])
        self.assertEqual(context.exception.code, 4)

    def test_non_physical_profiles_are_a_format_error(self):
        profiles = os.path.join(self.out_dir, "profiles.csv")
        with open(profiles, "w") as f:
            f.write("r_mm,R,T\n0,0.5,0.5\n0.5,0.5,0.5\n1.0,0.5,0.5\n1.5,0.5,0.5\n2.0,0.5,0.5\n")
        with patch("aircode.cli.logger") as mock_logger:
            with self.assertRaises(SystemExit) as context:
                main(["material-fit", "-i", profiles, "-o", self.out_dir])
            mock_logger.exception.assert_not_called()
        self.assertEqual(context.exception.code, 4)
        self.assertFalse(os.path.exists(os.path.join(self.out_dir, "material.json")))

    def test_blank_image_decode_reports_quad_stage(self):
        image = os.path.join(self.out_dir, "blank.pgm")
        write_pgm(GrayImage(np.full((128, 128), 0.5), 0.1), image)
        with self.assertRaises(SystemExit) as context:
            main(["decode", "-i", image, "-o", self.out_dir])
        self.assertEqual(context.exception.code, 3)
        report = load_json(os.path.join(self.out_dir, "decode.json"))
        self.assertFalse(report["success"])
        self.assertEqual(report["stage"], "quad")
        self.assertTrue(report["reason"])
        self.assertTrue(os.path.exists(os.path.join(self.out_dir, "manifest.json")))

    def test_unknown_command(self):
        with self.assertRaises(SystemExit) as context:
            main(["print"])
        self.assertEqual(context.exception.code, 2)

    def test_zero_trials(self):
        with self.assertRaises(SystemExit) as context:
            main(["sweep", "-a", "angle", "-t", "0", "-o", self.out_dir])
        self.assertEqual(context.exception.code, 2)


class CLICommandTestCase(unittest.TestCase):

    def test_fixture_manifest_is_reproducible(self):
        manifests = []
        for _ in range(2):
            with tempfile.TemporaryDirectory() as out_dir:
                main(["fixture", "-o", out_dir, "--seed", "4"])
                self.assertTrue(os.path.exists(os.path.join(out_dir, "fixture_profiles.csv")))
                with open(os.path.join(out_dir, "manifest.json"), "rb") as f:
                    manifests.append(f.read())
        self.assertEqual(manifests[0], manifests[1])
        manifest = json.loads(manifests[0])
        self.assertEqual(manifest["command"], "fixture")
        self.assertEqual(manifest["seed"], 4)
        self.assertIn("fixture_profiles.csv", manifest["outputs"])

    def test_encode_writes_layout_and_geometry(self):
        with tempfile.TemporaryDirectory() as out_dir:
            main(["encode", "-p", "deadbeefcafe01", "-o", out_dir])
            for name in ("layout.json", "geometry.airc", "design.json", "manifest.json"):
                self.assertTrue(os.path.exists(os.path.join(out_dir, name)), name)
            design = load_json(os.path.join(out_dir, "design.json"))
            self.assertEqual(design["payload_hex"], "deadbeefcafe01")
            self.assertEqual(design["payload_bits"], 56)
            self.assertGreaterEqual(design["params"]["depth"], 1.0)

    def test_render_captures_feed_separate(self):
        with tempfile.TemporaryDirectory() as out_dir:
            main(["encode", "-o", out_dir, "--seed", "2"])
            main(["render", "-l", os.path.join(out_dir, "layout.json"), "--captures", "-o", out_dir])
            stack_dir = os.path.join(out_dir, "captures")
            stack = load_json(os.path.join(stack_dir, "captures.json"))
            self.assertEqual(len(stack["files"]), 8)
            separated = os.path.join(out_dir, "separated")
            main(["separate", "-c", stack_dir, "-o", separated])
            for name in ("direct.pgm", "global.pgm"):
                self.assertTrue(os.path.exists(os.path.join(separated, name)), name)


if __name__ == '__main__':
    unittest.main()
