import os
import tempfile
import unittest

import numpy as np

from aircode.errors import FormatError, InvalidInputError
from aircode.imager import GrayImage, decode_pgm, encode_pgm, read_capture_stack, read_pgm, write_capture_stack, \
    write_pgm
from aircode.imager.images import FULL_SCALE, PGM_MAXVAL


def random_image(shape=(30, 40), pitch=0.1, seed=0) -> GrayImage:
    return GrayImage(np.random.default_rng(seed).uniform(0.0, 1.5, shape), pitch)


class GrayImageTestCase(unittest.TestCase):

    def test_dimensions(self):
        image = random_image()
        self.assertEqual(image.width, 40)
        self.assertEqual(image.height, 30)

    def test_rejects_negative_pixels(self):
        with self.assertRaises(InvalidInputError):
            GrayImage(np.full((4, 4), -0.1), 0.1)

    def test_rejects_non_finite_pixels(self):
        pixels = np.ones((4, 4))
        pixels[1, 2] = np.nan
        with self.assertRaises(InvalidInputError):
            GrayImage(pixels, 0.1)

    def test_rejects_bad_pitch(self):
        with self.assertRaises(InvalidInputError):
            GrayImage(np.ones((4, 4)), 0.0)

    def test_clipped(self):
        image = GrayImage.clipped(np.array([[-1.0, 2.0]]), 0.1)
        np.testing.assert_array_equal(image.pixels, [[0.0, 2.0]])


class PgmTestCase(unittest.TestCase):

    def test_header(self):
        data = encode_pgm(random_image(pitch=0.125))
        self.assertTrue(data.startswith(b"P5\n# pitch_mm 0.125\n# scale "))
        self.assertIn(b"\n40 30\n65535\n", data)
        self.assertEqual(len(data) - data.index(b"65535\n") - 6, 40 * 30 * 2)

    def test_write_read_write_is_byte_identical(self):
        image = random_image()
        with tempfile.TemporaryDirectory() as tmp:
            first = write_pgm(image, os.path.join(tmp, "a.pgm"))
            restored = read_pgm(first)
            second = write_pgm(restored, os.path.join(tmp, "b.pgm"))
            with open(first, "rb") as f1, open(second, "rb") as f2:
                self.assertEqual(f1.read(), f2.read())
        self.assertAlmostEqual(restored.pitch_mm, 0.1)
        np.testing.assert_allclose(restored.pixels, image.pixels, atol=FULL_SCALE / PGM_MAXVAL / 2 + 1e-12)

    def test_saturates_above_full_scale(self):
        image = GrayImage(np.full((2, 2), 5.0), 0.1)
        np.testing.assert_allclose(decode_pgm(encode_pgm(image)).pixels, FULL_SCALE)

    def test_rejects_foreign_magic(self):
        with self.assertRaises(FormatError) as context:
            decode_pgm(b"P2\n# pitch_mm 0.1\n2 2\n65535\n" + bytes(8))
        self.assertEqual(context.exception.key, "magic")

    def test_rejects_missing_pitch(self):
        with self.assertRaises(FormatError) as context:
            decode_pgm(b"P5\n2 2\n65535\n" + bytes(8))
        self.assertEqual(context.exception.key, "pitch_mm")

    def test_rejects_truncated_payload(self):
        with self.assertRaises(FormatError) as context:
            decode_pgm(b"P5\n# pitch_mm 0.1\n2 2\n65535\n" + bytes(6))
        self.assertEqual(context.exception.key, "payload")

    def test_rejects_8_bit(self):
        with self.assertRaises(FormatError):
            decode_pgm(b"P5\n# pitch_mm 0.1\n2 2\n255\n" + bytes(4))


class CaptureStackTestCase(unittest.TestCase):

    def test_round_trip(self):
        captures = [random_image(seed=i) for i in range(3)]
        with tempfile.TemporaryDirectory() as tmp:
            write_capture_stack(captures, tmp, activation_alpha=0.5, seed=7)
            self.assertTrue(os.path.exists(os.path.join(tmp, "capture_002.pgm")))
            restored, manifest = read_capture_stack(tmp)
        self.assertEqual(len(restored), 3)
        self.assertEqual(manifest["seed"], 7)
        self.assertEqual(manifest["pattern_ids"], ["shift_0", "shift_1", "shift_2"])
        np.testing.assert_allclose(restored[1].pixels, captures[1].pixels, atol=FULL_SCALE / PGM_MAXVAL)

    def test_missing_manifest(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(FormatError):
                read_capture_stack(tmp)


if __name__ == '__main__':
    unittest.main()
