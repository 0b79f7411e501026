import unittest

import numpy as np

from aircode.utils.string_utils import (
    to_pretty_json,
    str_to_bool,
    try_convert,
    read_query_string,
    bits_to_hex,
    hex_to_bits,
)


class ToPrettyJsonTestCase(unittest.TestCase):

    def test_simple_dict(self):
        data = {"key": "value", "number": 42}
        result = to_pretty_json(data)
        self.assertIn('"key":', result)
        self.assertIn('"value"', result)
        self.assertIn("42", result)

    def test_indentation(self):
        """Test that output is indented."""
        result = to_pretty_json({"a": {"b": "c"}})
        self.assertIn("\n", result)
        self.assertIn("  ", result)

    def test_numpy_values(self):
        """Arrays become lists and numpy scalars plain numbers."""
        result = to_pretty_json({"corners": np.array([[1.0, 2.0]]), "bits": np.int64(7)})
        self.assertIn("1.0", result)
        self.assertIn('"bits": 7', result)

    def test_non_serializable_objects(self):
        """Test that non-serializable objects use str()."""
        class CustomObject:
            def __str__(self):
                return "custom_repr"

        result = to_pretty_json({"obj": CustomObject()})
        self.assertIn("custom_repr", result)


class StrToBoolTestCase(unittest.TestCase):

    def test_true_values(self):
        for val in ["true", "True", "TRUE", "yes", "YES", "on", "ON", "1"]:
            self.assertTrue(str_to_bool(val), f"Failed for {val}")

    def test_false_values(self):
        for val in ["false", "False", "FALSE", "no", "NO", "off", "OFF", "0"]:
            self.assertFalse(str_to_bool(val), f"Failed for {val}")

    def test_invalid_value_raises(self):
        with self.assertRaises(ValueError):
            str_to_bool("maybe")
        with self.assertRaises(ValueError):
            str_to_bool("")


class TryConvertTestCase(unittest.TestCase):

    def test_converts_to_int(self):
        result = try_convert("42", (int, float, str))
        self.assertEqual(result, 42)
        self.assertIsInstance(result, int)

    def test_converts_to_float(self):
        result = try_convert("3.14", (int, float, str))
        self.assertEqual(result, 3.14)
        self.assertIsInstance(result, float)

    def test_fallback_to_string(self):
        """Test that unconvertible values remain strings."""
        result = try_convert("large", (int, float))
        self.assertEqual(result, "large")


class ReadQueryStringTestCase(unittest.TestCase):

    def test_none_input(self):
        self.assertIsNone(read_query_string(None))

    def test_empty_string(self):
        self.assertEqual(read_query_string(""), {})

    def test_dotted_config_keys(self):
        result = read_query_string("decoder.svm_c=5,tag.known_bits=20,imaging.camera.focal_px=3500.5")
        self.assertEqual(result, {"decoder.svm_c": 5, "tag.known_bits": 20, "imaging.camera.focal_px": 3500.5})

    def test_type_conversion_bool(self):
        result = read_query_string("enabled=true,disabled=false")
        self.assertTrue(result["enabled"])
        self.assertFalse(result["disabled"])

    def test_whitespace_trimming(self):
        self.assertEqual(read_query_string("  tag.preset  =  large  "), {"tag.preset": "large"})

    def test_invalid_pair_raises(self):
        with self.assertRaises(ValueError):
            read_query_string("invalid_no_equals")


class BitsHexTestCase(unittest.TestCase):

    def test_msb_first(self):
        self.assertEqual(bits_to_hex([1, 0, 1, 0, 0, 0, 0, 1]), "a1")
        self.assertEqual(hex_to_bits("a1"), [1, 0, 1, 0, 0, 0, 0, 1])

    def test_partial_byte_is_zero_padded(self):
        self.assertEqual(bits_to_hex([1, 1, 1]), "e0")
        self.assertEqual(bits_to_hex([]), "")

    def test_truncation(self):
        self.assertEqual(hex_to_bits("ff00", 10), [1] * 8 + [0, 0])

    def test_invalid_input(self):
        with self.assertRaises(ValueError):
            hex_to_bits("xyz")
        with self.assertRaises(ValueError):
            hex_to_bits("ff", 9)


if __name__ == '__main__':
    unittest.main()
