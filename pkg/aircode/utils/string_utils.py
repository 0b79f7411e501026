import json
from typing import Any, Iterable, Optional

import numpy as np


def to_pretty_json(data: Any) -> str:
    """Format a dictionary or object as a pretty JSON string with proper newlines."""
    json_str = json.dumps(data, indent=2, sort_keys=True, default=_json_default, ensure_ascii=False)
    return json_str.replace("\\n", "\n")


def _json_default(obj: Any):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return str(obj)


def str_to_bool(s: str):
    if s.lower() in ("true", "yes", "on", "1"): return True
    if s.lower() in ("false", "no", "off", "0"): return False
    raise ValueError


def try_convert(value: str, data_types: tuple) -> Any:
    for type_constructor in data_types:
        try:
            return type_constructor(value)
        except ValueError:
            continue
    return value


def read_query_string(query_string: Optional[str]) -> Optional[dict[str, Any]]:
    """Parse 'a.b=1,c=true' style overrides into a dict with converted values (bool, int, float, str)."""
    if query_string is None:
        return None
    if not query_string:
        return {}

    kv_pairs = query_string.split(",")
    kv_dict = {}
    for kv_pair in kv_pairs:
        if "=" not in kv_pair:
            raise ValueError(f"Invalid query string pair: {kv_pair}")
        k, v = kv_pair.split("=", 1)
        k, v = k.strip(), v.strip()
        kv_dict[k] = try_convert(v, (str_to_bool, int, float))
    return kv_dict


def bits_to_hex(bits: Iterable[int]) -> str:
    """Pack a bit sequence (MSB first, zero-padded to whole bytes) into a lowercase hex string."""
    bits = np.asarray(list(bits), dtype=np.uint8)
    if bits.size == 0:
        return ""
    return np.packbits(bits).tobytes().hex()


def hex_to_bits(hex_string: str, n_bits: Optional[int] = None) -> list[int]:
    """Unpack a hex string into bits (MSB first); truncated to n_bits if given."""
    try:
        data = bytes.fromhex(hex_string.strip())
    except ValueError as e:
        raise ValueError(f"Not a hex string: '{hex_string}'") from e
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8)).tolist()
    if n_bits is not None:
        if n_bits > len(bits):
            raise ValueError(f"Hex string carries {len(bits)} bits, but {n_bits} were requested")
        bits = bits[:n_bits]
    return bits
