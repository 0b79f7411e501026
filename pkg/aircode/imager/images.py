"""Gray images with a physical pixel pitch and their 16-bit PGM representation."""
import logging
import os
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from aircode.errors import FormatError, InvalidInputError
from aircode.utils.file_utils import PathLike, load_json, store_file, store_json

module_logger = logging.getLogger(__name__)

FULL_SCALE = 2.0
PGM_MAXVAL = 65535
STACK_MANIFEST = "captures.json"


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Single channel intensities indexed (row, col) with the pixel pitch in mm."""
    pixels: np.ndarray
    pitch_mm: float

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=float)
        if pixels.ndim != 2 or pixels.size == 0:
            raise InvalidInputError(f"Image must be a non-empty 2-D array, got shape {pixels.shape}", key="image")
        if not np.all(np.isfinite(pixels)):
            raise InvalidInputError("Image contains non-finite pixels", key="image")
        if pixels.min() < 0:
            raise InvalidInputError(f"Image contains negative pixels ({pixels.min():.3e})", key="image")
        if not np.isfinite(self.pitch_mm) or self.pitch_mm <= 0:
            raise InvalidInputError(f"Pixel pitch must be positive, but is {self.pitch_mm}", key="pitch")
        object.__setattr__(self, "pixels", pixels)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.pixels.shape

    @classmethod
    def clipped(cls, pixels: np.ndarray, pitch_mm: float) -> "GrayImage":
        """An image from arbitrary values, negative ones set to zero."""
        return cls(np.clip(pixels, 0.0, None), pitch_mm)

    def with_pixels(self, pixels: np.ndarray) -> "GrayImage":
        return GrayImage.clipped(pixels, self.pitch_mm)

    def rms_difference(self, other: "GrayImage", region: Optional[Tuple[slice, slice]] = None) -> float:
        if self.shape != other.shape:
            raise InvalidInputError(f"Image shapes differ: {self.shape} vs {other.shape}", key="shape")
        a, b = self.pixels, other.pixels
        if region is not None:
            a, b = a[region], b[region]
        return float(np.sqrt(np.mean((a - b) ** 2)))


def encode_pgm(image: GrayImage, full_scale: float = FULL_SCALE) -> bytes:
    """16-bit binary PGM with the pitch and the quantization scale as comments."""
    scale = full_scale / PGM_MAXVAL
    levels = np.clip(np.rint(image.pixels / scale), 0, PGM_MAXVAL).astype(">u2")
    header = (f"P5\n# pitch_mm {image.pitch_mm!r}\n# scale {scale!r}\n"
              f"{image.width} {image.height}\n{PGM_MAXVAL}\n")
    return header.encode("ascii") + levels.tobytes()


_TOKEN = re.compile(rb"\s*(#[^\n]*\n|\S+)")


def decode_pgm(data: bytes, source: str = "<bytes>") -> GrayImage:
    tokens: List[bytes] = []
    comments: Dict[str, float] = {}
    pos = 0
    while len(tokens) < 4:
        match = _TOKEN.match(data, pos)
        if match is None:
            raise FormatError(f"Truncated PGM header in {source}", key="header")
        token = match.group(1)
        pos = match.end()
        if token.startswith(b"#"):
            parts = token[1:].decode("ascii", errors="replace").split()
            if len(parts) == 2:
                try:
                    comments[parts[0]] = float(parts[1])
                except ValueError:
                    pass
        else:
            tokens.append(token)
    if tokens[0] != b"P5":
        raise FormatError(f"{source} is not a binary PGM (magic {tokens[0]!r})", key="magic")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError(f"Invalid PGM dimensions in {source}", key="header")
    if maxval != PGM_MAXVAL:
        raise FormatError(f"{source} is not a 16-bit PGM (maxval {maxval})", key="maxval")
    if "pitch_mm" not in comments:
        raise FormatError(f"{source} misses the '# pitch_mm' comment", key="pitch_mm")
    pos += 1  # single whitespace after maxval
    expected = width * height * 2
    if len(data) - pos != expected:
        raise FormatError(f"{source} holds {len(data) - pos} pixel bytes, expected {expected}", key="payload")
    levels = np.frombuffer(data, dtype=">u2", offset=pos).reshape(height, width)
    scale = comments.get("scale", FULL_SCALE / PGM_MAXVAL)
    return GrayImage(levels.astype(float) * scale, comments["pitch_mm"])


def write_pgm(image: GrayImage, file_path: PathLike, full_scale: float = FULL_SCALE) -> str:
    dir_path, file_name = os.path.split(str(file_path))
    return store_file(encode_pgm(image, full_scale), file_name, dir_path or os.curdir)


def read_pgm(file_path: PathLike) -> GrayImage:
    with open(file_path, "rb") as f:
        return decode_pgm(f.read(), str(file_path))


def write_capture_stack(captures: List[GrayImage], dir_path: PathLike, activation_alpha: float,
                        seed: int, pattern_ids: Optional[List[str]] = None, full_scale: float = FULL_SCALE) -> str:
    """Numbered PGMs capture_000.pgm, ... next to a manifest with the pattern ids, alpha and seed."""
    pattern_ids = pattern_ids or [f"shift_{i}" for i in range(len(captures))]
    files = []
    for i, capture in enumerate(captures):
        file_name = f"capture_{i:03d}.pgm"
        write_pgm(capture, os.path.join(dir_path, file_name), full_scale)
        files.append(file_name)
    manifest = {"files": files, "pattern_ids": pattern_ids, "activation_alpha": activation_alpha, "seed": seed}
    return store_json(manifest, STACK_MANIFEST, dir_path)


def read_capture_stack(dir_path: PathLike) -> Tuple[List[GrayImage], Dict]:
    manifest_path = os.path.join(dir_path, STACK_MANIFEST)
    if not os.path.exists(manifest_path):
        raise FormatError(f"No {STACK_MANIFEST} in {dir_path}", key="manifest")
    manifest = load_json(manifest_path)
    try:
        captures = [read_pgm(os.path.join(dir_path, name)) for name in manifest["files"]]
        float(manifest["activation_alpha"])
    except KeyError as e:
        raise FormatError(f"Capture manifest misses {e}", key=str(e))
    return captures, manifest
