"""
Tag layouts: a square grid of cells with a concentric-ring marker in each corner block.

    +-----+---------------+-----+
    | TL  |               | TR  |
    +-----+               +-----+
    |        data, known bits   |
    |                     +-----+
    +-----+               |#####|   # orientation cells (always air)
    | BL  |               |# BR |
    +-----+---------------+-----+

Polarity is air = 1 for data and known cells alike.
"""
import enum
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from aircode.codec.reed_solomon import codeword_length, rs_encode
from aircode.errors import CapacityError, FormatError, InvalidInputError
from aircode.utils.file_utils import PathLike, load_json, store_json

module_logger = logging.getLogger(__name__)

CORNERS = ("top_left", "top_right", "bottom_right", "bottom_left")
# additive recurrence based on the plastic number
_PLASTIC = 1.324717957244746
_R2_STEP = (1 / _PLASTIC, 1 / _PLASTIC ** 2)


class CellKind(enum.IntEnum):
    QUIET = 0
    MARKER = 1
    ORIENTATION = 2
    KNOWN_ONE = 3
    KNOWN_ZERO = 4
    DATA = 5


@dataclass(frozen=True)
class TagConfig:
    tag_size_mm: float = 20.0
    cell_size_mm: float = 1.5
    marker_outer_radius_cells: float = 1.5
    marker_ring_count: int = 2
    ecc_redundancy: float = 0.40
    known_bits: int = 16

    def __post_init__(self):
        if not 0.5 <= self.cell_size_mm <= 2.0:
            raise InvalidInputError(f"Cell size must be within [0.5, 2.0] mm, but is {self.cell_size_mm}",
                                    key="cell_size_mm")
        if not 0 <= self.ecc_redundancy < 1:
            raise InvalidInputError(f"Redundancy must be within [0, 1), but is {self.ecc_redundancy}",
                                    key="ecc_redundancy")
        if self.marker_ring_count < 1:
            raise InvalidInputError("A marker needs at least one ring", key="marker_ring_count")
        if self.marker_outer_radius_cells <= 0:
            raise InvalidInputError("Marker radius must be positive", key="marker_outer_radius_cells")
        if self.known_bits < 8 or self.known_bits % 2:
            raise InvalidInputError(f"Known bits must be an even count of at least 8, but are {self.known_bits}",
                                    key="known_bits")
        if self.grid_dims < 8:
            raise InvalidInputError(f"Grid has {self.grid_dims} cells per side, at least 8 are needed",
                                    key="grid_dims")
        if self.grid_dims < 2 * self.marker_block + 2:
            raise InvalidInputError(f"Markers of {self.marker_block} cells do not fit a {self.grid_dims}-cell grid",
                                    key="marker_outer_radius_cells")

    @property
    def grid_dims(self) -> int:
        return int(math.floor(self.tag_size_mm / self.cell_size_mm + 1e-9))

    @property
    def marker_block(self) -> int:
        """Side of the square corner block covered by one marker (cells)."""
        return int(math.ceil(2 * self.marker_outer_radius_cells - 1e-9))

    @property
    def marker_outer_radius_mm(self) -> float:
        return self.marker_outer_radius_cells * self.cell_size_mm

    @property
    def ring_width_mm(self) -> float:
        return self.marker_outer_radius_mm / (2 * self.marker_ring_count - 1)

    @property
    def footprint_mm(self) -> float:
        return self.grid_dims * self.cell_size_mm

    @property
    def marker_square_mm(self) -> float:
        """Side of the square through the four marker centers."""
        return (self.grid_dims - self.marker_block) * self.cell_size_mm

    def ring_bounds_mm(self) -> List[Tuple[float, float]]:
        """(inner, outer) radius of each air ring, outermost first; the innermost ring is a disc."""
        r, w = self.marker_outer_radius_mm, self.ring_width_mm
        return [(max(r - (2 * k + 1) * w, 0.0), r - 2 * k * w) for k in range(self.marker_ring_count)]

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, spec: Dict) -> "TagConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(spec) - known
        if unknown:
            raise InvalidInputError(f"Unknown tag config entries: {sorted(unknown)}", key="tag")
        return cls(**spec)


def capacity(config: TagConfig) -> int:
    """Number of data cells: all cells minus marker blocks, orientation cells and known cells."""
    n, m = config.grid_dims, config.marker_block
    return n * n - 4 * m * m - (2 * m + 1) - config.known_bits


def corner_adjacency(n: int, m: int) -> Dict[str, List[Tuple[int, int]]]:
    """The 2m+1 cells bordering each corner marker block, as (row, col)."""
    inner_lo, inner_hi = m, n - m - 1
    cells = {
        "top_left": [(inner_lo, c) for c in range(0, m + 1)] + [(r, inner_lo) for r in range(0, m)],
        "top_right": [(inner_lo, c) for c in range(inner_hi, n)] + [(r, inner_hi) for r in range(0, m)],
        "bottom_right": [(inner_hi, c) for c in range(inner_hi, n)] + [(r, inner_hi) for r in range(n - m, n)],
        "bottom_left": [(inner_hi, c) for c in range(0, m + 1)] + [(r, m) for r in range(n - m, n)],
    }
    return cells


def marker_centers(config: TagConfig) -> np.ndarray:
    """Marker centers in mm as (x, y) rows, ordered top-left, top-right, bottom-right, bottom-left."""
    half = config.marker_block * config.cell_size_mm / 2
    far = config.footprint_mm - half
    return np.array([[half, half], [far, half], [far, far], [half, far]])


def _structure(config: TagConfig) -> Tuple[np.ndarray, List[Tuple[int, int]]]:
    """Marker, orientation and known cells; returns the kind grid and the free cells in row-major order."""
    n, m = config.grid_dims, config.marker_block
    kinds = np.full((n, n), CellKind.QUIET, dtype=np.int8)
    for r0 in (0, n - m):
        for c0 in (0, n - m):
            kinds[r0:r0 + m, c0:c0 + m] = CellKind.MARKER
    for r, c in corner_adjacency(n, m)["bottom_right"]:
        kinds[r, c] = CellKind.ORIENTATION
    # one solid cell next to every other marker keeps the bottom-right signature unique
    pinned = [(m, m), (m, n - m - 1), (n - m - 1, m)]
    for r, c in pinned:
        kinds[r, c] = CellKind.KNOWN_ZERO

    ones_left = config.known_bits // 2
    zeros_left = config.known_bits // 2 - len(pinned)
    prefer_one = True
    i = 0
    while ones_left + zeros_left > 0:
        i += 1
        if i > 100 * n * n:
            raise InvalidInputError("Could not place the known bits", key="known_bits")
        x = (0.5 + i * _R2_STEP[0]) % 1.0
        y = (0.5 + i * _R2_STEP[1]) % 1.0
        r, c = int(y * n), int(x * n)
        if kinds[r, c] != CellKind.QUIET:
            continue
        if (prefer_one and ones_left) or not zeros_left:
            kinds[r, c] = CellKind.KNOWN_ONE
            ones_left -= 1
        else:
            kinds[r, c] = CellKind.KNOWN_ZERO
            zeros_left -= 1
        prefer_one = not prefer_one

    free = [(int(r), int(c)) for r, c in zip(*np.nonzero(kinds == CellKind.QUIET))]
    return kinds, free


@dataclass(eq=False)
class TagLayout:
    config: TagConfig
    cells: np.ndarray
    bits: np.ndarray
    payload_map: List[Tuple[int, int]]
    marker_centers_mm: np.ndarray
    payload_bits: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))

    @property
    def grid_dims(self) -> int:
        return self.config.grid_dims

    @property
    def codeword_bits(self) -> np.ndarray:
        return np.array([self.bits[r, c] for r, c in self.payload_map], dtype=np.uint8)

    def air_cells(self) -> np.ndarray:
        """Boolean grid of cells that become air pockets (marker rings excluded)."""
        return self.bits.astype(bool)

    def known_cells(self) -> List[Tuple[int, int, int]]:
        """(row, col, bit) of all known cells in row-major order."""
        rows, cols = np.nonzero((self.cells == CellKind.KNOWN_ONE) | (self.cells == CellKind.KNOWN_ZERO))
        return [(int(r), int(c), int(self.cells[r, c] == CellKind.KNOWN_ONE)) for r, c in zip(rows, cols)]

    def data_cell_count(self) -> int:
        """Cells available for codeword bits (used and quiet)."""
        return int(np.sum((self.cells == CellKind.DATA) | (self.cells == CellKind.QUIET)))

    def to_dict(self) -> Dict:
        return {
            "version": 1,
            "config": self.config.to_dict(),
            "cells": self.cells.flatten().tolist(),
            "bits": self.bits.flatten().tolist(),
            "marker_centers_mm": self.marker_centers_mm.tolist(),
            "payload_bits": "".join(str(int(b)) for b in self.payload_bits)
        }

    @classmethod
    def from_dict(cls, spec: Dict) -> "TagLayout":
        try:
            config = TagConfig.from_dict(spec["config"])
            payload = np.array([int(ch) for ch in spec["payload_bits"]], dtype=np.uint8)
            cells = np.asarray(spec["cells"], dtype=np.int8)
            bits = np.asarray(spec["bits"], dtype=np.uint8)
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"Invalid layout file: {e}", key="layout")
        n = config.grid_dims
        if cells.size != n * n or bits.size != n * n:
            raise FormatError(f"Layout holds {cells.size} cells, expected {n * n}", key="cells")
        layout = generate_layout(payload, config)
        if not np.array_equal(layout.cells.flatten(), cells) or not np.array_equal(layout.bits.flatten(), bits):
            raise FormatError("Layout cells do not match the payload and config", key="cells")
        return layout

    def save(self, file_name: str, dir_path: PathLike) -> str:
        return store_json(self.to_dict(), file_name, dir_path)

    @classmethod
    def load(cls, file_path: PathLike) -> "TagLayout":
        return cls.from_dict(load_json(file_path))


def generate_layout(payload_bits: Sequence[int], config: Optional[TagConfig] = None) -> TagLayout:
    """
    Encode the payload with Reed-Solomon and place the codeword bits on the free cells in row-major order.
    Free cells beyond the codeword stay solid (quiet).
    """
    config = TagConfig() if config is None else config
    payload = np.asarray(payload_bits, dtype=np.uint8)
    required = codeword_length(payload.size, config.ecc_redundancy) if payload.size else 0
    available = capacity(config)
    if required > available:
        raise CapacityError(available, required)
    codeword = rs_encode(payload, config.ecc_redundancy)

    kinds, free = _structure(config)
    if len(free) != available:
        raise InvalidInputError(f"Layout leaves {len(free)} data cells, expected {available}", key="layout")
    bits = np.zeros(kinds.shape, dtype=np.uint8)
    bits[(kinds == CellKind.KNOWN_ONE) | (kinds == CellKind.ORIENTATION)] = 1
    payload_map = free[:codeword.size]
    for (r, c), bit in zip(payload_map, codeword):
        kinds[r, c] = CellKind.DATA
        bits[r, c] = bit
    module_logger.debug("Layout %dx%d: %d codeword bits on %d data cells", config.grid_dims, config.grid_dims,
                        codeword.size, available)
    return TagLayout(config, kinds, bits, payload_map, marker_centers(config), payload)


def orientation_signature(air: np.ndarray, marker_block: int) -> np.ndarray:
    """Mean air fraction of the cells bordering each corner block, ordered TL, TR, BR, BL."""
    n = air.shape[0]
    adjacency = corner_adjacency(n, marker_block)
    return np.array([np.mean([air[r, c] for r, c in adjacency[corner]]) for corner in CORNERS])


def canonical_rotation(air: np.ndarray, marker_block: int) -> int:
    """Number of counter-clockwise quarter turns that bring the all-air corner to the bottom right."""
    signature = orientation_signature(air, marker_block)
    return (int(np.argmax(signature)) - 2) % 4
