"""Voxel geometry of a printed tag: solid material with air pockets in the band [d, d + h]."""
import logging
import struct
from dataclasses import dataclass

import numpy as np

from aircode.codec.layout import TagLayout
from aircode.errors import FormatError, InvalidInputError
from aircode.scatter.design import AirPocketParams
from aircode.utils.file_utils import PathLike, store_file

module_logger = logging.getLogger(__name__)

MAGIC = b"AIRC"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sHHHHf")


@dataclass(eq=False)
class AirPocketGeometry:
    """Air occupancy on a regular voxel grid indexed (z, y, x); z = 0 is the top surface."""
    occupancy: np.ndarray
    pitch_mm: float
    depth_mm: float
    height_mm: float

    @property
    def shape(self):
        return self.occupancy.shape

    @property
    def bounding_box_mm(self):
        nz, ny, nx = self.occupancy.shape
        return (nx * self.pitch_mm, ny * self.pitch_mm, nz * self.pitch_mm)

    def air_volume_mm3(self) -> float:
        return float(np.count_nonzero(self.occupancy)) * self.pitch_mm ** 3

    def layer_centers_mm(self) -> np.ndarray:
        return (np.arange(self.occupancy.shape[0]) + 0.5) * self.pitch_mm


def _marker_mask(layout: TagLayout, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    mask = np.zeros(np.broadcast(x, y).shape, dtype=bool)
    for cx, cy in layout.marker_centers_mm:
        rho = np.hypot(x - cx, y - cy)
        for inner, outer in layout.config.ring_bounds_mm():
            mask |= (rho >= inner) & (rho <= outer)
    return mask


def lateral_air_mask(layout: TagLayout, pitch_mm: float) -> np.ndarray:
    """Air footprint sampled at pixel centers of the given pitch, indexed (y, x)."""
    config = layout.config
    size = int(round(config.footprint_mm / pitch_mm))
    centers = (np.arange(size) + 0.5) * pitch_mm
    x, y = np.meshgrid(centers, centers, indexing="xy")
    cols = np.clip((x / config.cell_size_mm).astype(int), 0, config.grid_dims - 1)
    rows = np.clip((y / config.cell_size_mm).astype(int), 0, config.grid_dims - 1)
    cell_air = layout.air_cells()[rows, cols]
    return cell_air | _marker_mask(layout, x, y)


def layout_to_geometry(layout: TagLayout, params: AirPocketParams, pitch_mm: float = 0.1,
                       base_thickness_mm: float = 1.0) -> AirPocketGeometry:
    """
    Turn a layout into voxels: a voxel is air when its center lies in the band [d, d + h) and
    laterally inside an air cell or a marker ring. Everything else is solid.
    """
    if pitch_mm <= 0:
        raise InvalidInputError(f"Voxel pitch must be positive, but is {pitch_mm}", key="pitch")
    d, h = params.depth, params.height
    nz = int(np.ceil((d + h + base_thickness_mm) / pitch_mm - 1e-9))
    z = (np.arange(nz) + 0.5) * pitch_mm
    band = (z >= d) & (z < d + h)
    footprint = lateral_air_mask(layout, pitch_mm)
    occupancy = band[:, None, None] & footprint[None, :, :]
    module_logger.debug("Geometry %s voxels with %d air layers", occupancy.shape, int(band.sum()))
    return AirPocketGeometry(occupancy, pitch_mm, d, h)


def expected_air_volume_mm3(layout: TagLayout, height_mm: float) -> float:
    """Analytic air volume: air cells plus marker annuli, times the pocket height."""
    config = layout.config
    cells = float(np.count_nonzero(layout.air_cells())) * config.cell_size_mm ** 2
    rings = sum(np.pi * (outer ** 2 - inner ** 2) for inner, outer in config.ring_bounds_mm())
    return (cells + 4 * rings) * height_mm


def write_geometry(geometry: AirPocketGeometry, file_name: str, dir_path: PathLike) -> str:
    """
    Binary voxel file: a 16 byte little-endian header (magic 'AIRC', uint16 nx, ny, nz, version,
    float32 pitch in mm) followed by the occupancy bits packed MSB first in (z, y, x) order.
    """
    nz, ny, nx = geometry.occupancy.shape
    if max(nx, ny, nz) > 0xFFFF:
        raise InvalidInputError(f"Voxel grid {geometry.occupancy.shape} exceeds the file format", key="voxels")
    header = HEADER.pack(MAGIC, nx, ny, nz, FORMAT_VERSION, geometry.pitch_mm)
    bits = np.packbits(np.ascontiguousarray(geometry.occupancy, dtype=bool).ravel()).tobytes()
    return store_file(header + bits, file_name, dir_path)


def read_geometry(file_path: PathLike, depth_mm: float = float("nan"),
                  height_mm: float = float("nan")) -> AirPocketGeometry:
    with open(file_path, "rb") as f:
        data = f.read()
    if len(data) < HEADER.size:
        raise FormatError(f"Voxel file {file_path} is shorter than its header", key="header")
    magic, nx, ny, nz, version, pitch = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"Bad magic {magic!r} in {file_path}", key="magic")
    if version != FORMAT_VERSION:
        raise FormatError(f"Unsupported voxel file version {version}", key="version")
    count = nx * ny * nz
    payload = np.frombuffer(data, dtype=np.uint8, offset=HEADER.size)
    if payload.size != (count + 7) // 8:
        raise FormatError(f"Voxel payload has {payload.size} bytes, expected {(count + 7) // 8}", key="payload")
    occupancy = np.unpackbits(payload)[:count].astype(bool).reshape(nz, ny, nx)
    return AirPocketGeometry(occupancy, float(pitch), depth_mm, height_mm)
