"""
Typed access to the packaged defaults in resources/default_config.json, a user config layered on top
and '--set' style overrides with dotted keys.
"""
import copy
import logging
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional

import numpy as np

from aircode.codec.layout import TagConfig
from aircode.errors import FormatError, InvalidInputError
from aircode.imager.camera import CameraModel
from aircode.imager.degrade import DegradationSpec
from aircode.scatter.design import DesignTargets
from aircode.scatter.profiles import frequency_grid, radial_grid
from aircode.utils.file_utils import PathLike, load_json, load_packaged_json

module_logger = logging.getLogger(__name__)

DEFAULT_CONFIG = "resources/default_config.json"
CONFIG_VERSION = 1


def _from_section(cls, section: Dict, name: str):
    known = {f.name for f in fields(cls)}
    unknown = set(section) - known
    if unknown:
        raise InvalidInputError(f"Unknown entries {sorted(unknown)} in config section '{name}'", key=name)
    return cls(**section)


@dataclass(frozen=True)
class GridSettings:
    radial_samples: int = 512
    r_max_mm: float = 20.0
    freq_samples: int = 512
    q_max_per_mm: float = 25.6

    @classmethod
    def from_dict(cls, spec: Dict) -> "GridSettings":
        return _from_section(cls, spec, "grids")

    def radii(self) -> np.ndarray:
        return radial_grid(self.radial_samples, self.r_max_mm)

    def freqs(self) -> np.ndarray:
        return frequency_grid(self.freq_samples, self.q_max_per_mm)


@dataclass(frozen=True)
class MaterialSettings:
    fixture: str = "resources/fixture_material.json"
    sample_thickness_mm: float = 2.0
    max_halvings: int = 30
    newton_tol: float = 1e-12
    newton_max_iter: int = 100
    convergence_rtol: float = 1e-6

    @classmethod
    def from_dict(cls, spec: Dict) -> "MaterialSettings":
        return _from_section(cls, spec, "material")

    def estimation_kwargs(self) -> Dict:
        return {"max_halvings": self.max_halvings, "newton_tol": self.newton_tol,
                "newton_max_iter": self.newton_max_iter, "rtol": self.convergence_rtol}


@dataclass(frozen=True)
class GeometrySettings:
    voxel_pitch_mm: float = 0.1
    base_thickness_mm: float = 1.0

    @classmethod
    def from_dict(cls, spec: Dict) -> "GeometrySettings":
        return _from_section(cls, spec, "geometry")


@dataclass(frozen=True)
class CameraSettings:
    focal_px: float = 4000.0
    standoff_mm: float = 400.0
    width_px: int = 400
    height_px: int = 400

    @classmethod
    def from_dict(cls, spec: Dict) -> "CameraSettings":
        return _from_section(cls, spec, "camera")

    def camera(self, tilt_deg: float = 0.0, axis: str = "x") -> CameraModel:
        return CameraModel.tilted(tilt_deg, axis, self.focal_px, self.standoff_mm, self.width_px, self.height_px)


@dataclass(frozen=True)
class CheckerboardSettings:
    period_px: int = 2
    shift_count: int = 8
    activation_alpha: float = 0.5

    def __post_init__(self):
        if not 0 < self.activation_alpha < 1:
            raise InvalidInputError(f"Activation fraction must be in (0, 1), but is {self.activation_alpha}",
                                    key="activation_alpha")

    @classmethod
    def from_dict(cls, spec: Dict) -> "CheckerboardSettings":
        return _from_section(cls, spec, "checkerboard")


@dataclass(frozen=True)
class ImagingSettings:
    render_pitch_mm: float = 0.1
    margin_cells: int = 3
    direct_albedo: float = 0.25
    full_scale: float = 2.0
    camera: CameraSettings = field(default_factory=CameraSettings)
    checkerboard: CheckerboardSettings = field(default_factory=CheckerboardSettings)

    @classmethod
    def from_dict(cls, spec: Dict) -> "ImagingSettings":
        values = dict(spec)
        values["camera"] = CameraSettings.from_dict(values.get("camera", {}))
        values["checkerboard"] = CheckerboardSettings.from_dict(values.get("checkerboard", {}))
        return _from_section(cls, values, "imaging")


@dataclass(frozen=True)
class DecoderConfig:
    """Tunables of the decoding pipeline; pixel sizes refer to the full-resolution input image."""
    pyramid_levels: int = 4
    axis_ratio_max: float = 1.8
    group_tau_px: float = 5.0
    corner_eta_px: float = 6.0
    feature_span_cells: int = 7
    out_px_per_cell: int = 8
    svm_c: float = 10.0
    svm_iterations: int = 2000
    conic_residual_max: float = 0.05
    min_edge_pixels: int = 16
    min_axis_px: float = 3.0
    max_quad_candidates: int = 12
    min_candidate_support: int = 2
    orientation_margin_min: float = 0.005

    def __post_init__(self):
        if self.pyramid_levels < 1:
            raise InvalidInputError("At least one pyramid level is needed", key="pyramid_levels")
        if self.out_px_per_cell < 4:
            raise InvalidInputError(f"Rectified cells need at least 4 px, got {self.out_px_per_cell}",
                                    key="out_px_per_cell")
        if self.feature_span_cells < 1 or self.feature_span_cells % 2 == 0:
            raise InvalidInputError(f"Feature span must be odd, got {self.feature_span_cells}",
                                    key="feature_span_cells")

    @classmethod
    def from_dict(cls, spec: Dict) -> "DecoderConfig":
        return _from_section(cls, spec, "decoder")


@dataclass(frozen=True)
class ExperimentSettings:
    payload_bits: int = 56
    tilt_deg: float = 0.0
    tilt_axis: str = "x"
    trials: int = 10
    sweep: Dict[str, List[float]] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, spec: Dict) -> "ExperimentSettings":
        return _from_section(cls, spec, "experiments")


@dataclass(frozen=True)
class AirCodeConfig:
    grids: GridSettings
    material: MaterialSettings
    design_targets: DesignTargets
    tag: TagConfig
    tag_presets: Dict[str, Dict]
    geometry: GeometrySettings
    imaging: ImagingSettings
    degradation: DegradationSpec
    decoder: DecoderConfig
    experiments: ExperimentSettings
    raw: Dict = field(repr=False, compare=False, default_factory=dict)

    @classmethod
    def from_dict(cls, spec: Dict) -> "AirCodeConfig":
        if spec.get("version") != CONFIG_VERSION:
            raise FormatError(f"Unsupported config version {spec.get('version')}, expected {CONFIG_VERSION}",
                              key="version")
        try:
            return cls(grids=GridSettings.from_dict(spec["grids"]),
                       material=MaterialSettings.from_dict(spec["material"]),
                       design_targets=DesignTargets.from_dict(spec["design_targets"]),
                       tag=TagConfig.from_dict(spec["tag"]),
                       tag_presets=dict(spec.get("tag_presets", {})),
                       geometry=GeometrySettings.from_dict(spec["geometry"]),
                       imaging=ImagingSettings.from_dict(spec["imaging"]),
                       degradation=DegradationSpec.from_dict(spec["degradation"]),
                       decoder=DecoderConfig.from_dict(spec["decoder"]),
                       experiments=ExperimentSettings.from_dict(spec["experiments"]),
                       raw=spec)
        except KeyError as e:
            raise FormatError(f"Config misses section {e}", key=str(e))
        except TypeError as e:
            raise InvalidInputError(f"Invalid config entry: {e}", key="config")

    def tag_config(self, preset: Optional[str] = None) -> TagConfig:
        """The tag section, optionally with a named preset applied on top."""
        if preset is None:
            return self.tag
        if preset not in self.tag_presets:
            raise InvalidInputError(f"Unknown tag preset '{preset}', choose from {sorted(self.tag_presets)}",
                                    key="preset")
        return TagConfig.from_dict({**self.tag.to_dict(), **self.tag_presets[preset]})


def deep_merge(base: Dict, update: Dict) -> Dict:
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def dotted_to_nested(overrides: Dict[str, Any]) -> Dict:
    """{'decoder.svm_c': 5} -> {'decoder': {'svm_c': 5}}"""
    nested: Dict = {}
    for dotted, value in overrides.items():
        keys = dotted.split(".")
        node = nested
        for key in keys[:-1]:
            node = node.setdefault(key, {})
        node[keys[-1]] = value
    return nested


def load_config(path: Optional[PathLike] = None, overrides: Optional[Dict[str, Any]] = None) -> AirCodeConfig:
    """Packaged defaults, deep-merged with the user file at path and the dotted-key overrides."""
    spec = load_packaged_json(DEFAULT_CONFIG)
    if path is not None:
        module_logger.info("Loading config from %s", path)
        spec = deep_merge(spec, load_json(path))
    if overrides:
        spec = deep_merge(spec, dotted_to_nested(overrides))
    return AirCodeConfig.from_dict(spec)
