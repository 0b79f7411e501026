"""
Simulated round trips: encode a payload, render the global component of the tag, view it through a camera,
shade and capture it under shifted checkerboards, separate the captures and decode. Sweeps repeat round
trips over cell sizes, tilt angles or noise levels.
"""
import logging
from dataclasses import asdict, dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from aircode.codec.layout import TagConfig, TagLayout, capacity, generate_layout
from aircode.codec.reed_solomon import codeword_length
from aircode.decoder.pipeline import correct_codeword, read_codeword
from aircode.decoder.pose import rotation_error_deg
from aircode.errors import InvalidInputError, StageError
from aircode.imager.camera import CameraModel, apply_camera
from aircode.imager.degrade import DegradationSpec, add_noise, add_specular, shade
from aircode.imager.images import GrayImage
from aircode.imager.render import render_radiosity
from aircode.imager.separation import SeparationResult, checkerboard_patterns, scattering_kernel, separate, \
    simulate_captures
from aircode.scatter.design import AirPocketParams, ContrastModel, albedo_curve, contrast_curve, recommend_parameters
from aircode.scatter.kubelka_munk import KmConstants
from aircode.scatter.material import load_fixture_material
from aircode.settings import AirCodeConfig
from aircode.utils.log_utils import loglevel
from aircode.utils.string_utils import bits_to_hex

module_logger = logging.getLogger(__name__)

SWEEP_AXES = ("cell_size", "angle", "noise")
SCATTER_KERNEL_RADIUS_MM = 5.0


@dataclass(frozen=True)
class RoundTripReport:
    seed: int
    payload_hex: str
    success: bool
    decoded_hex: Optional[str] = None
    stage: Optional[str] = None
    reason: Optional[str] = None
    raw_bit_errors: Optional[int] = None
    bit_accuracy: Optional[float] = None
    rotation_error_deg: Optional[float] = None
    translation_error_mm: Optional[float] = None
    tilt_deg: float = 0.0
    tilt_axis: str = "x"
    cell_size_mm: float = 1.5
    noise_sigma: float = 0.0

    def to_dict(self) -> Dict:
        return asdict(self)


class TagDesigner:
    """Material, pocket parameters and contrast model, computed once per cell size."""

    def __init__(self, config: AirCodeConfig, km: Optional[KmConstants] = None):
        self.config = config
        self.km = km if km is not None else load_fixture_material(config.grids.freqs(), config.material.fixture)
        self.radii = config.grids.radii()
        self.model = ContrastModel(self.km, self.radii, config.design_targets.disc_radius_factor)
        self._params: Dict[float, AirPocketParams] = {}
        self._kernels: Dict[Tuple[float, float], np.ndarray] = {}

    def params(self, tag_config: TagConfig) -> AirPocketParams:
        lateral = tag_config.cell_size_mm
        if lateral not in self._params:
            self._params[lateral] = recommend_parameters(self.km, self.config.design_targets, lateral, self.radii)
        return self._params[lateral]

    def render(self, layout: TagLayout) -> GrayImage:
        imaging = self.config.imaging
        return render_radiosity(layout, self.km, self.params(layout.config), imaging.render_pitch_mm,
                                imaging.margin_cells, self.radii, self.model)

    def capture_kernel(self, depth_mm: float, pitch_mm: float) -> np.ndarray:
        key = (depth_mm, pitch_mm)
        if key not in self._kernels:
            self._kernels[key] = scattering_kernel(self.km, depth_mm, pitch_mm, self.radii,
                                                   max_radius_mm=SCATTER_KERNEL_RADIUS_MM)
        return self._kernels[key]


def random_payload(bits: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, bits).astype(np.uint8)


def scene_captures(global_image: GrayImage, camera: CameraModel, designer: TagDesigner, depth_mm: float,
                   degradation: DegradationSpec) -> List[GrayImage]:
    """
    View the rendered global component through the camera, add the direct reflection of the surface, shade
    both and capture them under shifted checkerboards with independent sensor noise per capture.
    """
    imaging = designer.config.imaging
    board = imaging.checkerboard
    viewed = apply_camera(global_image, camera)
    direct = add_specular(GrayImage(np.full(viewed.shape, imaging.direct_albedo), viewed.pitch_mm), degradation)
    viewed, direct = shade(viewed, degradation), shade(direct, degradation)
    patterns = checkerboard_patterns(viewed.shape, board.period_px, board.shift_count)
    kernel = designer.capture_kernel(depth_mm, viewed.pitch_mm)
    captures = simulate_captures(direct, viewed, patterns, kernel=kernel)
    return [add_noise(capture, degradation.with_seed(degradation.seed * len(captures) + i))
            for i, capture in enumerate(captures)]


def capture_scene(global_image: GrayImage, camera: CameraModel, designer: TagDesigner, depth_mm: float,
                  degradation: DegradationSpec) -> SeparationResult:
    captures = scene_captures(global_image, camera, designer, depth_mm, degradation)
    return separate(captures, designer.config.imaging.checkerboard.activation_alpha)


def simulate_global_image(layout: TagLayout, designer: TagDesigner, camera: CameraModel,
                          degradation: DegradationSpec) -> GrayImage:
    params = designer.params(layout.config)
    return capture_scene(designer.render(layout), camera, designer, params.depth, degradation).global_


def round_trip(config: AirCodeConfig, seed: int = 0, designer: Optional[TagDesigner] = None,
               tag_config: Optional[TagConfig] = None, payload: Optional[Sequence[int]] = None,
               tilt_deg: Optional[float] = None, tilt_axis: Optional[str] = None,
               degradation: Optional[DegradationSpec] = None, payload_bits: Optional[int] = None) -> RoundTripReport:
    """
    One encode, image and decode cycle. Stage failures are recorded in the report. The report depends only
    on the inputs and the seed.
    """
    designer = designer or TagDesigner(config)
    tag_config = tag_config or config.tag
    experiments = config.experiments
    tilt_deg = experiments.tilt_deg if tilt_deg is None else tilt_deg
    tilt_axis = tilt_axis or experiments.tilt_axis
    degradation = (degradation or config.degradation).with_seed(seed)
    rng = np.random.default_rng(seed)
    if payload is None:
        payload = random_payload(payload_bits or experiments.payload_bits, rng)
    payload = np.asarray(payload, dtype=np.uint8)

    layout = generate_layout(payload, tag_config)
    camera = config.imaging.camera.camera(tilt_deg, tilt_axis)
    image = simulate_global_image(layout, designer, camera, degradation)
    context = dict(seed=seed, payload_hex=bits_to_hex(payload), tilt_deg=tilt_deg, tilt_axis=tilt_axis,
                   cell_size_mm=tag_config.cell_size_mm, noise_sigma=degradation.sensor_noise_sigma)
    try:
        reading = read_codeword(image, tag_config, payload.size, config.decoder)
    except StageError as e:
        module_logger.info("Round trip %d failed at stage %s: %s", seed, e.stage, e.reason)
        return RoundTripReport(success=False, stage=e.stage, reason=e.reason, **context)
    accuracy = float(np.mean(reading.codeword == layout.codeword_bits))
    try:
        result = correct_codeword(reading, tag_config, payload.size, camera.intrinsics)
    except StageError as e:
        module_logger.info("Round trip %d failed at stage %s: %s", seed, e.stage, e.reason)
        return RoundTripReport(success=False, stage=e.stage, reason=e.reason, bit_accuracy=accuracy, **context)

    rotation_error, translation_error = None, None
    if result.pose is not None:
        rotation_error = rotation_error_deg(result.pose.rotation, camera.rotation)
        translation_error = float(np.linalg.norm(result.pose.translation - camera.translation))
    success = bool(np.array_equal(result.payload, payload))
    return RoundTripReport(success=success, decoded_hex=result.payload_hex, raw_bit_errors=result.raw_bit_errors,
                           bit_accuracy=accuracy, rotation_error_deg=rotation_error,
                           translation_error_mm=translation_error, stage=None if success else "payload",
                           reason=None if success else "Decoded payload differs", **context)


def sweep_points(config: AirCodeConfig, axis: str, values: Optional[Sequence[float]] = None) -> List[float]:
    if axis not in SWEEP_AXES:
        raise InvalidInputError(f"Unknown sweep axis '{axis}', choose from {SWEEP_AXES}", key="axis")
    values = config.experiments.sweep.get(axis, []) if values is None else values
    if not values:
        raise InvalidInputError(f"No values to sweep along '{axis}'", key="values")
    return [float(v) for v in values]


def fitting_payload_bits(tag_configs: Sequence[TagConfig], wanted: int) -> int:
    """The longest whole-byte payload up to wanted bits whose codeword fits every tag."""
    bits = wanted - wanted % 8
    while bits > 0:
        if all(codeword_length(bits, c.ecc_redundancy) <= capacity(c) for c in tag_configs):
            return bits
        bits -= 8
    raise InvalidInputError("No payload fits all swept tags", key="payload_bits")


def _trial_setup(config: AirCodeConfig, axis: str, value: float) -> Dict:
    if axis == "cell_size":
        return {"tag_config": replace(config.tag, cell_size_mm=value)}
    if axis == "angle":
        return {"tilt_deg": value}
    return {"degradation": replace(config.degradation, sensor_noise_sigma=value)}


def sweep(config: AirCodeConfig, axis: str, values: Optional[Sequence[float]] = None, trials: Optional[int] = None,
          seed: int = 0, designer: Optional[TagDesigner] = None) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Monte Carlo round trips along one axis. Returns the per-trial table and a per-value summary with the
    success rate, the mean raw bit accuracy and the largest pose rotation error.
    """
    trials = config.experiments.trials if trials is None else trials
    if trials < 1:
        raise InvalidInputError(f"A sweep needs at least one trial, got {trials}", key="trials")
    points = sweep_points(config, axis, values)
    designer = designer or TagDesigner(config)
    setups = [_trial_setup(config, axis, value) for value in points]
    payload_bits = config.experiments.payload_bits
    if axis == "cell_size":
        payload_bits = fitting_payload_bits([s["tag_config"] for s in setups], payload_bits)
        module_logger.info("Sweeping cell sizes with %d payload bits", payload_bits)
    rows = []
    with loglevel(["aircode.decoder", "aircode.scatter", "aircode.imager"], logging.WARNING):
        for index, (value, setup) in enumerate(zip(tqdm(points, desc=f"Sweep over {axis}"), setups)):
            for trial in range(trials):
                trial_seed = seed * 1_000_000 + index * 1_000 + trial
                report = round_trip(config, trial_seed, designer, payload_bits=payload_bits, **setup)
                rows.append({"axis": axis, "value": value, "trial": trial, **report.to_dict()})
    df_trials = pd.DataFrame(rows)
    df_trials["success"] = df_trials["success"].astype(float)
    for column in ("bit_accuracy", "rotation_error_deg", "translation_error_mm", "raw_bit_errors"):
        df_trials[column] = pd.to_numeric(df_trials[column], errors="coerce")
    df_summary = (df_trials.groupby("value", sort=False)
                  .agg(success_rate=("success", "mean"),
                       mean_bit_accuracy=("bit_accuracy", "mean"),
                       max_rotation_error_deg=("rotation_error_deg", "max"),
                       trials=("trial", "count"))
                  .reset_index())
    df_summary.insert(0, "axis", axis)
    module_logger.info("Sweep over %s:\n%s", axis, df_summary.to_string(index=False))
    return df_trials, df_summary


def pose_evaluation(config: AirCodeConfig, angles: Sequence[float], seed: int = 0,
                    designer: Optional[TagDesigner] = None, axis: str = "y") -> pd.DataFrame:
    """Pose errors of single round trips over tilt angles."""
    designer = designer or TagDesigner(config)
    rows = []
    with loglevel(["aircode.decoder", "aircode.scatter", "aircode.imager"], logging.WARNING):
        for index, angle in enumerate(tqdm(angles, desc="Pose evaluation")):
            report = round_trip(config, seed + index, designer, tilt_deg=float(angle), tilt_axis=axis)
            rows.append({"tilt_deg": float(angle), "success": report.success,
                         "rotation_error_deg": report.rotation_error_deg,
                         "translation_error_mm": report.translation_error_mm})
    return pd.DataFrame(rows)


def design_curves(km: KmConstants, lateral_mm: float, radii: Optional[np.ndarray] = None,
                  depths: Sequence[float] = tuple(np.linspace(0.0, 5.0, 51)),
                  heights: Sequence[float] = tuple(np.linspace(0.0, 2.0, 41)),
                  contrast_depths: Sequence[float] = (1.0, 2.0, 3.0),
                  disc_radius_factor: float = 5.0) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Transmissive albedo over cover depth, and pocket contrast over height for a few depths."""
    df_albedo = pd.DataFrame({"d_mm": list(depths), "alpha": albedo_curve(km, depths)})
    df_contrast = pd.DataFrame({"h_mm": list(heights)})
    positive = [h for h in heights if h > 0]
    for depth in contrast_depths:
        values = dict(zip(positive, contrast_curve(km, depth, positive, lateral_mm, radii, disc_radius_factor)))
        df_contrast[f"contrast_d{depth:g}"] = [values.get(h, 0.0) for h in heights]
    return df_albedo, df_contrast
