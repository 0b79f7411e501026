import logging
from dataclasses import dataclass, field
from datetime import datetime
from typing import Dict, Optional

import numpy as np

from aircode.codec.layout import TagConfig, TagLayout, generate_layout
from aircode.codec.reed_solomon import rs_decode, rs_encode
from aircode.decoder.ellipses import detect_ellipses, select_marker_candidates
from aircode.decoder.features import feature_matrix
from aircode.decoder.flatten import flatten_intensity
from aircode.decoder.pose import PoseEstimate, estimate_pose
from aircode.decoder.quad import MarkerQuad, find_marker_quad
from aircode.decoder.rectify import Orientation, identify_orientation, rectify
from aircode.decoder.svm import BitClassifier, train_bit_classifier
from aircode.errors import InvalidPoseError
from aircode.imager.images import GrayImage
from aircode.settings import DecoderConfig
from aircode.utils.string_utils import bits_to_hex

module_logger = logging.getLogger(__name__)


class StageClock:

    def __init__(self):
        self.seconds: Dict[str, float] = {}
        self._last = datetime.now()

    def lap(self, stage: str):
        now = datetime.now()
        self.seconds[stage] = (now - self._last).total_seconds()
        self._last = now


@dataclass(eq=False)
class CodewordReading:
    """The classified codeword cells of a tag before error correction."""
    codeword: np.ndarray
    quad: MarkerQuad
    orientation: Orientation
    classifier: BitClassifier
    ellipse_count: int
    candidate_count: int
    clock: StageClock = field(default_factory=StageClock, repr=False)


@dataclass(eq=False)
class DecodeResult:
    payload: np.ndarray
    raw_bit_errors: int
    reading: CodewordReading
    pose: Optional[PoseEstimate] = None

    @property
    def payload_hex(self) -> str:
        return bits_to_hex(self.payload)

    @property
    def stage_seconds(self) -> Dict[str, float]:
        return dict(self.reading.clock.seconds)

    def to_dict(self, timings: bool = True) -> Dict:
        """Diagnostics; without timings the report is reproducible byte for byte."""
        reading = self.reading
        report = {
            "payload_hex": self.payload_hex,
            "payload_bits": "".join(str(int(b)) for b in self.payload),
            "raw_bit_errors": self.raw_bit_errors,
            "ellipse_count": reading.ellipse_count,
            "candidate_count": reading.candidate_count,
            "quad": reading.quad.to_dict(),
            "orientation_deg": reading.orientation.degrees,
            "orientation_margin": reading.orientation.margin,
            "training_accuracy": reading.classifier.training_accuracy,
            "pose": self.pose.to_dict() if self.pose is not None else None
        }
        if timings:
            report["stage_seconds"] = self.stage_seconds
        return report


def reference_layout(tag_config: TagConfig, payload_bits: int) -> TagLayout:
    """Cell roles for a payload length; the roles do not depend on the payload itself."""
    return generate_layout(np.zeros(payload_bits, dtype=np.uint8), tag_config)


def classify_cells(rect: GrayImage, layout: TagLayout, config: DecoderConfig):
    """Train on the known cells of an oriented rectified tag and classify the codeword cells."""
    known = layout.known_cells()
    known_features, _ = feature_matrix(rect, [(r, c) for r, c, _ in known], config)
    classifier = train_bit_classifier(known_features, np.array([bit for _, _, bit in known]), config)
    data_features, _ = feature_matrix(rect, layout.payload_map, config)
    return classifier, classifier.predict(data_features)


def read_codeword(image: GrayImage, tag_config: TagConfig, payload_bits: int,
                  decoder_config: Optional[DecoderConfig] = None) -> CodewordReading:
    """flatten, detect ellipses, find the marker quad, rectify, orient and classify the codeword cells"""
    config = decoder_config or DecoderConfig()
    clock = StageClock()
    layout = reference_layout(tag_config, payload_bits)

    flat = flatten_intensity(image)
    clock.lap("flatten")
    ellipses = detect_ellipses(flat, config)
    candidates = select_marker_candidates(ellipses, config)
    module_logger.info("Found %d ellipse groups, %d marker candidates", len(ellipses), len(candidates))
    clock.lap("ellipses")
    quad = find_marker_quad([c.center for c in candidates], config)
    clock.lap("quad")
    rect = rectify(flat, quad, tag_config, config.out_px_per_cell)
    clock.lap("rectify")
    orientation = identify_orientation(rect, tag_config, config)
    rect = orientation.apply(rect)
    clock.lap("orientation")
    classifier, codeword = classify_cells(rect, layout, config)
    clock.lap("classifier")
    return CodewordReading(codeword, orientation.corrected_quad(quad), orientation, classifier, len(ellipses),
                           len(candidates), clock)


def correct_codeword(reading: CodewordReading, tag_config: TagConfig, payload_bits: int,
                     intrinsics: Optional[np.ndarray] = None) -> DecodeResult:
    """Reed-Solomon correction of a reading, and the tag pose when intrinsics are given."""
    payload = rs_decode(reading.codeword, payload_bits, tag_config.ecc_redundancy)
    raw_bit_errors = int(np.count_nonzero(rs_encode(payload, tag_config.ecc_redundancy) != reading.codeword))
    reading.clock.lap("ecc")
    pose = None
    if intrinsics is not None:
        try:
            pose = estimate_pose(reading.quad, intrinsics, tag_config.marker_square_mm)
        except InvalidPoseError as e:
            module_logger.warning("Payload decoded, but no pose: %s", e)
        reading.clock.lap("pose")
    module_logger.info("Decoded %d payload bits with %d raw bit errors", payload_bits, raw_bit_errors)
    module_logger.debug("Stage seconds: %s", reading.clock.seconds)
    return DecodeResult(payload, raw_bit_errors, reading, pose)


def decode_tag(image: GrayImage, tag_config: TagConfig, payload_bits: int,
               decoder_config: Optional[DecoderConfig] = None,
               intrinsics: Optional[np.ndarray] = None) -> DecodeResult:
    """
    Recover the payload from the global component image of a single tag. Stage failures raise a
    StageError naming the stage; an uncorrectable codeword raises UnrecoverableError.
    """
    reading = read_codeword(image, tag_config, payload_bits, decoder_config)
    return correct_codeword(reading, tag_config, payload_bits, intrinsics)
