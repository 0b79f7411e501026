from aircode.decoder.flatten import flatten_intensity, fit_quadratic
from aircode.decoder.ellipses import (EllipseCandidate, detect_ellipses, fit_dual_conic, group_candidates,
                                      select_marker_candidates)
from aircode.decoder.quad import MarkerQuad, find_marker_quad, solve_affine
from aircode.decoder.rectify import Orientation, cell_means, identify_orientation, rectify
from aircode.decoder.features import extract_features, feature_matrix, ring_count
from aircode.decoder.svm import BitClassifier, train_bit_classifier
from aircode.decoder.pose import PoseEstimate, estimate_pose, rotation_error_deg
from aircode.decoder.pipeline import (CodewordReading, DecodeResult, decode_tag, read_codeword, correct_codeword,
                                      reference_layout)
