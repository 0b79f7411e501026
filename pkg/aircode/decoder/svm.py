"""
Linear soft-margin SVM trained on the known cells of a single tag.

The primal objective  lambda/2 |w|^2 + mean(max(0, 1 - y <w, x>))  with lambda = 1 / (C n) is minimized
by deterministic batch subgradient steps of size 1 / (lambda t), starting from zero. The bias is an
extra constant feature. The iterate with the lowest objective is kept.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from aircode.errors import NonSeparableError
from aircode.settings import DecoderConfig

module_logger = logging.getLogger(__name__)

MIN_PER_CLASS = 4


@dataclass(frozen=True, eq=False)
class BitClassifier:
    """Decides air (1) against solid (0) from a normalized cell feature vector."""
    weights: np.ndarray
    bias: float
    training_accuracy: float = 1.0
    objective: float = 0.0

    def decision(self, features: np.ndarray) -> np.ndarray:
        return np.atleast_2d(features) @ self.weights + self.bias

    def predict(self, features: np.ndarray) -> np.ndarray:
        return (self.decision(features) > 0).astype(np.uint8)

    def margin(self, features: np.ndarray, bits: np.ndarray) -> float:
        """Smallest geometric margin of labelled points; negative when some point is misclassified."""
        signs = 2.0 * np.asarray(bits, dtype=float) - 1.0
        norm = np.linalg.norm(self.weights)
        return float(np.min(signs * self.decision(features)) / norm) if norm > 0 else 0.0

    def to_dict(self):
        return {"weights": self.weights.tolist(), "bias": self.bias, "training_accuracy": self.training_accuracy,
                "objective": self.objective}


def hinge_objective(weights: np.ndarray, design: np.ndarray, signs: np.ndarray, lam: float) -> float:
    return float(0.5 * lam * weights @ weights + np.mean(np.maximum(0.0, 1.0 - signs * (design @ weights))))


def train_bit_classifier(features: np.ndarray, bits: np.ndarray,
                         config: Optional[DecoderConfig] = None) -> BitClassifier:
    """
    Train on feature rows with their known bits. Raises NonSeparableError when a class has fewer than four
    examples or when the trained classifier misclassifies any training example.
    """
    config = config or DecoderConfig()
    features = np.atleast_2d(np.asarray(features, dtype=float))
    bits = np.asarray(bits, dtype=np.uint8)
    ones = int(np.count_nonzero(bits == 1))
    zeros = bits.size - ones
    if min(ones, zeros) < MIN_PER_CLASS:
        raise NonSeparableError(f"Need {MIN_PER_CLASS} known cells per class, got {ones} air and {zeros} solid")

    n = len(features)
    design = np.column_stack([features, np.ones(n)])
    signs = 2.0 * bits - 1.0
    lam = 1.0 / (config.svm_c * n)
    weights = np.zeros(design.shape[1])
    best, best_objective = weights, hinge_objective(weights, design, signs, lam)
    for t in range(1, config.svm_iterations + 1):
        active = signs * (design @ weights) < 1.0
        gradient = lam * weights - (signs[active] @ design[active]) / n
        weights = weights - gradient / (lam * t)
        objective = hinge_objective(weights, design, signs, lam)
        if objective < best_objective:
            best, best_objective = weights, objective

    classifier = BitClassifier(best[:-1], float(best[-1]))
    accuracy = float(np.mean(classifier.predict(features) == bits))
    classifier = BitClassifier(best[:-1], float(best[-1]), accuracy, best_objective)
    module_logger.debug("Bit classifier: objective %.5f, training accuracy %.3f", best_objective, accuracy)
    if accuracy < 1.0:
        raise NonSeparableError(f"Known bits are not separable, training accuracy {accuracy:.3f}")
    return classifier
