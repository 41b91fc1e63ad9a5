"""Fault indices: detection SPE with a control limit, and classification SPE
measured against the barycenter of normal-sample representations.

ScalarField objects bundle a scalar model functional with its gradient, both
over standardized coordinates; reconstruction and attribution code consumes
these rather than talking to models directly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .exceptions import NotCalibratedError, ParameterError, ShapeError
from .models import AeModel, MlpClassifier, PcaModel

__all__ = [
    "ScalarField",
    "DetectionSpeField",
    "ClassLogitField",
    "ClassificationSpeField",
    "FaultConfidenceField",
    "DetectionIndex",
    "ClassificationIndex",
    "calibrate_detection",
    "calibrate_classification",
]


class ScalarField:
    """Scalar functional of the standardized input, with its gradient."""

    name = "field"
    unit_interval = False  # True when values already live in [0, 1]

    def __init__(self, model):
        self.model = model

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return self.model.standardizer.transform(np.asarray(x, dtype=np.float64))

    def destandardize(self, z: np.ndarray) -> np.ndarray:
        return self.model.standardizer.inverse(z)

    def value_batch(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad_batch(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value(self, z: np.ndarray) -> float:
        return float(self.value_batch(np.atleast_2d(z))[0])

    def grad(self, z: np.ndarray) -> np.ndarray:
        return self.grad_batch(np.atleast_2d(z))[0]


class DetectionSpeField(ScalarField):
    """Squared residual of the detector's principal-component projection."""

    name = "spe"

    def value_batch(self, z):
        return self.model.spe_std(z)

    def grad_batch(self, z):
        return self.model.spe_grad_std(z)


class ClassLogitField(ScalarField):
    """A single class logit of a classifier."""

    def __init__(self, model, class_id: int):
        super().__init__(model)
        self.class_id = int(class_id)
        self.name = f"logit:{self.class_id}"

    def value_batch(self, z):
        return self.model.logits_std(np.atleast_2d(z))[:, self.class_id]

    def grad_batch(self, z):
        return self.model.logit_grad_std(np.atleast_2d(z), self.class_id)


class ClassificationSpeField(ScalarField):
    """Squared representation-space distance to the normality barycenter."""

    name = "spe_fc"

    def __init__(self, model, barycenter: np.ndarray):
        super().__init__(model)
        self.barycenter = np.asarray(barycenter, dtype=np.float64)

    def value_batch(self, z):
        h = self.model.representation_std(np.atleast_2d(z))
        d = h - self.barycenter
        return np.einsum("ij,ij->i", d, d)

    def grad_batch(self, z):
        z = np.atleast_2d(z)
        h = self.model.representation_std(z)
        return self.model.representation_vjp_std(z, 2.0 * (h - self.barycenter))


class FaultConfidenceField(ScalarField):
    """Softmax probability of one class; bounded in [0, 1]."""

    unit_interval = True

    def __init__(self, model, class_id: int):
        super().__init__(model)
        self.class_id = int(class_id)
        self.name = f"confidence:{self.class_id}"

    def value_batch(self, z):
        return self.model.softmax_std(np.atleast_2d(z))[:, self.class_id]

    def grad_batch(self, z):
        # d softmax_c / dz = p_c * (e_c - p)^T J_logits
        z = np.atleast_2d(z)
        p = self.model.softmax_std(z)
        seed = -p * p[:, [self.class_id]]
        seed[:, self.class_id] += p[:, self.class_id]
        rep_seed = seed @ self.model.final_w if hasattr(self.model, "final_w") else None
        if rep_seed is not None:
            return self.model.representation_vjp_std(z, rep_seed)
        # generic fall-back through per-class logit gradients
        g = np.zeros_like(z)
        for c in range(p.shape[1]):
            g += seed[:, [c]] * self.model.logit_grad_std(z, c)
        return g


@dataclass
class DetectionIndex:
    """Detection SPE scorer with an empirical-quantile control limit."""

    model: PcaModel | AeModel
    control_limit: float | None = None
    calibration_quantile: float | None = None

    def field(self) -> DetectionSpeField:
        return DetectionSpeField(self.model)

    def spe(self, x: np.ndarray):
        """SPE of raw sample(s); scalar for a single sample."""
        z = self.model.standardizer.transform(np.asarray(x, dtype=np.float64))
        vals = self.model.spe_std(np.atleast_2d(z))
        return float(vals[0]) if np.ndim(x) == 1 else vals

    def detect(self, x: np.ndarray) -> int:
        """1 when the sample's SPE exceeds the control limit, else 0."""
        if self.control_limit is None:
            raise NotCalibratedError("detection index has no control limit")
        return int(self.spe(np.asarray(x, dtype=np.float64)) > self.control_limit)

    def target(self) -> float:
        if self.control_limit is None:
            raise NotCalibratedError("detection index has no control limit")
        return float(self.control_limit)


@dataclass
class ClassificationIndex:
    """Classification SPE scorer built on the normality-representation barycenter."""

    classifier: MlpClassifier
    barycenter: np.ndarray
    normality_limit: float | None = None
    calibration_quantile: float | None = None

    def field(self) -> ClassificationSpeField:
        return ClassificationSpeField(self.classifier, self.barycenter)

    @property
    def model(self):
        return self.classifier

    def spe(self, x: np.ndarray):
        z = self.classifier.standardizer.transform(np.asarray(x, dtype=np.float64))
        vals = self.field().value_batch(np.atleast_2d(z))
        return float(vals[0]) if np.ndim(x) == 1 else vals

    def target(self) -> float:
        if self.normality_limit is None:
            raise NotCalibratedError("classification index has no normality limit")
        return float(self.normality_limit)


def calibrate_detection(
    model: PcaModel | AeModel, data: Dataset | np.ndarray, quantile: float = 0.99
) -> DetectionIndex:
    """Set the control limit to an empirical quantile of training SPE values."""
    if not 0.0 < quantile < 1.0:
        raise ParameterError(f"quantile must be in (0, 1), got {quantile}")
    x = data.normals() if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError("calibration data must be 2-D")
    z = model.standardizer.transform(x)
    spe = model.spe_std(z)
    return DetectionIndex(
        model=model,
        control_limit=float(np.quantile(spe, quantile)),
        calibration_quantile=float(quantile),
    )


def calibrate_classification(
    classifier: MlpClassifier, data: Dataset, quantile: float = 0.99
) -> ClassificationIndex:
    """Compute the normality barycenter and the quantile limit of normal SPE_FC."""
    if not 0.0 < quantile < 1.0:
        raise ParameterError(f"quantile must be in (0, 1), got {quantile}")
    normals = data.normals() if isinstance(data, Dataset) else np.asarray(data)
    if normals.shape[0] == 0:
        raise ParameterError("no normal samples to calibrate on")
    z = classifier.standardizer.transform(normals)
    reps = classifier.representation_std(z)
    barycenter = reps.mean(axis=0)
    d = reps - barycenter
    spe_fc = np.einsum("ij,ij->i", d, d)
    return ClassificationIndex(
        classifier=classifier,
        barycenter=barycenter,
        normality_limit=float(np.quantile(spe_fc, quantile)),
        calibration_quantile=float(quantile),
    )
