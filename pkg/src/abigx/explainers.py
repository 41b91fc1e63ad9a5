"""Variable-attribution methods for fault detection and classification.

CP and RBC are the classical residual-based diagnoses for linear detectors;
saliency and integrated gradients are the generic gradient explainers; abigx
integrates gradients along the path from the reconstructed (counterfactual)
sample produced by adversarial fault reconstruction back to the explained
sample. Contributions are reported in standardized coordinates.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .afr import AfrConfig, Reconstruction, afr_onevar_all, afr_pgd
from .exceptions import IncompatibleMethodError, ParameterError, SingularDirectionError
from .indices import (
    ClassificationIndex,
    ClassLogitField,
    DetectionIndex,
    FaultConfidenceField,
    ScalarField,
)
from .models import PcaModel

__all__ = [
    "Attribution",
    "PathPoint",
    "cp",
    "rbc",
    "saliency",
    "integrated_gradients",
    "abigx",
    "abigx_onevar",
    "path_diagnostics",
]


@dataclass
class Attribution:
    """Per-variable contributions produced by one explainer."""

    method: str
    contributions: np.ndarray
    target_functional: str
    baseline: np.ndarray | None = None
    steps: int | None = None
    completeness_residual: float | None = None
    afr_converged: bool | None = None

    @property
    def n_variables(self) -> int:
        return self.contributions.shape[0]

    def ranking(self) -> np.ndarray:
        """Variable indices sorted by decreasing |contribution| (stable)."""
        return np.argsort(-np.abs(self.contributions), kind="stable")

    def to_dict(self) -> dict:
        d = {
            "method": self.method,
            "target_functional": self.target_functional,
            "coordinates": "standardized",
            "contributions": self.contributions.tolist(),
        }
        if self.baseline is not None:
            d["baseline"] = self.baseline.tolist()
        if self.steps is not None:
            d["steps"] = self.steps
        if self.completeness_residual is not None:
            d["completeness_residual"] = self.completeness_residual
        if self.afr_converged is not None:
            d["afr_converged"] = self.afr_converged
        return d

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def csv_rows(self, variable_names=None) -> list[tuple[str, float]]:
        names = variable_names or [f"x{i + 1}" for i in range(self.n_variables)]
        return [(names[i], float(self.contributions[i])) for i in range(self.n_variables)]


def _detection_index(index) -> DetectionIndex:
    if not isinstance(index, DetectionIndex):
        raise IncompatibleMethodError(
            f"needs a detection index, got {type(index).__name__}"
        )
    return index


def cp(index: DetectionIndex, x: np.ndarray) -> Attribution:
    """Contribution plot: per-variable squared residual of the projection."""
    index = _detection_index(index)
    fn = index.field()
    z = fn.standardize(np.asarray(x, dtype=np.float64))
    r = z - index.model.reconstruct_std(z)[0]
    return Attribution(method="cp", contributions=r * r, target_functional="spe")


def rbc(index: DetectionIndex, x: np.ndarray) -> Attribution:
    """Reconstruction-based contribution: index value of each one-variable
    reconstruction vector (closed form, PCA only)."""
    index = _detection_index(index)
    if not isinstance(index.model, PcaModel):
        raise IncompatibleMethodError("rbc is defined for PCA detectors only")
    fn = index.field()
    z = fn.standardize(np.asarray(x, dtype=np.float64))
    resid = index.model.residual_projector
    diag = np.diag(resid)
    bad = np.nonzero(diag <= 1e-12)[0]
    if bad.size:
        raise SingularDirectionError(int(bad[0]))
    rz = resid @ z
    return Attribution(method="rbc", contributions=rz * rz / diag, target_functional="spe")


def saliency(fn: ScalarField, x: np.ndarray) -> Attribution:
    """Plain input gradient of the target functional at the explained sample."""
    z = fn.standardize(np.asarray(x, dtype=np.float64))
    return Attribution(
        method="saliency", contributions=fn.grad(z), target_functional=fn.name
    )


def _path_integral(fn: ScalarField, z: np.ndarray, baseline_z: np.ndarray,
                   steps: int) -> tuple[np.ndarray, float]:
    """Trapezoid-rule integrated gradients along the straight path, plus the
    completeness residual |sum(contrib) - (f(z) - f(baseline))|."""
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    alphas = np.linspace(0.0, 1.0, steps + 1)
    pts = baseline_z + alphas[:, None] * (z - baseline_z)
    grads = fn.grad_batch(pts)
    weights = np.full(steps + 1, 1.0 / steps)
    weights[0] = weights[-1] = 0.5 / steps
    contrib = (z - baseline_z) * (weights @ grads)
    residual = abs(float(contrib.sum()) - (fn.value(z) - fn.value(baseline_z)))
    return contrib, residual


def integrated_gradients(fn: ScalarField, x: np.ndarray, baseline: np.ndarray,
                         steps: int = 200, *, method_name: str = "ig") -> Attribution:
    """Integrated gradients from a raw-coordinate baseline to the sample."""
    x = np.asarray(x, dtype=np.float64)
    baseline = np.asarray(baseline, dtype=np.float64)
    if baseline.shape != x.shape:
        raise ParameterError("baseline shape differs from sample shape")
    z = fn.standardize(x)
    bz = fn.standardize(baseline)
    contrib, residual = _path_integral(fn, z, bz, steps)
    return Attribution(
        method=method_name,
        contributions=contrib,
        target_functional=fn.name,
        baseline=bz,
        steps=steps,
        completeness_residual=residual,
    )


def _resolve_abigx_fields(index, class_id, afr_objective, integrate):
    """Pick the reconstruction objective and the integrated functional."""
    if isinstance(index, DetectionIndex):
        fn = index.field()
        return fn, fn
    if isinstance(index, ClassificationIndex):
        if class_id is None:
            raise ParameterError("classification abigx needs class_id")
        if afr_objective == "spe_fc":
            objective = index.field()
        elif afr_objective == "adv":
            objective = FaultConfidenceField(index.classifier, class_id)
        else:
            raise ParameterError(f"unknown afr_objective {afr_objective!r}")
        if integrate == "logit":
            integrand = ClassLogitField(index.classifier, class_id)
        elif integrate == "spe_fc":
            integrand = index.field()
        else:
            raise ParameterError(f"unknown integrate choice {integrate!r}")
        return objective, integrand
    raise IncompatibleMethodError(f"abigx needs a fault index, got {type(index).__name__}")


def abigx(index, x: np.ndarray, cfg: AfrConfig | None = None, steps: int = 200, *,
          class_id: int | None = None, afr_objective: str = "spe_fc",
          integrate: str = "logit") -> Attribution:
    """Integrated gradients with the adversarially reconstructed sample as baseline.

    Detection: the reconstruction minimizes detection SPE and the same SPE is
    integrated. Classification: the reconstruction minimizes classification
    SPE (afr_objective="adv" switches to attacking the explained class's
    softmax confidence) and the explained class's logit is integrated
    (integrate="spe_fc" switches the integrand).
    """
    cfg = cfg or AfrConfig()
    objective, integrand = _resolve_abigx_fields(index, class_id, afr_objective, integrate)
    if isinstance(index, ClassificationIndex) and afr_objective == "adv" and cfg.target is None:
        # chance-level confidence counts as reconstructed for the ablation objective
        cfg = AfrConfig(norm=cfg.norm, eta=cfg.eta, max_iters=cfg.max_iters,
                        step_size=cfg.step_size,
                        target=1.0 / index.classifier.n_classes)
    rec = afr_pgd(index, x, cfg, objective=objective)
    z = objective.standardize(np.asarray(x, dtype=np.float64))
    contrib, residual = _path_integral(integrand, z, rec.x_reconstructed, steps)
    return Attribution(
        method="abigx",
        contributions=contrib,
        target_functional=integrand.name,
        baseline=rec.x_reconstructed,
        steps=steps,
        completeness_residual=residual,
        afr_converged=rec.converged,
    )


def abigx_onevar(index, x: np.ndarray, steps: int = 200, *, mode: str = "auto",
                 class_id: int | None = None,
                 search_bound: float = 10.0) -> Attribution:
    """Per-variable path integration from each one-variable reconstruction.

    Contribution i integrates the i-th partial derivative along the segment
    that moves only coordinate i from its reconstructed value back to the
    sample's value.
    """
    if isinstance(index, DetectionIndex):
        objective = index.field()
        integrand = objective
    elif isinstance(index, ClassificationIndex):
        if class_id is None:
            raise ParameterError("classification abigx_onevar needs class_id")
        objective = index.field()
        integrand = ClassLogitField(index.classifier, class_id)
    else:
        raise IncompatibleMethodError(
            f"abigx_onevar needs a fault index, got {type(index).__name__}"
        )
    recs = afr_onevar_all(index, x, mode=mode, objective=None
                          if isinstance(index, DetectionIndex) else objective,
                          search_bound=search_bound)
    z = objective.standardize(np.asarray(x, dtype=np.float64))
    n = z.size
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    alphas = np.linspace(0.0, 1.0, steps + 1)
    weights = np.full(steps + 1, 1.0 / steps)
    weights[0] = weights[-1] = 0.5 / steps

    # one straight path per variable, batched into a single gradient call
    pts = np.tile(z, (n * (steps + 1), 1))
    magnitudes = np.array([rec.magnitude for rec in recs])
    for i in range(n):
        rows = slice(i * (steps + 1), (i + 1) * (steps + 1))
        pts[rows, i] = z[i] - (1.0 - alphas) * magnitudes[i]
    grads = integrand.grad_batch(pts)
    contrib = np.empty(n)
    for i in range(n):
        rows = slice(i * (steps + 1), (i + 1) * (steps + 1))
        contrib[i] = magnitudes[i] * float(weights @ grads[rows, i])
    converged = all(rec.converged for rec in recs)
    return Attribution(
        method="abigx-onevar",
        contributions=contrib,
        target_functional=integrand.name,
        steps=steps,
        afr_converged=converged,
    )


@dataclass
class PathPoint:
    """One sample along an attribution path."""

    alpha: float
    confidence_ratio: float
    cosine_to_root: float
    zero_gradient: bool = False


def path_diagnostics(index: ClassificationIndex, x: np.ndarray, baseline: np.ndarray,
                     steps: int, class_id: int, root_variable: int) -> list[PathPoint]:
    """Classifier behavior along the straight path from baseline to sample.

    Per path point: combined softmax mass of the explained class and
    normality, and the cosine between the explained-class logit gradient and
    the root variable's axis.
    """
    if not isinstance(index, ClassificationIndex):
        raise IncompatibleMethodError("path diagnostics need a classification index")
    clf = index.classifier
    fn = ClassLogitField(clf, class_id)
    z = fn.standardize(np.asarray(x, dtype=np.float64))
    bz = fn.standardize(np.asarray(baseline, dtype=np.float64))
    if not 0 <= root_variable < z.size:
        raise ParameterError(f"root variable {root_variable} out of range")
    alphas = np.linspace(0.0, 1.0, steps + 1)
    pts = bz + alphas[:, None] * (z - bz)
    probs = clf.softmax_std(pts)
    grads = fn.grad_batch(pts)
    norms = np.linalg.norm(grads, axis=1)
    out = []
    for k, a in enumerate(alphas):
        ratio = float(probs[k, class_id] + probs[k, 0])
        if norms[k] < 1e-300:
            out.append(PathPoint(float(a), ratio, 0.0, zero_gradient=True))
        else:
            cos = float(grads[k, root_variable] / norms[k])
            out.append(PathPoint(float(a), ratio, cos))
    return out
