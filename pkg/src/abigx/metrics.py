"""Quantitative evaluation of attributions.

Correctness compares contributions against known root-cause variables;
consistency measures how fast the model's output responds when variables are
inserted into a normal sample (or deleted from the fault sample) in
contribution order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterError
from .indices import ScalarField

__all__ = [
    "correctness_auc",
    "correctness_sum",
    "consistency_add",
    "consistency_del",
    "insertion_curve",
    "deletion_curve",
    "MetricsReport",
]

METRIC_COLUMNS = ("correctness_auc", "correctness_sum", "consistency_add", "consistency_del")

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def _abs_scores(attr) -> np.ndarray:
    contributions = getattr(attr, "contributions", attr)
    return np.abs(np.asarray(contributions, dtype=np.float64))


def _ranking(attr) -> np.ndarray:
    return np.argsort(-_abs_scores(attr), kind="stable")


def _tie_averaged_ranks(scores: np.ndarray) -> np.ndarray:
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size)
    i = 0
    srt = scores[order]
    while i < scores.size:
        j = i
        while j + 1 < scores.size and srt[j + 1] == srt[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def correctness_auc(attr, roots) -> float:
    """ROC AUC of |contribution| as a score for membership in the root set."""
    scores = _abs_scores(attr)
    labels = np.zeros(scores.size, dtype=bool)
    roots = sorted(int(i) for i in roots)
    if not roots:
        raise ParameterError("roots must be nonempty")
    for i in roots:
        if not 0 <= i < scores.size:
            raise ParameterError(f"root index {i} out of range")
        labels[i] = True
    n_pos = int(labels.sum())
    n_neg = scores.size - n_pos
    if n_neg == 0:
        raise ParameterError("AUC undefined when every variable is a root")
    ranks = _tie_averaged_ranks(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def correctness_sum(attr, roots) -> float:
    """Share of total |contribution| mass landing on the root variables."""
    scores = _abs_scores(attr)
    roots = sorted(int(i) for i in roots)
    if not roots:
        raise ParameterError("roots must be nonempty")
    total = float(scores.sum())
    if total == 0.0:
        import warnings

        warnings.warn("all-zero attribution; correctness_sum defined as 0", stacklevel=2)
        return 0.0
    return float(scores[roots].sum() / total)


def _hybrid_batch(x_fault, x_normal, order, insert: bool) -> np.ndarray:
    """Row k has the first k ordered variables taken from the fault sample
    (insert=True) or replaced by the normal sample (insert=False)."""
    n = x_fault.size
    base = x_normal if insert else x_fault
    fill = x_fault if insert else x_normal
    batch = np.tile(base, (n + 1, 1))
    for k in range(1, n + 1):
        batch[k:, order[k - 1]] = fill[order[k - 1]]
    return batch


def _curve_values(fn: ScalarField, batch: np.ndarray, normalize: str) -> np.ndarray:
    values = fn.value_batch(fn.standardize(batch))
    if normalize == "auto":
        normalize = "none" if fn.unit_interval else "minmax"
    if normalize == "none":
        return values
    if normalize != "minmax":
        raise ParameterError(f"unknown normalize mode {normalize!r}")
    lo, hi = float(values.min()), float(values.max())
    if hi - lo < 1e-12:
        # flat curve: nothing to rescale, keep the constant (bounded)
        return np.clip(values, 0.0, 1.0)
    return (values - lo) / (hi - lo)


def insertion_curve(fn: ScalarField, x_fault, x_normal, attr,
                    normalize: str = "auto") -> np.ndarray:
    """Model output as fault variables are added to the normal sample, most
    important first; n+1 points for n variables."""
    x_fault = np.asarray(x_fault, dtype=np.float64)
    x_normal = np.asarray(x_normal, dtype=np.float64)
    order = _ranking(attr)
    batch = _hybrid_batch(x_fault, x_normal, order, insert=True)
    return _curve_values(fn, batch, normalize)


def deletion_curve(fn: ScalarField, x_fault, x_normal, attr,
                   normalize: str = "auto") -> np.ndarray:
    """Model output as fault variables are replaced by normal values, most
    important first."""
    x_fault = np.asarray(x_fault, dtype=np.float64)
    x_normal = np.asarray(x_normal, dtype=np.float64)
    order = _ranking(attr)
    batch = _hybrid_batch(x_fault, x_normal, order, insert=False)
    return _curve_values(fn, batch, normalize)


def consistency_add(fn: ScalarField, x_fault, x_normal, attr,
                    normalize: str = "auto") -> float:
    """Area under the insertion curve (higher = contributions match model)."""
    curve = insertion_curve(fn, x_fault, x_normal, attr, normalize)
    return float(_trapezoid(curve, dx=1.0 / (curve.size - 1)))


def consistency_del(fn: ScalarField, x_fault, x_normal, attr,
                    normalize: str = "auto") -> float:
    """Area under the deletion curve (lower = contributions match model)."""
    curve = deletion_curve(fn, x_fault, x_normal, attr, normalize)
    return float(_trapezoid(curve, dx=1.0 / (curve.size - 1)))


@dataclass
class MetricsReport:
    """Per-method metric table plus the configuration that produced it."""

    per_method: dict
    sample_count: int
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_method": self.per_method,
            "sample_count": self.sample_count,
            "config": self.config,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def to_text(self) -> str:
        headers = ("method", "AUC^", "SUM^", "ADD^", "DELv")
        rows = [headers, tuple("-" * len(h) for h in headers)]
        for method in sorted(self.per_method):
            vals = self.per_method[method]
            row = [method]
            for key in METRIC_COLUMNS:
                v = vals.get(key)
                row.append("n/a" if v is None else f"{v:.3f}")
            rows.append(tuple(row))
        widths = [max(len(r[c]) for r in rows) for c in range(len(headers))]
        lines = []
        for r in rows:
            cells = [r[0].ljust(widths[0])] + [
                r[c].rjust(widths[c]) for c in range(1, len(headers))
            ]
            # the vertical bar separates correctness from consistency columns
            lines.append("  ".join(cells[:3]) + "  |  " + "  ".join(cells[3:]))
        lines.append(f"samples: {self.sample_count}")
        return "\n".join(lines)
