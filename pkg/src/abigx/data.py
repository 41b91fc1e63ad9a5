"""Sample tables with optional labels, variable names, and known root causes."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterError, ShapeError

NORMAL_CLASS = 0


@dataclass
class Dataset:
    """Row-major table of samples.

    labels, when present, are class ids with 0 reserved for normality.
    ground_truth_roots maps a fault class id to the set of variable indices
    that cause it (used by the correctness metrics).
    """

    samples: np.ndarray
    labels: np.ndarray | None = None
    variable_names: list[str] | None = None
    ground_truth_roots: dict[int, frozenset[int]] | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2:
            raise ShapeError(f"samples must be 2-D, got shape {self.samples.shape}")
        if not np.isfinite(self.samples).all():
            raise ParameterError("samples contain non-finite values")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.n_samples,):
                raise ShapeError(
                    f"labels length {self.labels.shape} does not match "
                    f"{self.n_samples} samples"
                )
            if (self.labels < 0).any():
                raise ParameterError("labels must be non-negative")
        if self.variable_names is not None:
            if len(self.variable_names) != self.n_variables:
                raise ShapeError("variable_names length does not match columns")
        if self.ground_truth_roots is not None:
            self.ground_truth_roots = {
                int(k): frozenset(int(i) for i in v)
                for k, v in self.ground_truth_roots.items()
            }
            present = set(self.class_ids())
            for cls, roots in self.ground_truth_roots.items():
                if self.labels is not None and cls not in present:
                    raise ParameterError(f"root-cause class {cls} not in labels")
                for i in roots:
                    if not 0 <= i < self.n_variables:
                        raise ParameterError(f"root variable index {i} out of range")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_variables(self) -> int:
        return self.samples.shape[1]

    def class_ids(self) -> list[int]:
        if self.labels is None:
            return []
        return sorted(int(c) for c in np.unique(self.labels))

    def normals(self) -> np.ndarray:
        """Rows of the normal class (all rows when unlabeled)."""
        if self.labels is None:
            return self.samples
        return self.samples[self.labels == NORMAL_CLASS]

    def of_class(self, class_id: int) -> np.ndarray:
        if self.labels is None:
            raise ParameterError("dataset has no labels")
        return self.samples[self.labels == int(class_id)]

    def names(self) -> list[str]:
        if self.variable_names is not None:
            return list(self.variable_names)
        return [f"x{i + 1}" for i in range(self.n_variables)]


def save_csv(dataset: Dataset, path) -> None:
    """Write header + rows; labels become a final `label` column."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = dataset.names()
        if dataset.labels is not None:
            header = header + ["label"]
        writer.writerow(header)
        for i in range(dataset.n_samples):
            row = [repr(float(v)) for v in dataset.samples[i]]
            if dataset.labels is not None:
                row.append(str(int(dataset.labels[i])))
            writer.writerow(row)


def load_csv(path) -> Dataset:
    """Read a dataset written by save_csv (or any header-first CSV of floats)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParameterError(f"{path}: empty file") from None
        has_labels = bool(header) and header[-1].strip().lower() == "label"
        names = header[:-1] if has_labels else header
        values: list[list[float]] = []
        labels: list[int] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParameterError(f"{path}:{lineno}: expected {len(header)} fields")
            if has_labels:
                values.append([float(v) for v in row[:-1]])
                labels.append(int(row[-1]))
            else:
                values.append([float(v) for v in row])
    if not values:
        raise ParameterError(f"{path}: no data rows")
    return Dataset(
        samples=np.asarray(values, dtype=np.float64),
        labels=np.asarray(labels, dtype=np.int64) if has_labels else None,
        variable_names=[n.strip() for n in names],
    )
