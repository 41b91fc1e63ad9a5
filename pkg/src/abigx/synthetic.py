"""Synthetic datasets and closed-form oracles.

The toy classification dataset puts each fault type on its own variable, so
ground-truth root causes are known exactly. On it, a linear classifier of
known optimal weights exists in closed form, giving exact reference values
for the fault-class-smearing degree of each explainer.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .exceptions import ParameterError
from .explainers import Attribution, integrated_gradients
from .indices import ClassificationIndex, ClassLogitField
from .models import Standardizer
from .numerics import Rng

__all__ = [
    "ToySpec",
    "gen_toy",
    "FisherModel",
    "fisher_closed_form",
    "fisher_fit",
    "fisher_gram_entries",
    "fcs_empirical",
    "fcs_theoretical",
    "onestep_abigx",
    "gen_correlated_normal",
    "inject_faults",
]


@dataclass(frozen=True)
class ToySpec:
    """Toy fault-classification dataset layout.

    Class 0 draws every variable from N(0, sigma^2); fault class y shifts the
    mean of variable y-1 to `magnitude`. Requires fewer fault types than
    variables.
    """

    n_variables: int
    n_fault_types: int
    magnitude: float
    sigma: float
    samples_per_class: int
    seed: int

    def __post_init__(self):
        if self.n_fault_types >= self.n_variables:
            raise ParameterError(
                f"need n_fault_types < n_variables, got {self.n_fault_types} "
                f">= {self.n_variables}"
            )
        if self.n_fault_types < 1:
            raise ParameterError("need at least one fault type")
        if self.magnitude <= 0:
            raise ParameterError("magnitude must be > 0")
        if self.sigma <= 0:
            raise ParameterError("sigma must be > 0")
        if self.samples_per_class < 1:
            raise ParameterError("samples_per_class must be >= 1")


def gen_toy(spec: ToySpec) -> Dataset:
    """Generate the toy dataset with known per-class root variables."""
    rng = Rng(spec.seed)
    n, m = spec.n_variables, spec.samples_per_class
    blocks = []
    labels = []
    for cls in range(spec.n_fault_types + 1):
        child = rng.spawn(cls)
        block = child.normal(0.0, spec.sigma, m * n).reshape(m, n)
        if cls >= 1:
            block[:, cls - 1] += spec.magnitude
        blocks.append(block)
        labels.extend([cls] * m)
    roots = {cls: frozenset({cls - 1}) for cls in range(1, spec.n_fault_types + 1)}
    return Dataset(
        samples=np.vstack(blocks),
        labels=np.asarray(labels, dtype=np.int64),
        variable_names=[f"x{i + 1}" for i in range(n)],
        ground_truth_roots=roots,
    )


class FisherModel:
    """Linear classifier with one weight row per class and no bias.

    Logits double as the representation (there is no hidden layer), so the
    classification SPE machinery applies unchanged. Inputs are used raw; the
    standardizer is the identity.
    """

    kind = "fisher"

    def __init__(self, weights: np.ndarray):
        self.weights = np.asarray(weights, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ParameterError("weights must be 2-D (classes x variables)")
        self.standardizer = Standardizer.identity(self.weights.shape[1])
        self.meta: dict = {}

    @property
    def n_variables(self) -> int:
        return self.weights.shape[1]

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def representation_dim(self) -> int:
        return self.weights.shape[0]

    def logits_std(self, z: np.ndarray) -> np.ndarray:
        return np.atleast_2d(z) @ self.weights.T

    def representation_std(self, z: np.ndarray) -> np.ndarray:
        return self.logits_std(z)

    def representation_vjp_std(self, z: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.atleast_2d(v) @ self.weights

    def logit_grad_std(self, z: np.ndarray, class_id: int) -> np.ndarray:
        z = np.atleast_2d(z)
        if not 0 <= class_id < self.n_classes:
            raise ParameterError(f"class id {class_id} out of range")
        return np.tile(self.weights[class_id], (z.shape[0], 1))

    def softmax_std(self, z: np.ndarray) -> np.ndarray:
        logits = self.logits_std(z)
        shifted = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.logits_std(np.atleast_2d(x)), axis=1)


def fisher_closed_form(n_fault_types: int, n_variables: int) -> FisherModel:
    """Optimal linear weights for the toy dataset, every row l1-normalized.

    Normality row: -1/N on the N discriminative variables. Fault row y:
    N/(2N-1) on its own variable, -1/(2N-1) on the other discriminative
    variables. Trailing variables get zero weight.
    """
    n, m = n_fault_types, n_variables
    if n >= m:
        raise ParameterError("need n_fault_types < n_variables")
    w = np.zeros((n + 1, m))
    w[0, :n] = -1.0 / n
    for y in range(1, n + 1):
        w[y, :n] = -1.0 / (2.0 * n - 1.0)
        w[y, y - 1] = n / (2.0 * n - 1.0)
    return FisherModel(w)


def fisher_fit(data: Dataset, ridge: float = 1e-8) -> FisherModel:
    """Fit the linear classifier by per-class discriminant directions.

    Each row points along inv(S_w) (mu_class - mu_bar), where S_w is the
    pooled within-class scatter and mu_bar the mean of class means; rows are
    l1-normalized with fault rows signed so their own variable is positive.
    """
    if data.labels is None:
        raise ParameterError("fisher_fit needs labels")
    classes = data.class_ids()
    if len(classes) < 2:
        raise ParameterError("need at least 2 classes")
    m = data.n_variables
    mus = {c: data.of_class(c).mean(axis=0) for c in classes}
    mu_bar = np.mean([mus[c] for c in classes], axis=0)
    scatter = np.zeros((m, m))
    for c in classes:
        centered = data.of_class(c) - mus[c]
        scatter += centered.T @ centered
    scatter += ridge * np.eye(m)
    weights = np.zeros((max(classes) + 1, m))
    for c in classes:
        direction = np.linalg.solve(scatter, mus[c] - mu_bar)
        norm = np.abs(direction).sum()
        if norm < 1e-300:
            raise ParameterError(f"class {c} mean coincides with the overall mean")
        row = direction / norm
        if c >= 1 and c - 1 < m and row[c - 1] < 0:
            row = -row
        weights[c] = row
    model = FisherModel(weights)
    model.meta["ridge"] = ridge
    return model


def fisher_gram_entries(n_fault_types: int) -> tuple[float, float]:
    """Diagonal and off-diagonal entries of W^T W restricted to the
    discriminative block, for the closed-form weights."""
    n = float(n_fault_types)
    diag = 1.0 / n**2 + (n**2 + n - 1.0) / (2.0 * n - 1.0) ** 2
    off = 1.0 / n**2 - (n + 2.0) / (2.0 * n - 1.0) ** 2
    return diag, off


def fcs_empirical(attr_fn, data: Dataset, class_id: int) -> float:
    """Mean fault-class-smearing ratio over the samples of one fault class.

    attr_fn(x, class_id) must return an Attribution (or contribution array).
    The ratio divides the |contribution| mass on the other fault classes'
    root variables by the |contribution| on the explained class's root.
    """
    if data.ground_truth_roots is None:
        raise ParameterError("dataset has no ground-truth roots")
    if class_id not in data.ground_truth_roots:
        raise ParameterError(f"class {class_id} has no recorded root")
    own = sorted(data.ground_truth_roots[class_id])
    if len(own) != 1:
        raise ParameterError("smearing ratio needs a single root variable")
    root = own[0]
    others = sorted(
        set().union(*(data.ground_truth_roots[c]
                      for c in data.ground_truth_roots if c != class_id))
        - {root}
    )
    ratios = []
    skipped = 0
    for x in data.of_class(class_id):
        attr = attr_fn(x, class_id)
        scores = np.abs(getattr(attr, "contributions", attr))
        if scores[root] < 1e-300:
            skipped += 1
            continue
        ratios.append(float(scores[others].sum() / scores[root]))
    if skipped:
        warnings.warn(f"skipped {skipped} samples with zero root contribution",
                      stacklevel=2)
    if not ratios:
        raise ParameterError("no usable samples for the smearing ratio")
    return float(np.mean(ratios))


def fcs_theoretical(method: str, n_fault_types: int,
                    magnitude: float | None = None,
                    sigma: float | None = None) -> float:
    """Closed-form smearing degree on the optimal linear classifier.

    saliency: (N-1)/N. ig (zero baseline): (N-1)/N * sigma*sqrt(2)/(magnitude*sqrt(pi)).
    """
    n = n_fault_types
    if method in ("saliency", "grad"):
        return (n - 1.0) / n
    if method == "ig":
        if magnitude is None or sigma is None:
            raise ParameterError("ig smearing degree needs magnitude and sigma")
        return (n - 1.0) / n * sigma * np.sqrt(2.0) / (magnitude * np.sqrt(np.pi))
    raise ParameterError(f"no closed-form smearing degree for method {method!r}")


def onestep_abigx(index: ClassificationIndex, x: np.ndarray, class_id: int,
                  scale: float = 1.0, steps: int = 200) -> Attribution:
    """Single normalized gradient step of the classification SPE as the
    reconstruction, then the usual logit path integration.

    Analysis variant: the smearing ratio it yields on a linear model is
    invariant to `scale`.
    """
    fn = index.field()
    z = fn.standardize(np.asarray(x, dtype=np.float64))
    g = fn.grad(z)
    norm = float(np.linalg.norm(g))
    if norm < 1e-300:
        raise ParameterError("zero classification-SPE gradient; nothing to reconstruct")
    baseline = fn.destandardize(z - scale * g / norm)
    attr = integrated_gradients(ClassLogitField(index.classifier, class_id),
                                x, baseline, steps, method_name="abigx-onestep")
    return attr


def gen_correlated_normal(n_samples: int, n_variables: int, seed: int,
                          n_latent: int = 3, noise: float = 0.1) -> np.ndarray:
    """Normal operating data with a low-dimensional latent structure."""
    if not 1 <= n_latent <= n_variables:
        raise ParameterError("need 1 <= n_latent <= n_variables")
    rng = Rng(seed)
    scales = np.linspace(3.0, 1.0, n_latent)
    latent = rng.normal(0.0, 1.0, n_samples * n_latent).reshape(n_samples, n_latent)
    mixing = rng.normal(0.0, 1.0, n_variables * n_latent).reshape(n_variables, n_latent)
    q, _ = np.linalg.qr(mixing)
    x = (latent * scales) @ q.T
    x += noise * rng.normal(0.0, 1.0, n_samples * n_variables).reshape(n_samples, n_variables)
    return x


def inject_faults(samples: np.ndarray, rng: Rng, n_faulty_vars: int = 1,
                  magnitude_range: tuple[float, float] = (2.0, 6.0),
                  scale: np.ndarray | None = None):
    """Add sensor offsets on random variable subsets.

    Magnitudes are drawn per fault in units of `scale` (per-variable std when
    given). Returns (faulty_samples, supports) with supports a list of
    variable-index tuples.
    """
    samples = np.asarray(samples, dtype=np.float64)
    m, n = samples.shape
    if not 1 <= n_faulty_vars <= n:
        raise ParameterError("n_faulty_vars out of range")
    lo, hi = magnitude_range
    unit = np.ones(n) if scale is None else np.asarray(scale, dtype=np.float64)
    out = samples.copy()
    supports = []
    for i in range(m):
        child = rng.spawn(i)
        perm = np.argsort(child.uniform(n), kind="stable")
        support = tuple(sorted(int(v) for v in perm[:n_faulty_vars]))
        mags = lo + (hi - lo) * child.uniform(n_faulty_vars)
        signs = np.where(child.uniform(n_faulty_vars) < 0.5, -1.0, 1.0)
        for k, v in enumerate(support):
            out[i, v] += signs[k] * mags[k] * unit[v]
        supports.append(support)
    return out, supports
