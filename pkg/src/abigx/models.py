"""Trainable detection and classification models with analytic input gradients.

All indices, gradients and reconstructions in this package operate in a
model's standardized coordinates; raw samples are converted at the boundary
by the model's Standardizer. Trained models are immutable and safe to share
across threads.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._kernels import chain_forward, chain_forward_cached, chain_vjp
from .data import NORMAL_CLASS, Dataset
from .exceptions import (
    ParameterError,
    ShapeError,
    TrainingDivergedError,
)
from .numerics import Rng, sym_eig

__all__ = [
    "Standardizer",
    "LayerStack",
    "PcaModel",
    "AeModel",
    "MlpClassifier",
    "fit_pca",
    "train_ae",
    "train_classifier",
    "input_gradient",
    "representation",
    "save_model",
    "load_model",
    "model_to_dict",
    "model_from_dict",
]

_SCALE_FLOOR = 1e-8


@dataclass(frozen=True)
class Standardizer:
    """Per-variable affine map z = (x - mean) / scale."""

    mean: np.ndarray
    scale: np.ndarray
    clamped: tuple[int, ...] = ()

    @classmethod
    def identity(cls, n: int) -> "Standardizer":
        return cls(mean=np.zeros(n), scale=np.ones(n))

    @classmethod
    def from_samples(cls, x: np.ndarray) -> "Standardizer":
        mean = x.mean(axis=0)
        scale = x.std(axis=0)
        low = np.nonzero(scale < _SCALE_FLOOR)[0]
        if low.size:
            warnings.warn(
                f"variables {low.tolist()} have (near-)zero variance; "
                f"scale clamped to {_SCALE_FLOOR}",
                stacklevel=3,
            )
            scale = scale.copy()
            scale[low] = _SCALE_FLOOR
        return cls(mean=mean, scale=scale, clamped=tuple(int(i) for i in low))

    @property
    def n_variables(self) -> int:
        return self.mean.shape[0]

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.n_variables:
            raise ShapeError(
                f"expected {self.n_variables} variables, got {x.shape[-1]}"
            )
        return (x - self.mean) / self.scale

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) * self.scale + self.mean


class LayerStack:
    """Immutable chain of affine layers with optional tanh activations."""

    def __init__(self, weights, biases, tanh_flags):
        self.weights = [np.ascontiguousarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.ascontiguousarray(b, dtype=np.float64) for b in biases]
        self.tanh_flags = tuple(bool(f) for f in tanh_flags)
        if not (len(self.weights) == len(self.biases) == len(self.tanh_flags)):
            raise ShapeError("weights, biases and tanh_flags lengths differ")
        for k in range(1, len(self.weights)):
            if self.weights[k].shape[1] != self.weights[k - 1].shape[0]:
                raise ShapeError(f"layer {k} input dim mismatch")

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @property
    def n_in(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_out(self) -> int:
        return self.weights[-1].shape[0]

    def forward(self, z: np.ndarray) -> np.ndarray:
        return chain_forward(self.weights, self.biases, self.tanh_flags, np.atleast_2d(z))

    def forward_cached(self, z: np.ndarray):
        return chain_forward_cached(
            self.weights, self.biases, self.tanh_flags, np.atleast_2d(z)
        )

    def vjp(self, acts, v: np.ndarray) -> np.ndarray:
        return chain_vjp(self.weights, self.tanh_flags, acts, np.atleast_2d(v))


def _init_stack(dims, tanh_flags, rng: Rng) -> LayerStack:
    # symmetric uniform scaled by 1/sqrt(fan_in), one child stream per layer
    weights, biases = [], []
    for k in range(len(dims) - 1):
        fan_in, fan_out = dims[k], dims[k + 1]
        child = rng.spawn(k)
        w = child.uniform_symmetric(1.0 / np.sqrt(fan_in), fan_out * fan_in)
        weights.append(w.reshape(fan_out, fan_in))
        biases.append(np.zeros(fan_out))
    return LayerStack(weights, biases, tanh_flags)


class PcaModel:
    """Linear detector: principal-component projection of standardized samples."""

    kind = "pca"

    def __init__(self, loading, standardizer, eigenvalues=None, meta=None):
        self.loading = np.asarray(loading, dtype=np.float64)
        self.standardizer = standardizer
        self.eigenvalues = (
            None if eigenvalues is None else np.asarray(eigenvalues, dtype=np.float64)
        )
        self.meta = dict(meta or {})

    @property
    def n_variables(self) -> int:
        return self.loading.shape[0]

    @property
    def n_components(self) -> int:
        return self.loading.shape[1]

    @cached_property
    def residual_projector(self) -> np.ndarray:
        """I - P P^T, the projector onto the residual subspace."""
        p = self.loading
        return np.eye(self.n_variables) - p @ p.T

    @property
    def explained_variance_ratio(self) -> np.ndarray | None:
        if self.eigenvalues is None:
            return None
        total = float(self.eigenvalues.sum())
        return self.eigenvalues[: self.n_components] / total

    def reconstruct_std(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(z)
        return (z @ self.loading) @ self.loading.T

    def spe_std(self, z: np.ndarray) -> np.ndarray:
        # residual sum of squares; equals z^T (I - P P^T) z but never dips
        # below zero from rounding
        z = np.atleast_2d(z)
        r = z - self.reconstruct_std(z)
        return np.einsum("ij,ij->i", r, r)

    def spe_grad_std(self, z: np.ndarray) -> np.ndarray:
        return 2.0 * (np.atleast_2d(z) @ self.residual_projector)


class AeModel:
    """Nonlinear detector: encoder-decoder chain trained to reproduce normal data."""

    kind = "ae"

    def __init__(self, stack: LayerStack, standardizer, loss_curve=None, meta=None):
        if stack.n_in != stack.n_out:
            raise ShapeError("encoder input and decoder output dims differ")
        self.stack = stack
        self.standardizer = standardizer
        self.loss_curve = list(loss_curve or [])
        self.meta = dict(meta or {})

    @property
    def n_variables(self) -> int:
        return self.stack.n_in

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return self.stack.dims

    def reconstruct_std(self, z: np.ndarray) -> np.ndarray:
        return self.stack.forward(z)

    def spe_std(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(z)
        r = z - self.stack.forward(z)
        return np.einsum("ij,ij->i", r, r)

    def spe_grad_std(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(z)
        out, acts = self.stack.forward_cached(z)
        r = 2.0 * (z - out)
        return r - self.stack.vjp(acts, r)


class MlpClassifier:
    """Feed-forward classifier: tanh hidden layers, linear logits."""

    kind = "mlp"

    def __init__(self, hidden: LayerStack, final_w, final_b, standardizer,
                 loss_curve=None, meta=None):
        self.hidden = hidden
        self.final_w = np.ascontiguousarray(final_w, dtype=np.float64)
        self.final_b = np.ascontiguousarray(final_b, dtype=np.float64)
        self.standardizer = standardizer
        self.loss_curve = list(loss_curve or [])
        self.meta = dict(meta or {})

    @property
    def n_variables(self) -> int:
        return self.hidden.n_in

    @property
    def n_classes(self) -> int:
        return self.final_w.shape[0]

    @property
    def representation_dim(self) -> int:
        return self.hidden.n_out

    def representation_std(self, z: np.ndarray) -> np.ndarray:
        return self.hidden.forward(z)

    def representation_vjp_std(self, z: np.ndarray, v: np.ndarray) -> np.ndarray:
        _, acts = self.hidden.forward_cached(z)
        return self.hidden.vjp(acts, v)

    def logits_std(self, z: np.ndarray) -> np.ndarray:
        return self.representation_std(z) @ self.final_w.T + self.final_b

    def logit_grad_std(self, z: np.ndarray, class_id: int) -> np.ndarray:
        z = np.atleast_2d(z)
        if not 0 <= class_id < self.n_classes:
            raise ParameterError(f"class id {class_id} out of range")
        seed = np.tile(self.final_w[class_id], (z.shape[0], 1))
        return self.representation_vjp_std(z, seed)

    def softmax_std(self, z: np.ndarray) -> np.ndarray:
        logits = self.logits_std(z)
        shifted = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, x: np.ndarray) -> np.ndarray:
        z = self.standardizer.transform(np.atleast_2d(x))
        return np.argmax(self.logits_std(z), axis=1)


def fit_pca(data: Dataset | np.ndarray, n_components: int) -> PcaModel:
    """Fit a PCA detector on (the normal rows of) a dataset.

    The loading matrix holds the top eigenvectors of the standardized sample
    covariance; the model keeps the standardization so raw samples can be
    scored directly.
    """
    x = data.normals() if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ParameterError("need a 2-D array with at least 2 samples")
    n = x.shape[1]
    if not 1 <= n_components < n:
        raise ParameterError(
            f"n_components must be in [1, {n - 1}], got {n_components}"
        )
    std = Standardizer.from_samples(x)
    z = std.transform(x)
    cov = (z.T @ z) / (x.shape[0] - 1)
    eigenvalues, vectors = sym_eig(cov)
    return PcaModel(
        loading=vectors[:, :n_components],
        standardizer=std,
        eigenvalues=eigenvalues,
        meta={"n_training_samples": int(x.shape[0])},
    )


def _forward_all(stack: LayerStack, z: np.ndarray):
    # training-time forward pass in plain numpy (also yields the input as acts[0])
    acts = [z]
    a = z
    for w, b, flag in zip(stack.weights, stack.biases, stack.tanh_flags):
        a = a @ w.T + b
        if flag:
            a = np.tanh(a)
        acts.append(a)
    return acts


def _backward_weight_grads(stack: LayerStack, acts, delta):
    """Gradient of the loss w.r.t. weights/biases given d(loss)/d(output)."""
    grads_w = [None] * len(stack.weights)
    grads_b = [None] * len(stack.weights)
    for k in range(len(stack.weights) - 1, -1, -1):
        if stack.tanh_flags[k]:
            delta = delta * (1.0 - acts[k + 1] ** 2)
        grads_w[k] = delta.T @ acts[k]
        grads_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = delta @ stack.weights[k]
    return grads_w, grads_b


def train_ae(
    data: Dataset,
    hidden_dims,
    epochs: int,
    lr: float,
    rng: Rng | int,
) -> AeModel:
    """Train an autoencoder detector by full-batch gradient descent.

    hidden_dims must be a symmetric bottleneck, e.g. (8, 2, 8). Training data
    must be all-normal (unlabeled, or every label 0).
    """
    if isinstance(rng, int):
        rng = Rng(rng)
    if data.labels is not None and (data.labels != NORMAL_CLASS).any():
        raise ParameterError("autoencoder training data must be all-normal")
    hidden = tuple(int(d) for d in hidden_dims)
    if not hidden or hidden != hidden[::-1]:
        raise ParameterError(f"hidden dims must be a symmetric bottleneck, got {hidden}")
    n = data.n_variables
    dims = (n, *hidden, n)
    tanh_flags = tuple(True for _ in hidden) + (False,)

    std = Standardizer.from_samples(data.samples)
    z = std.transform(data.samples)
    stack = _init_stack(dims, tanh_flags, rng)
    m = z.shape[0]

    def batch_loss(out):
        r = out - z
        return float(np.einsum("ij,ij->", r, r) / m)

    loss_curve = [batch_loss(_forward_all(stack, z)[-1])]
    for epoch in range(int(epochs)):
        acts = _forward_all(stack, z)
        delta = 2.0 * (acts[-1] - z) / m
        gw, gb = _backward_weight_grads(stack, acts, delta)
        stack = LayerStack(
            [w - lr * g for w, g in zip(stack.weights, gw)],
            [b - lr * g for b, g in zip(stack.biases, gb)],
            tanh_flags,
        )
        loss = batch_loss(_forward_all(stack, z)[-1])
        if not np.isfinite(loss):
            raise TrainingDivergedError(epoch)
        loss_curve.append(loss)

    return AeModel(
        stack,
        std,
        loss_curve=loss_curve,
        meta={"epochs": int(epochs), "lr": float(lr), "hidden_dims": list(hidden)},
    )


def train_classifier(
    data: Dataset,
    hidden_dims,
    epochs: int,
    lr: float,
    rng: Rng | int,
) -> MlpClassifier:
    """Train an MLP classifier with cross-entropy, full-batch gradient descent."""
    if isinstance(rng, int):
        rng = Rng(rng)
    if data.labels is None:
        raise ParameterError("classifier training needs labels")
    classes = data.class_ids()
    if len(classes) < 2:
        raise ParameterError("need at least 2 classes")
    n_classes = max(classes) + 1
    hidden = tuple(int(d) for d in hidden_dims)
    if not hidden:
        raise ParameterError("need at least one hidden layer")
    n = data.n_variables
    dims = (n, *hidden, n_classes)
    tanh_flags = tuple(True for _ in hidden) + (False,)

    std = Standardizer.from_samples(data.samples)
    z = std.transform(data.samples)
    y = np.zeros((z.shape[0], n_classes))
    y[np.arange(z.shape[0]), data.labels] = 1.0
    m = z.shape[0]

    stack = _init_stack(dims, tanh_flags, rng)

    def loss_of(acts):
        logits = acts[-1]
        shifted = logits - logits.max(axis=1, keepdims=True)
        logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        return float(-(y * logp).sum() / m), np.exp(logp)

    acts = _forward_all(stack, z)
    loss, probs = loss_of(acts)
    loss_curve = [loss]
    for epoch in range(int(epochs)):
        delta = (probs - y) / m
        gw, gb = _backward_weight_grads(stack, acts, delta)
        stack = LayerStack(
            [w - lr * g for w, g in zip(stack.weights, gw)],
            [b - lr * g for b, g in zip(stack.biases, gb)],
            tanh_flags,
        )
        acts = _forward_all(stack, z)
        loss, probs = loss_of(acts)
        if not np.isfinite(loss):
            raise TrainingDivergedError(epoch)
        loss_curve.append(loss)

    hidden_stack = LayerStack(stack.weights[:-1], stack.biases[:-1], tanh_flags[:-1])
    model = MlpClassifier(
        hidden_stack,
        stack.weights[-1],
        stack.biases[-1],
        std,
        loss_curve=loss_curve,
        meta={"epochs": int(epochs), "lr": float(lr), "hidden_dims": list(hidden)},
    )
    preds = model.predict(data.samples)
    model.meta["training_accuracy"] = float((preds == data.labels).mean())
    return model


def representation(model: MlpClassifier, x: np.ndarray) -> np.ndarray:
    """Penultimate-layer output for a raw sample."""
    z = model.standardizer.transform(np.asarray(x, dtype=np.float64))
    out = model.representation_std(np.atleast_2d(z))
    return out[0] if np.ndim(x) == 1 else out


def input_gradient(model, functional: str, x: np.ndarray, *,
                   class_id: int | None = None,
                   barycenter: np.ndarray | None = None) -> np.ndarray:
    """Gradient of a scalar model functional w.r.t. the standardized input.

    functional is one of "spe" (detection models), "logit" (classifiers,
    requires class_id), or "spe_fc" (classifiers, requires the normality
    barycenter in representation space).
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    z = np.atleast_2d(model.standardizer.transform(x))
    if functional == "spe":
        if not hasattr(model, "spe_grad_std"):
            raise ParameterError(f"model kind {model.kind!r} has no detection SPE")
        g = model.spe_grad_std(z)
    elif functional == "logit":
        if class_id is None:
            raise ParameterError("functional 'logit' requires class_id")
        g = model.logit_grad_std(z, int(class_id))
    elif functional == "spe_fc":
        if barycenter is None:
            raise ParameterError("functional 'spe_fc' requires the normality barycenter")
        h = model.representation_std(z)
        g = model.representation_vjp_std(z, 2.0 * (h - np.asarray(barycenter)))
    else:
        raise ParameterError(f"unknown functional {functional!r}")
    return g[0] if single else g


# ---------------------------------------------------------------------------
# persistence

def _stack_to_dict(stack: LayerStack) -> dict:
    return {
        "dims": list(stack.dims),
        "tanh_flags": list(stack.tanh_flags),
        "weights": [w.tolist() for w in stack.weights],
        "biases": [b.tolist() for b in stack.biases],
    }


def _stack_from_dict(d: dict) -> LayerStack:
    return LayerStack(
        [np.asarray(w, dtype=np.float64) for w in d["weights"]],
        [np.asarray(b, dtype=np.float64) for b in d["biases"]],
        tuple(bool(f) for f in d["tanh_flags"]),
    )


def model_to_dict(model) -> dict:
    std = model.standardizer
    base = {
        "kind": model.kind,
        "n_variables": model.n_variables,
        "standardizer": {
            "mean": std.mean.tolist(),
            "scale": std.scale.tolist(),
            "clamped": list(std.clamped),
        },
        "meta": model.meta if hasattr(model, "meta") else {},
    }
    if model.kind == "pca":
        base["loading"] = model.loading.tolist()
        if model.eigenvalues is not None:
            base["eigenvalues"] = model.eigenvalues.tolist()
    elif model.kind == "ae":
        base["stack"] = _stack_to_dict(model.stack)
        base["loss_curve"] = list(model.loss_curve)
    elif model.kind == "mlp":
        base["hidden"] = _stack_to_dict(model.hidden)
        base["final_w"] = model.final_w.tolist()
        base["final_b"] = model.final_b.tolist()
        base["loss_curve"] = list(model.loss_curve)
    elif model.kind == "fisher":
        base["weights"] = model.weights.tolist()
    else:
        raise ParameterError(f"unknown model kind {model.kind!r}")
    return base


def model_from_dict(d: dict):
    std = Standardizer(
        mean=np.asarray(d["standardizer"]["mean"], dtype=np.float64),
        scale=np.asarray(d["standardizer"]["scale"], dtype=np.float64),
        clamped=tuple(d["standardizer"].get("clamped", ())),
    )
    kind = d["kind"]
    if kind == "pca":
        eig = d.get("eigenvalues")
        return PcaModel(
            loading=np.asarray(d["loading"], dtype=np.float64),
            standardizer=std,
            eigenvalues=None if eig is None else np.asarray(eig, dtype=np.float64),
            meta=d.get("meta", {}),
        )
    if kind == "ae":
        return AeModel(
            _stack_from_dict(d["stack"]),
            std,
            loss_curve=d.get("loss_curve", []),
            meta=d.get("meta", {}),
        )
    if kind == "mlp":
        return MlpClassifier(
            _stack_from_dict(d["hidden"]),
            np.asarray(d["final_w"], dtype=np.float64),
            np.asarray(d["final_b"], dtype=np.float64),
            std,
            loss_curve=d.get("loss_curve", []),
            meta=d.get("meta", {}),
        )
    if kind == "fisher":
        from .synthetic import FisherModel

        return FisherModel(np.asarray(d["weights"], dtype=np.float64))
    raise ParameterError(f"unknown model kind {kind!r}")


def save_model(model, path, *, calibration: dict | None = None) -> None:
    doc = model_to_dict(model)
    if calibration is not None:
        doc["calibration"] = calibration
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_model(path):
    with open(path) as fh:
        doc = json.load(fh)
    model = model_from_dict(doc)
    return model, doc.get("calibration")
