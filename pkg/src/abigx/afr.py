"""Adversarial fault reconstruction: norm-constrained minimization of a fault
index over perturbed samples.

Four routes are provided: projected gradient descent for any differentiable
index, single-variable reconstruction (closed form on PCA, line search
otherwise), and exhaustive sparse search that solves each support subset in
closed form on PCA (exact at the small sizes in scope).

All vectors here live in the model's standardized coordinates.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    EvaluationError,
    ParameterError,
    ShapeError,
    SingularDirectionError,
)
from .indices import ClassificationIndex, DetectionIndex, ScalarField
from .models import PcaModel

__all__ = [
    "AfrConfig",
    "Reconstruction",
    "afr_pgd",
    "afr_onevar",
    "afr_onevar_all",
    "l0_exhaustive",
]

_NORMS = ("l0", "l1", "l2")


@dataclass(frozen=True)
class AfrConfig:
    """Settings for gradient-based reconstruction.

    eta=None searches for the smallest feasible distance budget (doubling then
    bisection). target=None uses the index's calibrated limit.
    """

    norm: str = "l2"
    eta: float | None = None
    max_iters: int = 500
    step_size: float = 0.05
    target: float | None = None

    def __post_init__(self):
        if self.norm not in _NORMS:
            raise ParameterError(f"norm must be one of {_NORMS}, got {self.norm!r}")
        if self.eta is not None and self.eta <= 0:
            raise ParameterError(f"eta must be > 0 when fixed, got {self.eta}")
        if self.norm == "l0" and self.eta is not None and self.eta != int(self.eta):
            raise ParameterError("l0 budget must be an integer count")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be >= 1")
        if self.step_size <= 0:
            raise ParameterError("step_size must be > 0")


@dataclass
class Reconstruction:
    """Result of one reconstruction, in standardized coordinates."""

    x_original: np.ndarray
    x_reconstructed: np.ndarray
    perturbation: np.ndarray
    spe_before: float
    spe_after: float
    iterations_used: int
    converged: bool
    norm: str
    eta: float | None
    direction: int | None = None
    magnitude: float | None = None
    spe_history: list = field(default_factory=list)
    support: tuple | None = None
    skipped_subsets: int = 0
    path: np.ndarray | None = None

    def to_dict(self) -> dict:
        d = {
            "coordinates": "standardized",
            "x_original": self.x_original.tolist(),
            "x_reconstructed": self.x_reconstructed.tolist(),
            "perturbation": self.perturbation.tolist(),
            "spe_before": self.spe_before,
            "spe_after": self.spe_after,
            "iterations_used": self.iterations_used,
            "converged": self.converged,
            "norm": self.norm,
            "eta": self.eta,
            "direction": self.direction,
            "magnitude": self.magnitude,
            "spe_history": list(self.spe_history),
            "skipped_subsets": self.skipped_subsets,
        }
        if self.support is not None:
            d["support"] = list(self.support)
        if self.path is not None:
            d["path"] = self.path.tolist()
        return d

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _make_reconstruction(z0, z, spe0, spe, iters, converged, norm, eta, **extra):
    z0 = np.asarray(z0, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    return Reconstruction(
        x_original=z0,
        x_reconstructed=z,
        perturbation=z0 - z,
        spe_before=float(spe0),
        spe_after=float(spe),
        iterations_used=int(iters),
        converged=bool(converged),
        norm=norm,
        eta=eta,
        **extra,
    )


def _project_ball(d: np.ndarray, norm: str, eta: float | None) -> np.ndarray:
    """Project a perturbation onto the requested norm ball of radius eta."""
    if eta is None:
        return d
    if norm == "l2":
        nd = float(np.linalg.norm(d))
        if nd <= eta:
            return d
        return d * (eta / nd)
    if norm == "l1":
        a = np.abs(d)
        if a.sum() <= eta:
            return d
        u = np.sort(a)[::-1]
        css = np.cumsum(u)
        ranks = np.arange(1, a.size + 1)
        k = np.nonzero(u * ranks > (css - eta))[0][-1]
        tau = (css[k] - eta) / (k + 1.0)
        return np.sign(d) * np.maximum(a - tau, 0.0)
    # l0: keep the eta largest coordinates
    k = int(eta)
    if np.count_nonzero(d) <= k:
        return d
    out = np.zeros_like(d)
    keep = np.argsort(-np.abs(d), kind="stable")[:k]
    out[keep] = d[keep]
    return out


def _field_of(index, objective: ScalarField | None) -> ScalarField:
    if objective is not None:
        return objective
    if isinstance(index, (DetectionIndex, ClassificationIndex)):
        return index.field()
    if isinstance(index, ScalarField):
        return index
    raise ParameterError(f"cannot derive an objective from {type(index).__name__}")


def _pgd_core(fn: ScalarField, z0: np.ndarray, target: float, cfg: AfrConfig,
              eta: float | None, collect_path: bool):
    """Gradient descent with normalized steps, backtracking, and ball projection.

    Minimizes until no backtracked step improves (or the iteration budget runs
    out); `target` only defines success. Accepted iterates never increase the
    objective. Returns (z, iters, converged, history, path).
    """
    z = z0.copy()
    value = fn.value(z)
    history = [value]
    path = [z.copy()] if collect_path else None
    if value <= target:
        return z, 0, True, history, path
    iters = 0
    for t in range(cfg.max_iters):
        g = fn.grad(z)
        if not np.isfinite(g).all():
            raise EvaluationError(f"non-finite gradient at iteration {t}")
        gn = float(np.linalg.norm(g))
        if gn < 1e-300:
            break
        direction = g / gn
        step = cfg.step_size
        accepted = None
        for _ in range(60):
            cand = z - step * direction
            cand = z0 - _project_ball(z0 - cand, cfg.norm, eta)
            cand_value = fn.value(cand)
            if cand_value < value:
                accepted = (cand, cand_value)
                break
            step *= 0.5
        if accepted is None:
            break
        z, value = accepted
        iters = t + 1
        history.append(value)
        if collect_path:
            path.append(z.copy())
    return z, iters, value <= target, history, path


def _auto_eta_start(fn: ScalarField, z0: np.ndarray, spe0: float, cfg: AfrConfig) -> float:
    if cfg.norm == "l2":
        return max(0.25 * float(np.sqrt(max(spe0, 0.0))), 1e-3)
    if cfg.norm == "l1":
        return max(0.25 * float(np.sqrt(max(spe0, 0.0))), 1e-3)
    return 1.0  # l0 starts at one coordinate


def afr_pgd(index, x: np.ndarray, cfg: AfrConfig | None = None, *,
            objective: ScalarField | None = None,
            collect_path: bool = False) -> Reconstruction:
    """Reconstruct a sample by projected gradient descent on the fault index.

    x is a raw-coordinate sample; the result is reported in standardized
    coordinates. With cfg.eta=None the smallest feasible budget is located by
    doubling followed by eight bisection rounds.
    """
    cfg = cfg or AfrConfig()
    fn = _field_of(index, objective)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError("afr_pgd expects a single sample")
    z0 = fn.standardize(x)
    target = cfg.target if cfg.target is not None else index.target()
    spe0 = fn.value(z0)

    if spe0 <= target:
        return _make_reconstruction(
            z0, z0, spe0, spe0, 0, True, cfg.norm, cfg.eta,
            spe_history=[float(spe0)],
            path=np.asarray([z0]) if collect_path else None,
        )

    if cfg.eta is not None:
        z, iters, ok, history, path = _pgd_core(fn, z0, target, cfg, cfg.eta, collect_path)
        return _make_reconstruction(
            z0, z, spe0, history[-1], iters, ok, cfg.norm, cfg.eta,
            spe_history=[float(v) for v in history],
            path=None if path is None else np.asarray(path),
        )

    # auto budget: double until feasible, then bisect down
    if cfg.norm == "l0":
        n = z0.size
        for k in range(1, n + 1):
            z, iters, ok, history, path = _pgd_core(fn, z0, target, cfg, float(k), collect_path)
            if ok:
                break
        return _make_reconstruction(
            z0, z, spe0, history[-1], iters, ok, cfg.norm, float(k),
            spe_history=[float(v) for v in history],
            path=None if path is None else np.asarray(path),
        )

    eta = _auto_eta_start(fn, z0, spe0, cfg)
    best = None
    for _ in range(25):
        z, iters, ok, history, path = _pgd_core(fn, z0, target, cfg, eta, collect_path)
        if ok:
            best = (eta, z, iters, history, path)
            break
        eta *= 2.0
    if best is None:
        return _make_reconstruction(
            z0, z, spe0, history[-1], iters, False, cfg.norm, eta / 2.0,
            spe_history=[float(v) for v in history],
            path=None if path is None else np.asarray(path),
        )
    lo, hi = eta / 2.0, eta
    for _ in range(8):
        mid = 0.5 * (lo + hi)
        z, iters, ok, history, path = _pgd_core(fn, z0, target, cfg, mid, collect_path)
        if ok:
            hi = mid
            best = (mid, z, iters, history, path)
        else:
            lo = mid
    eta, z, iters, history, path = best
    return _make_reconstruction(
        z0, z, spe0, history[-1], iters, True, cfg.norm, eta,
        spe_history=[float(v) for v in history],
        path=None if path is None else np.asarray(path),
    )


def _golden_section(g, lo: float, hi: float, tol: float = 1e-8) -> float:
    """Minimize a 1-D function on [lo, hi] (assumes unimodal on the bracket)."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    gc, gd = g(c), g(d)
    while abs(b - a) > tol:
        if gc < gd:
            b, d, gd = d, c, gc
            c = b - invphi * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + invphi * (b - a)
            gd = g(d)
    return 0.5 * (a + b)


def _line_min(fn: ScalarField, z0: np.ndarray, i: int, bound: float = 10.0,
              coarse: int = 41) -> float:
    """Magnitude minimizing fn along coordinate i: coarse scan, then refine."""
    grid = np.linspace(-bound, bound, coarse)
    pts = np.tile(z0, (coarse, 1))
    pts[:, i] -= grid
    vals = fn.value_batch(pts)
    j = int(np.argmin(vals))
    lo = grid[max(j - 1, 0)]
    hi = grid[min(j + 1, coarse - 1)]

    def g(f):
        p = z0.copy()
        p[i] -= f
        return fn.value(p)

    return _golden_section(g, lo, hi)


def afr_onevar(index, x: np.ndarray, i: int, *, mode: str = "auto",
               objective: ScalarField | None = None,
               search_bound: float = 10.0) -> Reconstruction:
    """Reconstruct along a single coordinate direction.

    mode "closed" uses the exact PCA magnitude, "search" a bracketed golden
    section on the index value, "auto" picks closed form when available.
    """
    fn = _field_of(index, objective)
    x = np.asarray(x, dtype=np.float64)
    z0 = fn.standardize(x)
    n = z0.size
    if not 0 <= i < n:
        raise ParameterError(f"variable index {i} out of range [0, {n})")
    if mode not in ("auto", "closed", "search"):
        raise ParameterError(f"unknown mode {mode!r}")

    model = getattr(index, "model", None) or getattr(fn, "model", None)
    use_closed = mode == "closed" or (mode == "auto" and isinstance(model, PcaModel)
                                      and objective is None)
    spe0 = fn.value(z0)
    if use_closed:
        if not isinstance(model, PcaModel):
            raise ParameterError("closed-form magnitude needs a PCA model")
        resid = model.residual_projector
        denom = float(resid[i, i])
        if denom < 1e-12:
            raise SingularDirectionError(i)
        magnitude = float(resid[i] @ z0) / denom
    else:
        magnitude = float(_line_min(fn, z0, i, bound=search_bound))

    z = z0.copy()
    z[i] -= magnitude
    spe = fn.value(z)
    return _make_reconstruction(
        z0, z, spe0, spe, 0, True, "l0", 1.0,
        direction=int(i), magnitude=magnitude, spe_history=[float(spe0), float(spe)],
    )


def afr_onevar_all(index, x: np.ndarray, *, mode: str = "auto",
                   objective: ScalarField | None = None,
                   search_bound: float = 10.0) -> list[Reconstruction]:
    """One single-variable reconstruction per coordinate, in order."""
    fn = _field_of(index, objective)
    n = fn.standardize(np.asarray(x, dtype=np.float64)).size
    return [
        afr_onevar(index, x, i, mode=mode, objective=objective, search_bound=search_bound)
        for i in range(n)
    ]


def l0_exhaustive(index, x: np.ndarray, eta: int) -> Reconstruction:
    """Globally optimal sparse reconstruction on a PCA detector.

    Enumerates every support of size <= eta and solves each inner quadratic
    in closed form; exact at the sizes accepted here (eta <= 3, n <= 30).
    """
    fn = _field_of(index, None)
    model = getattr(index, "model", None)
    if not isinstance(model, PcaModel):
        raise ParameterError("exhaustive sparse reconstruction needs a PCA model")
    eta = int(eta)
    x = np.asarray(x, dtype=np.float64)
    z0 = fn.standardize(x)
    n = z0.size
    if not 1 <= eta <= 3:
        raise ParameterError(f"eta must be in [1, 3], got {eta}")
    if n > 30:
        raise ParameterError(f"exhaustive search capped at 30 variables, got {n}")

    resid = model.residual_projector
    rz = resid @ z0
    spe0 = float(z0 @ rz)
    best_spe = spe0
    best_z = z0
    best_support: tuple[int, ...] = ()
    skipped = 0
    for size in range(1, eta + 1):
        for subset in itertools.combinations(range(n), size):
            s = list(subset)
            gram = resid[np.ix_(s, s)]
            # eigenvalue floor guards subsets living in the principal subspace
            if size == 1:
                if gram[0, 0] < 1e-12:
                    skipped += 1
                    continue
                f = np.array([rz[s[0]] / gram[0, 0]])
            else:
                eigvals = np.linalg.eigvalsh(gram)
                if eigvals[0] < 1e-12:
                    skipped += 1
                    continue
                f = np.linalg.solve(gram, rz[s])
            z = z0.copy()
            z[s] -= f
            spe = float(fn.value(z))
            if spe < best_spe - 1e-15:
                best_spe = spe
                best_z = z
                best_support = subset

    extra = {"support": best_support, "skipped_subsets": skipped}
    if len(best_support) == 1:
        extra["direction"] = int(best_support[0])
        extra["magnitude"] = float(z0[best_support[0]] - best_z[best_support[0]])
    return _make_reconstruction(
        z0, best_z, spe0, best_spe, 0, True, "l0", float(eta),
        spe_history=[spe0, best_spe], **extra,
    )
