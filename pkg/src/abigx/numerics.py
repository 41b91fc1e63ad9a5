"""Dense symmetric eigensolver, seeded sampling, and a finite-difference oracle.

Everything here is double precision. The random stream is counter-based so
that a (seed, call sequence) pair reproduces bit-identical output across
processes and platforms.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .exceptions import (
    ConvergenceError,
    EvaluationError,
    ParameterError,
    ShapeError,
    SymmetryError,
)

__all__ = ["Rng", "sym_eig", "gaussian_sample", "finite_diff_grad"]

_U64 = np.uint64
_GAMMA = _U64(0x9E3779B97F4A7C15)
_MIX_A = _U64(0xBF58476D1CE4E5B9)
_MIX_B = _U64(0x94D049BB133111EB)
_SPAWN_SALT = _U64(0x632BE59BD9B4E019)


def _mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, vectorized over a uint64 array (wraps mod 2^64)."""
    z = (z ^ (z >> _U64(30))) * _MIX_A
    z = (z ^ (z >> _U64(27))) * _MIX_B
    return z ^ (z >> _U64(31))


class Rng:
    """Deterministic counter-based random stream.

    Output word i is splitmix64(seed + (i+1)*gamma); drawing only advances an
    integer counter, so streams are reproducible and cheap to fork. A single
    Rng instance must not be shared across threads.
    """

    __slots__ = ("seed", "counter")

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.counter = 0

    def _raw(self, n: int) -> np.ndarray:
        idx = np.arange(self.counter, self.counter + n, dtype=np.uint64)
        self.counter += n
        return _mix64(_U64(self.seed) + (idx + _U64(1)) * _GAMMA)

    def uniform(self, n: int) -> np.ndarray:
        """n doubles in [0, 1), 53-bit resolution."""
        return (self._raw(n) >> _U64(11)).astype(np.float64) * 2.0**-53

    def normal(self, mean: float, std: float, n: int) -> np.ndarray:
        """n Gaussian draws via Box-Muller on the uniform stream."""
        if std < 0:
            raise ParameterError(f"std must be >= 0, got {std}")
        if n < 0:
            raise ParameterError(f"n must be >= 0, got {n}")
        if std == 0.0:
            self._raw(2 * ((n + 1) // 2))  # keep the counter schedule identical
            return np.full(n, float(mean))
        pairs = (n + 1) // 2
        raw = self._raw(2 * pairs)
        # u1 in (0, 1] so the log is finite
        u1 = ((raw[:pairs] >> _U64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (raw[pairs:] >> _U64(11)).astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(2.0 * np.pi * u2)
        out[1::2] = r * np.sin(2.0 * np.pi * u2)
        return float(mean) + float(std) * out[:n]

    def normal_matrix(self, mean: float, std: float, shape: tuple[int, int]) -> np.ndarray:
        rows, cols = shape
        return self.normal(mean, std, rows * cols).reshape(rows, cols)

    def uniform_symmetric(self, scale: float, n: int) -> np.ndarray:
        """n draws uniform on [-scale, scale]."""
        return (2.0 * self.uniform(n) - 1.0) * float(scale)

    def integers(self, low: int, high: int, n: int) -> np.ndarray:
        """n integers uniform on [low, high)."""
        if high <= low:
            raise ParameterError(f"empty integer range [{low}, {high})")
        return (low + np.floor(self.uniform(n) * (high - low))).astype(np.int64)

    def spawn(self, key: int) -> "Rng":
        """Independent child stream; the same (seed, key) always yields the same child."""
        k = np.array([int(key) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
        z = _U64(self.seed) ^ _mix64((k + _U64(1)) * _GAMMA + _SPAWN_SALT)
        return Rng(int(_mix64(z)[0]))


def gaussian_sample(rng: Rng, mean: float, std: float, n: int) -> np.ndarray:
    """Seeded Gaussian vector of length n (std = 0 gives a constant vector)."""
    return rng.normal(mean, std, n)


def _check_square_symmetric(a: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if float(np.abs(a - a.T).max(initial=0.0)) > 1e-10 * scale:
        raise SymmetryError("matrix is not symmetric within 1e-10 relative tolerance")
    if not np.isfinite(a).all():
        raise EvaluationError("matrix contains non-finite entries")
    return 0.5 * (a + a.T)


def sym_eig(
    m: np.ndarray, *, off_tol: float = 1e-12, max_sweeps: int = 60
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvalues sorted descending and
    eigenvectors as orthonormal columns. Sweeps run until the off-diagonal
    Frobenius norm drops below off_tol.
    """
    a = _check_square_symmetric(np.asarray(m, dtype=np.float64))
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v

    for _ in range(max_sweeps):
        off_diag = a - np.diag(a.diagonal())
        off = float(np.sqrt(np.sum(np.square(off_diag))))
        if off < off_tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) * 1e150 < abs(diff):
                    # vanishing rotation angle; the direct formula would overflow
                    t = apq / diff
                else:
                    tau = diff / (2.0 * apq)
                    if tau >= 0:
                        t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                    else:
                        t = 1.0 / (tau - np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # two-sided rotation in the (p, q) plane
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise ConvergenceError(
            f"Jacobi sweeps did not reduce the off-diagonal norm below {off_tol} "
            f"in {max_sweeps} sweeps"
        )

    order = np.argsort(-a.diagonal(), kind="stable")
    return a.diagonal()[order].copy(), v[:, order].copy()


def finite_diff_grad(
    f: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient estimate, one coordinate at a time.

    Independent of any analytic gradient path; used as the oracle that every
    model gradient in this package is tested against.
    """
    if h <= 0:
        raise ParameterError(f"step h must be > 0, got {h}")
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        hi = float(f(x + step))
        lo = float(f(x - step))
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise EvaluationError(f"objective non-finite at coordinate {i}")
        grad[i] = (hi - lo) / (2.0 * h)
    return grad
