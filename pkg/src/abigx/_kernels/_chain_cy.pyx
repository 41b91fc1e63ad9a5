# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled layer-chain kernels.

Same contract as _chain_py; the win is avoiding per-layer numpy dispatch
overhead on the small matrices this package runs on.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport tanh

cnp.import_array()


cdef _affine(double[:, ::1] a, double[:, ::1] w, double[::1] b, bint do_tanh):
    cdef Py_ssize_t batch = a.shape[0]
    cdef Py_ssize_t din = a.shape[1]
    cdef Py_ssize_t dout = w.shape[0]
    out_arr = np.empty((batch, dout), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double s
    for i in range(batch):
        for j in range(dout):
            s = b[j]
            for k in range(din):
                s += a[i, k] * w[j, k]
            out[i, j] = tanh(s) if do_tanh else s
    return out_arr


def chain_forward(list weights, list biases, tuple tanh_flags, x):
    """Forward pass; x is (batch, d0), returns (batch, d_last)."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t layer
    for layer in range(len(weights)):
        a = _affine(a, weights[layer], biases[layer], tanh_flags[layer])
    return a


def chain_forward_cached(list weights, list biases, tuple tanh_flags, x):
    """Forward pass that also returns each layer's output (post-activation)."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    acts = []
    cdef Py_ssize_t layer
    for layer in range(len(weights)):
        a = _affine(a, weights[layer], biases[layer], tanh_flags[layer])
        acts.append(a)
    return a, acts


def chain_vjp(list weights, tuple tanh_flags, list acts, v):
    """Vector-Jacobian product: seed v (batch, d_last) -> gradient (batch, d0)."""
    g_arr = np.ascontiguousarray(v, dtype=np.float64)
    cdef double[:, ::1] g
    cdef double[:, ::1] act
    cdef double[:, ::1] w
    cdef double[:, ::1] nxt
    cdef Py_ssize_t layer, i, j, k, batch, dout, din
    cdef double s, gi
    for layer in range(len(weights) - 1, -1, -1):
        g = g_arr
        batch = g.shape[0]
        dout = g.shape[1]
        if tanh_flags[layer]:
            act = acts[layer]
            scaled = np.empty((batch, dout), dtype=np.float64)
            nxt = scaled
            for i in range(batch):
                for j in range(dout):
                    nxt[i, j] = g[i, j] * (1.0 - act[i, j] * act[i, j])
            g_arr = scaled
            g = g_arr
        w = weights[layer]
        din = w.shape[1]
        back = np.empty((batch, din), dtype=np.float64)
        nxt = back
        for i in range(batch):
            for k in range(din):
                s = 0.0
                for j in range(dout):
                    s += g[i, j] * w[j, k]
                nxt[i, k] = s
        g_arr = back
    return g_arr
