"""Pure-numpy layer-chain kernels (fallback backend).

Semantics must match _chain_cy exactly: a chain is a list of affine layers
(weights (d_out, d_in), biases (d_out,)) with a per-layer tanh flag.
"""
import numpy as np


def chain_forward(weights, biases, tanh_flags, x):
    """Forward pass; x is (batch, d0), returns (batch, d_last)."""
    a = x
    for w, b, flag in zip(weights, biases, tanh_flags):
        a = a @ w.T + b
        if flag:
            a = np.tanh(a)
    return a


def chain_forward_cached(weights, biases, tanh_flags, x):
    """Forward pass that also returns each layer's output (post-activation)."""
    acts = []
    a = x
    for w, b, flag in zip(weights, biases, tanh_flags):
        a = a @ w.T + b
        if flag:
            a = np.tanh(a)
        acts.append(a)
    return a, acts


def chain_vjp(weights, tanh_flags, acts, v):
    """Vector-Jacobian product: seed v (batch, d_last) -> gradient (batch, d0)."""
    g = v
    for k in range(len(weights) - 1, -1, -1):
        if tanh_flags[k]:
            g = g * (1.0 - acts[k] * acts[k])
        g = g @ weights[k]
    return g
