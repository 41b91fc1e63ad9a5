"""Layer-chain kernels with backend selection.

The compiled extension is preferred when importable; otherwise the numpy
fallback is used. Set ABIGX_KERNELS=python or ABIGX_KERNELS=compiled to force
a backend (forcing "compiled" raises if the extension is missing).
"""
import os

_requested = os.environ.get("ABIGX_KERNELS", "").strip().lower()

if _requested in ("python", "py"):
    from . import _chain_py as _impl

    BACKEND = "python"
elif _requested in ("compiled", "c", "cython"):
    from . import _chain_cy as _impl  # type: ignore[attr-defined]

    BACKEND = "compiled"
elif _requested == "":
    try:
        from . import _chain_cy as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _chain_py as _impl

        BACKEND = "python"
else:
    raise ImportError(f"unknown ABIGX_KERNELS value: {_requested!r}")

chain_forward = _impl.chain_forward
chain_forward_cached = _impl.chain_forward_cached
chain_vjp = _impl.chain_vjp

__all__ = ["BACKEND", "chain_forward", "chain_forward_cached", "chain_vjp"]
