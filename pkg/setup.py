"""Build script: compiles the optional chain-kernel extension.

The package works without the extension (a numpy fallback is selected at
import time); set ABIGX_SKIP_EXT=1 to skip compilation entirely.
"""
import os

from setuptools import Extension, setup


def extensions():
    if os.environ.get("ABIGX_SKIP_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "abigx._kernels._chain_cy",
        ["src/abigx/_kernels/_chain_cy.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions())
