"""Build script for the optional compiled core.

The package is fully functional without the extension (a numpy fallback is
selected at import time); the extension accelerates the triangular
fragmentation-gain kernels that dominate simulation runtime.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "aggfrag._core._tri_cy",
                ["src/aggfrag/_core/_tri_cy.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
