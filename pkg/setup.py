"""Build script: compiles the optional Cython quadrature core.

The package is fully functional without the extension (a NumPy fallback is
selected at import time).  Set MILDPRANDTL_PURE=1 to skip the build, e.g. on
machines without a C compiler.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("MILDPRANDTL_PURE") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "mildprandtl.kernels._corecy",
                    ["src/mildprandtl/kernels/_corecy.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # No Cython available: install the pure-NumPy package.
        ext_modules = []

setup(ext_modules=ext_modules)
