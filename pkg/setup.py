# Builds the optional Cython recurrence kernel. The package works without it
# (pure scipy fallback selected at import); build with
#   pip install -e . --no-build-isolation
import numpy as np
from setuptools import setup, Extension

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "specmesh.kernels._recurrence",
                ["src/specmesh/kernels/_recurrence.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
