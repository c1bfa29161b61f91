"""Build script for the optional compiled evaluation kernels.

The package is fully functional without the extension (a NumPy fallback is
selected at import time); building it just makes the barrier solver's
constraint-evaluation hot path faster.
"""

from setuptools import setup

try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/wpcmaxmin/_kernels.pyx",
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
    include_dirs = [np.get_include()]
except ImportError:  # pragma: no cover - build environment without Cython
    ext_modules = []
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
