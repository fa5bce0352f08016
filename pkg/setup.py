"""Build the optional Cython kernel for resolvent-norm grids.

The package works without it (a pure-NumPy fallback is selected at import
time); the extension only accelerates the per-node smallest-singular-value
sweep.  Build in place with:

    python setup.py build_ext --inplace
"""

import warnings

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "qbl._smin_cy",
                sources=["src/qbl/_smin_cy.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": "3",
        },
    )
except ImportError as exc:  # pragma: no cover
    warnings.warn(f"Cython unavailable ({exc}); building pure-Python qbl only.")

setup(ext_modules=ext_modules)
