"""Build script: compiles the optional exact-contraction extension.

The package is fully functional without the extension (a pure-Python
kernel is selected at import time); building it just makes the dense
rational contractions several times faster.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import os

    import gmpy2
    import numpy
    from Cython.Build import cythonize

    gmpy2_dir = os.path.dirname(gmpy2.__file__)
    ext_modules = cythonize(
        [
            Extension(
                "qsov.kernels._matmul_cy",
                ["src/qsov/kernels/_matmul_cy.pyx"],
                include_dirs=[numpy.get_include(), gmpy2_dir],
                libraries=["gmp"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # noqa: BLE001 - extension is strictly optional
    print(f"qsov: skipping compiled kernel ({exc}); pure-Python fallback will be used")
    ext_modules = []

setup(ext_modules=ext_modules)
