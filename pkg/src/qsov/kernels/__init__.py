"""Dense exact contraction kernels.

All tensor contractions in the package reduce to 2-D exact matrix
multiplies that land here.  At import time we pick the compiled Cython
kernel when it is built and the scalar backend is gmpy2; otherwise the
pure-Python implementation of the same algorithm is used.  Setting
``QSOV_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from ..exactnum import SCALAR_BACKEND
from . import _matmul_py

_matmul_impl = _matmul_py.matmul
_BACKEND = "python"

if SCALAR_BACKEND == "gmpy2" and os.environ.get("QSOV_PURE_PYTHON", "") != "1":
    try:
        from . import _matmul_cy

        _matmul_impl = _matmul_cy.matmul
        _BACKEND = "cython"
    except ImportError:
        pass


def backend() -> str:
    """Name of the active kernel backend: ``"cython"`` or ``"python"``."""
    return _BACKEND


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact (n,m) @ (m,p) product of object arrays of rationals."""
    return _matmul_impl(a, b)


def matmul_python(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Always-available pure implementation (used by the benchmark and tests)."""
    return _matmul_py.matmul(a, b)
